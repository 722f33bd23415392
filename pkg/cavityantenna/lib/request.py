from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from cavityantenna.lib.errors import ValidationError
from cavityantenna.lib.stack import Stack, load_stack

COMMANDS = (
    'reflectance', 'spectrum', 'farfield', 'xi', 'modes', 'resonance', 'sweep', 'optimize',
    'fit-sat', 'fit-g2', 'thickness', 'gradient-report', 'working-point', 'budget', 'fit-line', 'stats',
)


@dataclass
class RunConfig:
    """
    One command invocation: which command, its stack file, where results go,
    and the command-specific options
    """
    command: str
    stack_file: Optional[str] = None
    output_dir: str = '.'
    options: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    threads: Optional[int] = None
    material_dir: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command '{self.command}'")
        self._stack: Optional[Stack] = None

    def get(self, name: str, default: Any = None) -> Any:
        """Option value, falling back to `default` when unset or None"""
        value = self.options.get(name)
        return default if value is None else value

    def require(self, name: str) -> Any:
        value = self.options.get(name)
        if value is None:
            raise ValidationError(f"command '{self.command}' needs option '{name}'")
        return value

    @property
    def stack(self) -> Stack:
        """The parsed stack file, loaded once"""
        if self._stack is None:
            if not self.stack_file:
                raise ValidationError(f"command '{self.command}' needs a stack file")
            self._stack = load_stack(self.stack_file, self.material_dir)
        return self._stack

    def as_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'stack_file': self.stack_file,
            'output_dir': self.output_dir,
            'options': {k: list(v) if isinstance(v, tuple) else v for k, v in self.options.items()},
            'seed': self.seed,
            'threads': self.threads,
            'material_dir': self.material_dir,
        }
