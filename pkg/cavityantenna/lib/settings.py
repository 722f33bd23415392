import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from cavityantenna.lib.errors import ValidationError

ENV_MATERIAL_DIR = 'CAVITYANTENNA_MATERIAL_DIR'
ENV_THREADS = 'CAVITYANTENNA_THREADS'
ENV_LOG_LEVEL = 'CAVITYANTENNA_LOG_LEVEL'


@dataclass(frozen=True)
class Settings:
    """
    Process-wide defaults, read from the environment (and a local .env file)
    """
    material_dir: Optional[str] = None
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    log_level: str = 'INFO'

    def updated(self, **changes: Any) -> 'Settings':
        unknown = set(changes) - {'material_dir', 'threads', 'log_level'}
        if unknown:
            raise ValidationError('unknown settings', sorted(unknown))
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return {'material_dir': self.material_dir, 'threads': self.threads, 'log_level': self.log_level}


def load_settings(dotenv_path: Optional[str] = None, environ: Optional[Dict[str, str]] = None) -> Settings:
    """
    Build Settings from environment variables; a .env file fills in what is unset
    """
    if environ is None:
        load_dotenv(dotenv_path=dotenv_path, override=False)
        environ = os.environ

    settings = Settings()
    threads = environ.get(ENV_THREADS)
    if threads:
        try:
            threads = int(threads)
        except ValueError:
            raise ValidationError(f"{ENV_THREADS} must be an integer, got '{threads}'")
        if threads < 1:
            raise ValidationError(f"{ENV_THREADS} must be >= 1")
        settings = settings.updated(threads=threads)

    return settings.updated(
        material_dir=environ.get(ENV_MATERIAL_DIR) or None,
        log_level=environ.get(ENV_LOG_LEVEL) or None,
    )
