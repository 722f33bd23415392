import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from cavityantenna.lib.errors import ExitStatus
from cavityantenna.lib.materials import Material, index_at

FLOAT_FORMAT = '%.9g'


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays, complex numbers and tuples turned into plain JSON types"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, 'value') and hasattr(value, 'name') and not isinstance(value, (str, int, float)):
        return value.value
    return value


class ResultWriter:
    """
    Collects the artifacts of one command run in its output directory.
    Every method returns the writer so calls chain.
    """

    def __init__(self, output_dir: str = '.', engine=None):
        self.output_dir = output_dir
        self.engine = engine
        self.status_code = ExitStatus.OK
        self.artifacts: List[str] = []
        self.summary: Dict[str, Any] = {}
        self._is_finished = False

    def _path(self, name: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    def _record(self, path: str):
        if self._is_finished:
            raise RuntimeError('result writer already finished')
        if path not in self.artifacts:
            self.artifacts.append(path)

    def status(self, code: int):
        self.status_code = code
        return self

    def send(self, data: Dict[str, Any]):
        """Attach a short summary echoed by the command line"""
        self.summary.update(to_jsonable(data))
        return self

    def csv(self, name: str, frame: pd.DataFrame, metadata: Optional[Dict[str, Any]] = None):
        """
        CSV with '#'-prefixed metadata lines, floats printed with 9 significant digits
        """
        path = self._path(name)
        self._record(path)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            for key, value in (metadata or {}).items():
                f.write(f"# {key}: {json.dumps(to_jsonable(value), sort_keys=True)}\n")
            frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return self

    def json(self, name: str, data: Any):
        path = self._path(name)
        self._record(path)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(json.dumps(to_jsonable(data), indent=2, sort_keys=True))
            f.write('\n')
        return self

    def report(self, name: str, template: str, context: Dict[str, Any]):
        """Text report rendered from a package template"""
        if self.engine is None:
            from cavityantenna.lib.template import get_default_engine
            self.engine = get_default_engine()
        path = self._path(name)
        self._record(path)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.engine.render(template, context))
        return self

    def manifest(self, config, materials: Sequence[Material] = (), wavelengths_nm: Sequence[float] = (),
                 extra: Optional[Dict[str, Any]] = None):
        """
        manifest.json: resolved configuration, material indices at the run
        wavelengths, artifact version and the files written so far
        """
        from cavityantenna import __version__

        material_values = {}
        for material in materials:
            values = {}
            for wavelength in wavelengths_nm:
                try:
                    index = index_at(material, wavelength)
                except ValueError:
                    continue
                values[f"{wavelength:g}"] = {'n': index.n, 'k': index.k}
            material_values[material.name] = values

        data = {
            'config': config.as_dict() if hasattr(config, 'as_dict') else config,
            'materials': material_values,
            'version': __version__,
            'status': self.status_code,
            'artifacts': [os.path.basename(p) for p in self.artifacts],
        }
        data.update(extra or {})
        return self.json('manifest.json', data)

    def end(self):
        self._is_finished = True
        return self
