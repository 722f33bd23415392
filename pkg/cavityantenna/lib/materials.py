"""
Complex refractive indices of the media in a stack.

A material is either a constant index or a table of (wavelength_nm, n, k)
rows; tables are interpolated linearly in n and k separately. All values are
passive (n > 0, k >= 0).
"""

import json
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from cavityantenna.lib.errors import OutOfRangeError, ValidationError


@dataclass(frozen=True)
class ComplexIndex:
    """
    n + ik with n > 0 and k >= 0
    """
    n: float
    k: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.n) or not np.isfinite(self.k):
            raise ValidationError(f"refractive index must be finite, got {self.n} + {self.k}i")
        if self.n <= 0:
            raise ValidationError(f"real part n must be > 0, got {self.n}")
        if self.k < 0:
            raise ValidationError(f"extinction coefficient k must be >= 0, got {self.k}")

    @property
    def value(self) -> complex:
        return complex(self.n, self.k)

    @classmethod
    def from_complex(cls, value: complex) -> 'ComplexIndex':
        return cls(float(np.real(value)), float(np.imag(value)))

    def __complex__(self) -> complex:
        return self.value


@dataclass(frozen=True)
class Material:
    """
    Named refractive-index model: a constant index or a (wavelength_nm, n, k) table.
    `kappa_floor` is a lower bound on k applied at lookup time.
    """
    name: str
    constant: Optional[ComplexIndex] = None
    table: Optional[Tuple[Tuple[float, float, float], ...]] = None
    kappa_floor: float = 0.0

    def __post_init__(self):
        if (self.constant is None) == (self.table is None):
            raise ValidationError(f"material '{self.name}' needs exactly one of constant or table")
        if self.table is not None:
            rows = np.asarray(self.table, dtype=float)
            if rows.ndim != 2 or rows.shape[1] != 3:
                raise ValidationError(f"material '{self.name}': table rows must be (wavelength_nm, n, k)")
            if len(rows) < 2:
                raise ValidationError(f"material '{self.name}': a table needs at least 2 rows")
            if np.any(np.diff(rows[:, 0]) <= 0):
                raise ValidationError(f"material '{self.name}': table wavelengths must be strictly increasing")
            if np.any(rows[:, 1] <= 0) or np.any(rows[:, 2] < 0):
                raise ValidationError(f"material '{self.name}': table needs n > 0 and k >= 0")
        if self.kappa_floor < 0:
            raise ValidationError(f"material '{self.name}': kappa must be >= 0")

    @property
    def is_tabulated(self) -> bool:
        return self.table is not None

    @property
    def wavelength_range(self) -> Tuple[float, float]:
        if self.table is None:
            return (0.0, float('inf'))
        return (self.table[0][0], self.table[-1][0])


def index_at(material: Material, wavelength_nm: float) -> ComplexIndex:
    """
    Complex index of `material` at `wavelength_nm`
    """
    if not wavelength_nm > 0:
        raise ValidationError(f"wavelength must be positive, got {wavelength_nm}")

    if material.constant is not None:
        n, k = material.constant.n, material.constant.k
    else:
        rows = np.asarray(material.table, dtype=float)
        lower, upper = rows[0, 0], rows[-1, 0]
        if wavelength_nm < lower or wavelength_nm > upper:
            raise OutOfRangeError(material.name, wavelength_nm, lower, upper)
        n = float(np.interp(wavelength_nm, rows[:, 0], rows[:, 1]))
        k = float(np.interp(wavelength_nm, rows[:, 0], rows[:, 2]))

    return ComplexIndex(n, max(k, material.kappa_floor))


def complex_index(material: Material, wavelength_nm: float) -> complex:
    return index_at(material, wavelength_nm).value


def with_absorption(material: Material, kappa: float) -> Material:
    """
    Material whose extinction coefficient is max(original k, kappa) everywhere
    """
    if kappa < 0:
        raise ValidationError(f"kappa must be >= 0, got {kappa}")
    if kappa <= material.kappa_floor:
        return material
    return replace(material, kappa_floor=float(kappa))


def constant(name: str, n: float, k: float = 0.0) -> Material:
    return Material(name=name, constant=ComplexIndex(n, k))


def tabulated(name: str, rows: Sequence[Sequence[float]]) -> Material:
    return Material(name=name, table=tuple(tuple(float(v) for v in row) for row in rows))


DIAMOND_AT_620 = 2.414
SILVER_AT_620 = (0.05, 4.21)
SILVER_EPSILON_INF = 5.0


def _diamond_sellmeier_table() -> Tuple[Tuple[float, float, float], ...]:
    """
    Sellmeier diamond rescaled onto 2.414 at 620 nm
    """
    wavelengths = np.arange(300.0, 1001.0, 1.0)
    lam2 = (wavelengths / 1000.0) ** 2
    n = np.sqrt(1 + 4.3356 * lam2 / (lam2 - 0.1060 ** 2) + 0.3306 * lam2 / (lam2 - 0.1750 ** 2))
    at_620 = wavelengths == 620.0
    n = n * (DIAMOND_AT_620 / n[at_620][0])
    n[at_620] = DIAMOND_AT_620
    return tuple((float(w), float(v), 0.0) for w, v in zip(wavelengths, n))


def _silver_drude_table() -> Tuple[Tuple[float, float, float], ...]:
    """
    Drude silver (epsilon_inf = 5) whose plasma frequency and damping put it exactly
    on the 0.05 + 4.21i literature index at 620 nm
    """
    target = complex(*SILVER_AT_620)
    excess = SILVER_EPSILON_INF - target ** 2
    damping = -excess.imag / excess.real
    strength = (excess * (1 + 1j * damping)).real

    wavelengths = np.arange(300.0, 1001.0, 1.0)
    w = 620.0 / wavelengths
    index = np.sqrt(SILVER_EPSILON_INF - strength / (w ** 2 + 1j * damping * w))
    rows = [(float(lam), float(v.real), float(v.imag)) for lam, v in zip(wavelengths, index)]
    rows[int(np.flatnonzero(wavelengths == 620.0)[0])] = (620.0, *SILVER_AT_620)
    return tuple(rows)


PRESETS: Dict[str, Material] = {
    'vacuum': constant('vacuum', 1.0),
    'air': constant('air', 1.0),
    'diamond': constant('diamond', DIAMOND_AT_620),
    'silver-literature': Material(name='silver-literature', table=_silver_drude_table()),
    'silica': constant('silica', 1.464),
    'silver-thin-measured': constant('silver-thin-measured', 0.15, 3.95),
    'silver-thick-measured': constant('silver-thick-measured', 0.07, 4.10),
    'silica-measured': constant('silica-measured', 1.45),
    'diamond-sellmeier': Material(name='diamond-sellmeier', table=_diamond_sellmeier_table()),
}


def load_material(source: Union[str, os.PathLike, Dict[str, Any]]) -> Material:
    """
    Material from a JSON document or an already parsed dict:
    {"name": str, "constant": [n, k]} or {"name": str, "table": [[lambda_nm, n, k], ...]}
    """
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"material file {source} is not valid JSON ({e})")

    name = data.get('name')
    if not isinstance(name, str) or not name:
        raise ValidationError("material document needs a non-empty 'name'")

    if 'constant' in data:
        values = list(data['constant'])
        if len(values) not in (1, 2):
            raise ValidationError(f"material '{name}': constant must be [n, k]")
        return constant(name, float(values[0]), float(values[1]) if len(values) == 2 else 0.0)
    if 'table' in data:
        return tabulated(name, data['table'])
    raise ValidationError(f"material '{name}' needs 'constant' or 'table'")


def material_to_dict(material: Material) -> Dict[str, Any]:
    if material.constant is not None:
        return {'name': material.name, 'constant': [material.constant.n, material.constant.k]}
    return {'name': material.name, 'table': [list(row) for row in material.table]}


def get_material(name: str, material_dir: Optional[str] = None) -> Material:
    """
    Look up a material by name: built-in presets first, then <material_dir>/<name>.json
    """
    if name in PRESETS:
        return PRESETS[name]

    if material_dir:
        path = os.path.join(material_dir, f"{name}.json")
        if os.path.isfile(path):
            material = load_material(path)
            if material.name != name:
                material = replace(material, name=name)
            return material

    known = ', '.join(sorted(PRESETS))
    raise ValidationError(f"unknown material '{name}' (presets: {known})")


def spp_effective_index(metal: Material, dielectric: Material, wavelength_nm: float) -> complex:
    """
    Effective index of the surface plasmon polariton bound to a metal/dielectric interface
    """
    eps_m = complex_index(metal, wavelength_nm) ** 2
    eps_d = complex_index(dielectric, wavelength_nm) ** 2
    if (eps_m + eps_d).real >= 0:
        raise ValidationError(
            f"'{metal.name}'/'{dielectric.name}' does not support a bound surface plasmon at {wavelength_nm:g} nm"
        )
    n_spp = np.sqrt(eps_m * eps_d / (eps_m + eps_d))
    return complex(n_spp if n_spp.imag >= 0 else -n_spp)
