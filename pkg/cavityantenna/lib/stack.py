"""
Planar geometry: two half spaces, finite layers and the embedded dipole.

The z axis points from the lower to the upper half space. `layers_above` is
ordered top-down (first entry touches the upper half space), `layers_below`
is ordered top-down as well (first entry touches the host layer). The dipole
depth d is measured from the upper interface of the host layer.
"""

import json
import math
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Tuple, Union

from cavityantenna.lib.errors import OutOfRangeError, ValidationError
from cavityantenna.lib.materials import Material, get_material, index_at, with_absorption


@dataclass(frozen=True)
class Layer:
    material: Material
    thickness_nm: float


@dataclass(frozen=True)
class DipoleSource:
    """
    Emission wavelength, polar angle between dipole axis and stack normal, depth below the host top
    """
    wavelength_nm: float
    polar_angle_deg: float
    depth_nm: float


@dataclass(frozen=True)
class Stack:
    upper: Material
    layers_above: Tuple[Layer, ...]
    host: Layer
    layers_below: Tuple[Layer, ...]
    lower: Material
    dipole: DipoleSource

    @property
    def wavelength_nm(self) -> float:
        return self.dipole.wavelength_nm

    @property
    def t0(self) -> float:
        return self.host.thickness_nm

    def materials(self) -> List[Material]:
        """Every distinct material of the stack, top-down"""
        seen = []
        for material in [self.upper, *(l.material for l in self.layers_above), self.host.material,
                         *(l.material for l in self.layers_below), self.lower]:
            if material not in seen:
                seen.append(material)
        return seen


@dataclass(frozen=True)
class Substack:
    """
    Mirror seen from the emitter: incidence medium (the host), the finite layers
    in the order light meets them, the exit half space, and the emitter distance
    to the first interface.
    """
    incidence: Material
    layers: Tuple[Layer, ...]
    exit: Material
    distance_nm: float = 0.0

    def reversed(self) -> 'Substack':
        """The same layer sequence traversed from the exit side"""
        return Substack(self.exit, tuple(reversed(self.layers)), self.incidence, 0.0)


def validate(stack: Stack) -> List[str]:
    """
    List of invariant violations, empty when the stack is valid
    """
    violations = []

    for label, layers in (('layers_above', stack.layers_above), ('layers_below', stack.layers_below)):
        for i, layer in enumerate(layers):
            if not (math.isfinite(layer.thickness_nm) and layer.thickness_nm > 0):
                violations.append(f"{label}[{i}].thickness_nm must be > 0 and finite")

    if not (math.isfinite(stack.host.thickness_nm) and stack.host.thickness_nm > 0):
        violations.append("host.thickness_nm must be > 0 and finite")

    dipole = stack.dipole
    if not dipole.wavelength_nm > 0:
        violations.append("dipole.wavelength_nm must be > 0")
    if not 0 <= dipole.polar_angle_deg <= 90:
        violations.append("dipole.polar_angle_deg must be in [0, 90]")
    if not dipole.depth_nm > 0:
        violations.append("dipole.depth_nm must be > 0")
    elif dipole.depth_nm >= stack.host.thickness_nm:
        violations.append("dipole.depth_nm must be < host.thickness_nm")

    if dipole.wavelength_nm > 0:
        for label, material in (('collection', stack.upper), ('lower', stack.lower)):
            try:
                k = index_at(material, dipole.wavelength_nm).k
            except OutOfRangeError as e:
                violations.append(str(e))
                continue
            if k > 0:
                if label == 'collection':
                    violations.append("collection half space must be transparent")
                else:
                    violations.append("lower half space must be transparent")
        for layer in (*stack.layers_above, stack.host, *stack.layers_below):
            try:
                index_at(layer.material, dipole.wavelength_nm)
            except OutOfRangeError as e:
                violations.append(str(e))

    return violations


def ensure_valid(stack: Stack) -> Stack:
    violations = validate(stack)
    if violations:
        raise ValidationError('invalid stack', violations)
    return stack


def split_at_dipole(stack: Stack) -> Tuple[Substack, Substack]:
    """
    (upper, lower) mirrors as seen from the emitter, distances d and t0 - d
    """
    ensure_valid(stack)
    host = stack.host.material
    upper = Substack(host, tuple(reversed(stack.layers_above)), stack.upper, stack.dipole.depth_nm)
    lower = Substack(host, tuple(stack.layers_below), stack.lower,
                     stack.host.thickness_nm - stack.dipole.depth_nm)
    return upper, lower


def reassemble(upper: Substack, lower: Substack, wavelength_nm: float, polar_angle_deg: float) -> Stack:
    """
    Inverse of split_at_dipole
    """
    if upper.incidence != lower.incidence:
        raise ValidationError('both substacks must start in the same host material')
    host = Layer(upper.incidence, upper.distance_nm + lower.distance_nm)
    return Stack(
        upper=upper.exit,
        layers_above=tuple(reversed(upper.layers)),
        host=host,
        layers_below=tuple(lower.layers),
        lower=lower.exit,
        dipole=DipoleSource(wavelength_nm, polar_angle_deg, upper.distance_nm),
    )


def flipped(stack: Stack) -> Stack:
    """
    The stack mirrored at the dipole plane's normal: lower half space becomes the upper one
    """
    return Stack(
        upper=stack.lower,
        layers_above=tuple(reversed(stack.layers_below)),
        host=stack.host,
        layers_below=tuple(reversed(stack.layers_above)),
        lower=stack.upper,
        dipole=replace(stack.dipole, depth_nm=stack.host.thickness_nm - stack.dipole.depth_nm),
    )


def full_substack(stack: Stack) -> Substack:
    """
    The whole stack as seen by a plane wave arriving from the upper half space
    """
    return Substack(stack.upper, (*stack.layers_above, stack.host, *stack.layers_below), stack.lower)


PARAMETERS = ('t0', 'd', 't1', 't2', 't1p', 'theta_deg', 'wavelength_nm')


def with_params(stack: Stack, **params: float) -> Stack:
    """
    Copy of `stack` with geometry or source parameters replaced.

    t0: host thickness, d: dipole depth, t1/t2: first/second layer above the host,
    t1p: first layer below the host, theta_deg: dipole polar angle,
    wavelength_nm: emission wavelength.
    """
    unknown = set(params) - set(PARAMETERS)
    if unknown:
        raise ValidationError('unknown stack parameters', sorted(unknown))

    above = list(stack.layers_above)
    below = list(stack.layers_below)

    def _resize(layers: List[Layer], index: int, value: float, label: str):
        if not 0 <= index < len(layers):
            raise ValidationError(f"stack has no layer for parameter '{label}'")
        layers[index] = replace(layers[index], thickness_nm=float(value))

    if 't1' in params:
        _resize(above, len(above) - 1, params['t1'], 't1')
    if 't2' in params:
        if len(above) < 2:
            raise ValidationError("stack has no layer for parameter 't2'")
        _resize(above, len(above) - 2, params['t2'], 't2')
    if 't1p' in params:
        _resize(below, 0, params['t1p'], 't1p')

    host = stack.host
    if 't0' in params:
        host = replace(host, thickness_nm=float(params['t0']))

    dipole = stack.dipole
    if 'd' in params:
        dipole = replace(dipole, depth_nm=float(params['d']))
    if 'theta_deg' in params:
        dipole = replace(dipole, polar_angle_deg=float(params['theta_deg']))
    if 'wavelength_nm' in params:
        dipole = replace(dipole, wavelength_nm=float(params['wavelength_nm']))

    return replace(stack, layers_above=tuple(above), host=host, layers_below=tuple(below), dipole=dipole)


def _layer_from_dict(entry: Dict[str, Any], material_dir: Optional[str], label: str) -> Layer:
    try:
        material = get_material(entry['material'], material_dir)
        thickness = float(entry['t_nm'])
    except (KeyError, TypeError) as e:
        raise ValidationError(f"{label} needs 'material' and 't_nm' ({e})")
    if entry.get('kappa'):
        material = with_absorption(material, float(entry['kappa']))
    return Layer(material, thickness)


def load_stack(source: Union[str, os.PathLike, Dict[str, Any]], material_dir: Optional[str] = None) -> Stack:
    """
    Stack from the JSON schema

        {"upper": m, "layers_above": [{"material": m, "t_nm": x}, ...], "host": {...},
         "layers_below": [...], "lower": m,
         "dipole": {"lambda_nm": x, "theta_deg": x, "d_nm": x}}

    Layer entries may carry an optional "kappa" absorption floor.
    """
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"stack file {source} is not valid JSON ({e})")

    missing = [key for key in ('upper', 'host', 'lower', 'dipole') if key not in data]
    if missing:
        raise ValidationError('stack document is missing keys', missing)

    try:
        dipole = DipoleSource(
            wavelength_nm=float(data['dipole']['lambda_nm']),
            polar_angle_deg=float(data['dipole']['theta_deg']),
            depth_nm=float(data['dipole']['d_nm']),
        )
    except (KeyError, TypeError) as e:
        raise ValidationError(f"dipole needs lambda_nm, theta_deg and d_nm ({e})")

    return Stack(
        upper=get_material(data['upper'], material_dir),
        layers_above=tuple(_layer_from_dict(e, material_dir, f"layers_above[{i}]")
                           for i, e in enumerate(data.get('layers_above', []))),
        host=_layer_from_dict(data['host'], material_dir, 'host'),
        layers_below=tuple(_layer_from_dict(e, material_dir, f"layers_below[{i}]")
                           for i, e in enumerate(data.get('layers_below', []))),
        lower=get_material(data['lower'], material_dir),
        dipole=dipole,
    )


def _layer_to_dict(layer: Layer) -> Dict[str, Any]:
    entry = {'material': layer.material.name, 't_nm': layer.thickness_nm}
    if layer.material.kappa_floor:
        entry['kappa'] = layer.material.kappa_floor
    return entry


def stack_to_dict(stack: Stack) -> Dict[str, Any]:
    return {
        'upper': stack.upper.name,
        'layers_above': [_layer_to_dict(l) for l in stack.layers_above],
        'host': _layer_to_dict(stack.host),
        'layers_below': [_layer_to_dict(l) for l in stack.layers_below],
        'lower': stack.lower.name,
        'dipole': {
            'lambda_nm': stack.dipole.wavelength_nm,
            'theta_deg': stack.dipole.polar_angle_deg,
            'd_nm': stack.dipole.depth_nm,
        },
    }
