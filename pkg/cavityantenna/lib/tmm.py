"""
Transfer-matrix electromagnetics of planar substacks.

Every function is vectorized over the effective index n_eff = k_par/k_0.
Internally p polarization is carried by the tangential magnetic field, with
admittances q = k_z (s) and q = k_z/n^2 (p). Public coefficients follow the
electric-field convention in which r_p equals r_s at normal incidence.
"""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from cavityantenna.lib.errors import ValidationError
from cavityantenna.lib.log import get_logger
from cavityantenna.lib.materials import ComplexIndex, complex_index
from cavityantenna.lib.stack import Stack, Substack, full_substack

logger = get_logger(__name__)

OVERFLOW_BOUND = 1e100

ArrayLike = Union[float, Sequence[float], np.ndarray]


class Polarization(str, Enum):
    S = 's'
    P = 'p'

    @classmethod
    def parse(cls, value: Union[str, 'Polarization']) -> 'Polarization':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(f"polarization must be 's' or 'p', got '{value}'")


@dataclass(frozen=True)
class PlaneWaveChannel:
    """
    Plane-wave channel: wavelength, effective index n_eff = k_par/k_0 (scalar or array), polarization
    """
    wavelength_nm: float
    n_parallel: ArrayLike
    polarization: Polarization = Polarization.S

    @property
    def k0(self) -> float:
        return wavenumber(self.wavelength_nm)


@dataclass(frozen=True)
class StackCoefficients:
    r: Union[complex, np.ndarray]
    t: Union[complex, np.ndarray]
    kz_in: Union[complex, np.ndarray]
    kz_out: Union[complex, np.ndarray]
    n_in: complex
    n_out: complex
    polarization: Polarization

    @property
    def reflectance(self):
        return np.abs(self.r) ** 2

    @property
    def transmittance(self):
        """Power transmission, zero when the exit medium is evanescent"""
        if self.polarization is Polarization.S:
            return np.abs(self.t) ** 2 * np.real(self.kz_out) / np.real(self.kz_in)
        t_h = self.t * self.n_out / self.n_in
        flux_out = np.real(self.kz_out / self.n_out ** 2)
        flux_in = np.real(self.kz_in / self.n_in ** 2)
        return np.abs(t_h) ** 2 * flux_out / flux_in


class RawCoefficients(NamedTuple):
    """Magnetic-field convention coefficients, consumed by the emission engine"""
    r: np.ndarray
    t: np.ndarray
    kz_in: np.ndarray
    kz_out: np.ndarray
    q_in: np.ndarray
    q_out: np.ndarray


def wavenumber(wavelength_nm: float) -> float:
    return 2 * np.pi / wavelength_nm


def normal_wavenumber(n: complex, n_eff: ArrayLike, k0: float) -> np.ndarray:
    """
    k_z = k_0 sqrt(n^2 - n_eff^2) on the branch Im(k_z) >= 0
    """
    n_eff = np.asarray(n_eff, dtype=float)
    kz_value = k0 * np.sqrt(complex(n) ** 2 - n_eff ** 2 + 0j)
    return np.where(kz_value.imag < 0, -kz_value, kz_value)


def kz(index: Union[ComplexIndex, complex], channel: PlaneWaveChannel):
    value = normal_wavenumber(complex(index), channel.n_parallel, channel.k0)
    return value.item() if value.ndim == 0 else value


def _admittance(n: complex, kz_value: np.ndarray, polarization: Polarization) -> np.ndarray:
    if polarization is Polarization.S:
        return kz_value
    return kz_value / complex(n) ** 2


def _interface(q1: np.ndarray, q2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    total = q1 + q2
    return (q1 - q2) / total, 2 * q1 / total


def _matrix_composition(kzs, qs, thicknesses):
    r01, t01 = _interface(qs[0], qs[1])
    m = np.empty(r01.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = 1 / t01
    m[..., 0, 1] = r01 / t01
    m[..., 1, 0] = r01 / t01
    m[..., 1, 1] = 1 / t01

    for j, thickness in enumerate(thicknesses, start=1):
        delta = kzs[j] * thickness
        r, t = _interface(qs[j], qs[j + 1])
        back, forward = np.exp(-1j * delta), np.exp(1j * delta)
        step = np.empty_like(m)
        step[..., 0, 0] = back / t
        step[..., 0, 1] = back * r / t
        step[..., 1, 0] = forward * r / t
        step[..., 1, 1] = forward / t
        m = np.matmul(m, step)

    return m[..., 1, 0] / m[..., 0, 0], 1 / m[..., 0, 0], m


def _recursive_composition(kzs, qs, thicknesses):
    n_layers = len(thicknesses)
    gamma, tau = _interface(qs[n_layers], qs[n_layers + 1])
    for j in range(n_layers - 1, -1, -1):
        r, t = _interface(qs[j], qs[j + 1])
        phase = np.exp(1j * kzs[j + 1] * thicknesses[j])
        denominator = 1 + r * gamma * phase ** 2
        tau = t * tau * phase / denominator
        gamma = (r + gamma * phase ** 2) / denominator
    return gamma, tau


def compose(indices: Sequence[complex], thicknesses: Sequence[float], n_eff: ArrayLike,
            k0: float, polarization: Polarization) -> RawCoefficients:
    """
    Generalized r, t of the layer sequence indices[0] | layers | indices[-1]
    in the magnetic-field convention
    """
    if len(indices) != len(thicknesses) + 2:
        raise ValueError('need one index per finite layer plus incidence and exit media')

    n_eff = np.atleast_1d(np.asarray(n_eff, dtype=float))
    kzs = [normal_wavenumber(n, n_eff, k0) for n in indices]
    qs = [_admittance(n, kz_value, polarization) for n, kz_value in zip(indices, kzs)]

    if not thicknesses:
        r, t = _interface(qs[0], qs[1])
    else:
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            r, t, m = _matrix_composition(kzs, qs, thicknesses)
            magnitude = np.abs(m).reshape(m.shape[:-2] + (4,)).max(axis=-1)
            unstable = ~np.isfinite(magnitude) | (magnitude > OVERFLOW_BOUND) | ~np.isfinite(r) | ~np.isfinite(t)
        if np.any(unstable):
            logger.debug('transfer matrix overflow on %d channels, using layer recursion', int(unstable.sum()))
            r_rec, t_rec = _recursive_composition(kzs, qs, thicknesses)
            r = np.where(unstable, r_rec, r)
            t = np.where(unstable, t_rec, t)

    return RawCoefficients(r, t, kzs[0], kzs[-1], qs[0], qs[-1])


def substack_indices(substack: Substack, wavelength_nm: float) -> Tuple[list, list]:
    indices = [complex_index(substack.incidence, wavelength_nm)]
    indices += [complex_index(layer.material, wavelength_nm) for layer in substack.layers]
    indices.append(complex_index(substack.exit, wavelength_nm))
    return indices, [layer.thickness_nm for layer in substack.layers]


def raw_coefficients(substack: Substack, wavelength_nm: float, n_eff: ArrayLike,
                     polarization: Polarization) -> RawCoefficients:
    indices, thicknesses = substack_indices(substack, wavelength_nm)
    return compose(indices, thicknesses, n_eff, wavenumber(wavelength_nm), Polarization.parse(polarization))


def _public(raw: RawCoefficients, n_in: complex, n_out: complex, polarization: Polarization,
            scalar: bool) -> StackCoefficients:
    r, t = raw.r, raw.t
    if polarization is Polarization.P:
        r = -r
        t = t * n_in / n_out

    def _squeeze(value):
        return value.item() if scalar else value

    return StackCoefficients(
        r=_squeeze(r), t=_squeeze(t), kz_in=_squeeze(raw.kz_in), kz_out=_squeeze(raw.kz_out),
        n_in=n_in, n_out=n_out, polarization=polarization,
    )


def fresnel_interface(n1: Union[ComplexIndex, complex], n2: Union[ComplexIndex, complex],
                      channel: PlaneWaveChannel) -> Tuple[complex, complex]:
    """
    Amplitude (r, t) of a single interface n1 -> n2
    """
    polarization = Polarization.parse(channel.polarization)
    n1, n2 = complex(n1), complex(n2)
    raw = compose([n1, n2], [], channel.n_parallel, channel.k0, polarization)
    coefficients = _public(raw, n1, n2, polarization, np.ndim(channel.n_parallel) == 0)
    return coefficients.r, coefficients.t


def substack_coefficients(substack: Substack, channel: PlaneWaveChannel) -> StackCoefficients:
    """
    Generalized r, t of a whole substack, light arriving from its incidence medium
    """
    polarization = Polarization.parse(channel.polarization)
    indices, thicknesses = substack_indices(substack, channel.wavelength_nm)
    raw = compose(indices, thicknesses, channel.n_parallel, channel.k0, polarization)
    return _public(raw, indices[0], indices[-1], polarization, np.ndim(channel.n_parallel) == 0)


def cascade(front: StackCoefficients, front_reversed: StackCoefficients,
            back: StackCoefficients) -> Tuple[complex, complex]:
    """
    Coefficients of `front` followed by `back` from those of the parts;
    `front_reversed` is `front` seen from its exit side
    """
    denominator = 1 - front_reversed.r * back.r
    r = front.r + front.t * front_reversed.t * back.r / denominator
    t = front.t * back.t / denominator
    return r, t


def stack_reflectance(stack: Stack, wavelength_nm: float, angle_of_incidence_deg: ArrayLike,
                      polarization: Union[str, Polarization]):
    """
    (R, T, A) for a plane wave arriving from the upper half space
    """
    angle = np.asarray(angle_of_incidence_deg, dtype=float)
    n_upper = complex_index(stack.upper, wavelength_nm).real
    n_eff = n_upper * np.sin(np.radians(angle))
    channel = PlaneWaveChannel(wavelength_nm, n_eff, Polarization.parse(polarization))
    coefficients = substack_coefficients(full_substack(stack), channel)
    reflectance = np.asarray(coefficients.reflectance, dtype=float)
    transmittance = np.asarray(coefficients.transmittance, dtype=float)
    absorptance = 1.0 - reflectance - transmittance
    if angle.ndim == 0:
        return float(reflectance), float(transmittance), float(absorptance)
    return reflectance, transmittance, absorptance


def reflectance_spectrum(stack: Stack, wavelengths_nm: ArrayLike, angle_of_incidence_deg: float = 0.0,
                         polarization: Union[str, Polarization] = Polarization.S):
    """R, T, A arrays over a wavelength grid at a fixed angle"""
    wavelengths_nm = np.asarray(wavelengths_nm, dtype=float)
    rows = np.array([stack_reflectance(stack, w, angle_of_incidence_deg, polarization) for w in wavelengths_nm])
    return rows[:, 0], rows[:, 1], rows[:, 2]


def unpolarized_reflectance(stack: Stack, wavelength_nm: float, angle_of_incidence_deg: ArrayLike):
    r_s = stack_reflectance(stack, wavelength_nm, angle_of_incidence_deg, Polarization.S)[0]
    r_p = stack_reflectance(stack, wavelength_nm, angle_of_incidence_deg, Polarization.P)[0]
    return 0.5 * (np.asarray(r_s) + np.asarray(r_p))


def angle_averaged_reflectance(stack: Stack, wavelength_nm: float, max_angle_deg: float,
                               samples: int = 181) -> float:
    """
    Unpolarized reflectance averaged over the cone 0..max_angle_deg with solid-angle weight sin(theta)
    """
    if max_angle_deg <= 0:
        return float(unpolarized_reflectance(stack, wavelength_nm, 0.0))
    angles = np.linspace(0.0, max_angle_deg, samples)
    weights = np.sin(np.radians(angles))
    reflectance = unpolarized_reflectance(stack, wavelength_nm, angles)
    return float(simpson(reflectance * weights, x=angles) / simpson(weights, x=angles))


def normal_incidence_reflectance(indices: Sequence[np.ndarray], thicknesses: Sequence[float],
                                 wavelengths_nm: ArrayLike) -> np.ndarray:
    """
    |r|^2 at normal incidence, vectorized over wavelength; indices[j] holds the
    index of medium j at every wavelength (incidence medium first)
    """
    k0 = 2 * np.pi / np.asarray(wavelengths_nm, dtype=float)
    kzs = [k0 * np.asarray(n, dtype=complex) for n in indices]
    gamma, _ = _recursive_composition(kzs, kzs, list(thicknesses))
    return np.abs(gamma) ** 2
