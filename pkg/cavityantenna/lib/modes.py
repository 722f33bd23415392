"""
Mode analysis on top of the angular power emission spectrum.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks, peak_prominences

from cavityantenna.lib.dipole import AngularSpectrum, peak_extent
from cavityantenna.lib.errors import DomainError, NoMirrorError, NotALeakyModeError
from cavityantenna.lib.log import get_logger
from cavityantenna.lib.stack import Substack
from cavityantenna.lib.tmm import PlaneWaveChannel, Polarization, substack_coefficients, wavenumber

logger = get_logger(__name__)

PROMINENCE_FACTOR = 3.0
BRANCH_WINDOW = 5e-3
NOISE_FLOOR = 1e-4
MIN_MIRROR_REFLECTION = 0.1


class ModeKind(str, Enum):
    LEAKY = 'Leaky'
    GUIDED = 'Guided'
    SPP = 'SPP'


@dataclass(frozen=True)
class ModeRecord:
    n_eff: float
    polarization: Polarization
    kind: ModeKind
    peak_height: float
    fwhm_n_eff: float


@dataclass(frozen=True)
class ResonanceCheck:
    order_q: int
    lhs_nm: float
    rhs_nm: float
    residual_nm: float


def classify(n_eff: float, host_index: float, upper_index: float) -> ModeKind:
    if n_eff < upper_index:
        return ModeKind.LEAKY
    if n_eff < host_index:
        return ModeKind.GUIDED
    return ModeKind.SPP


def _vertex(x: np.ndarray, y: np.ndarray, peak: int) -> float:
    """Position of the parabola through the peak sample and its neighbours"""
    if peak == 0 or peak == x.size - 1:
        return float(x[peak])
    xs, ys = x[peak - 1:peak + 2], y[peak - 1:peak + 2]
    a, b, _ = np.polyfit(xs - xs[1], ys, 2)
    if a >= 0:
        return float(x[peak])
    offset = -b / (2 * a)
    return float(xs[1] + np.clip(offset, xs[0] - xs[1], xs[2] - xs[1]))


def find_modes(spectrum: AngularSpectrum, host_index: Optional[float] = None,
               upper_index: float = 1.0) -> List[ModeRecord]:
    """
    Peaks of the channel density whose prominence is at least 3x the continuum they rise from.

    The continuum of a peak is the lower of its two prominence bases: a broad leaky
    resonance that starts from the n_eff = 0 end of the spectrum counts against that
    end, not against the flank of its neighbour.
    """
    if host_index is None:
        host_index = spectrum.host_index
    host_index = float(np.real(host_index))
    upper_index = float(np.real(upper_index))
    grid = spectrum.n_eff_grid

    modes = []
    for polarization, density in ((Polarization.S, spectrum.density_s), (Polarization.P, spectrum.density_p)):
        density = np.nan_to_num(density, nan=0.0, posinf=0.0, neginf=0.0)
        if not np.any(density):
            continue
        floor = NOISE_FLOOR * np.max(np.abs(density))
        peaks, _ = find_peaks(density, prominence=floor)
        peaks = peaks[np.abs(grid[peaks] - host_index) > BRANCH_WINDOW]
        if peaks.size == 0:
            continue

        prominences, widths, _, _ = peak_extent(grid, density, peaks)
        _, left_bases, right_bases = peak_prominences(density, peaks)
        continuum = np.clip(np.minimum(density[left_bases], density[right_bases]), 0.0, None)
        for peak, prominence, width, base in zip(peaks, prominences, widths, continuum):
            if prominence < PROMINENCE_FACTOR * base:
                continue
            n_eff = _vertex(grid, density, peak)
            modes.append(ModeRecord(
                n_eff=n_eff,
                polarization=polarization,
                kind=classify(n_eff, host_index, upper_index),
                peak_height=float(density[peak]),
                fwhm_n_eff=float(width),
            ))

    modes.sort(key=lambda m: (m.n_eff, m.polarization.value))
    logger.debug('found %d modes', len(modes))
    return modes


def _slab_dispersion(n_eff: float, order: int, polarization: Polarization, n_core: float, n_clad: float,
                     t0_nm: float, k0: float) -> float:
    kappa = k0 * math.sqrt(max(n_core ** 2 - n_eff ** 2, 0.0))
    gamma = k0 * math.sqrt(max(n_eff ** 2 - n_clad ** 2, 0.0))
    ratio = 1.0 if polarization is Polarization.S else (n_core / n_clad) ** 2
    return kappa * t0_nm - order * math.pi - 2 * math.atan2(ratio * gamma, kappa)


def slab_modes_oracle(n_core: float, n_clad: float, t0_nm: float,
                      wavelength_nm: float) -> List[Tuple[float, Polarization]]:
    """
    Guided TE (s) and TM (p) modes of a symmetric dielectric slab from the transcendental equations
    """
    if not n_core > n_clad:
        raise DomainError('slab oracle needs n_core > n_clad')
    k0 = wavenumber(wavelength_nm)
    cutoff = k0 * t0_nm * math.sqrt(n_core ** 2 - n_clad ** 2)

    modes = []
    for polarization in (Polarization.S, Polarization.P):
        order = 0
        while order * math.pi < cutoff:
            args = (order, polarization, n_core, n_clad, t0_nm, k0)
            if _slab_dispersion(n_clad, *args) <= 0:
                break
            root = brentq(_slab_dispersion, n_clad, n_core, args=args, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                          maxiter=200)
            modes.append((float(root), polarization))
            order += 1

    modes.sort(key=lambda m: -m[0])
    return modes


def mirror_reflection(mirror: Substack, n_eff: float, wavelength_nm: float,
                      polarization: Polarization) -> complex:
    channel = PlaneWaveChannel(wavelength_nm, float(n_eff), Polarization.parse(polarization))
    return substack_coefficients(mirror, channel).r


def penetration_depth(mirror: Substack, n_eff: float, wavelength_nm: float,
                      polarization: Polarization) -> float:
    """
    Extra optical length of a mirror from its reflection phase relative to an
    ideal electric mirror: arg(-r) / (2 k_0), phase taken in [0, 2 pi)
    """
    r = mirror_reflection(mirror, n_eff, wavelength_nm, polarization)
    if abs(r) <= MIN_MIRROR_REFLECTION:
        raise NoMirrorError(f"|r| = {abs(r):.3g} at n_eff = {n_eff:g}: substack does not act as a mirror")
    phase = np.angle(-r) % (2 * math.pi)
    return float(phase / (2 * wavenumber(wavelength_nm)))


def resonance_check(t0_nm: float, n0: float, n_eff: float, d_pen_up: float, d_pen_low: float,
                    wavelength_nm: float) -> ResonanceCheck:
    """
    Fabry-Perot condition q * lambda/2 = t0 * sqrt(n0^2 - n_eff^2) + d_pen
    """
    rhs = t0_nm * math.sqrt(n0 ** 2 - n_eff ** 2) + d_pen_up + d_pen_low
    half = wavelength_nm / 2
    order = max(1, int(round(rhs / half)))
    lhs = order * half
    return ResonanceCheck(order_q=order, lhs_nm=lhs, rhs_nm=rhs, residual_nm=lhs - rhs)


def leaky_to_angle(n_eff: float, n_upper: float) -> float:
    """Propagation angle in the upper half space (Snell)"""
    if n_eff >= n_upper:
        raise NotALeakyModeError(f"n_eff = {n_eff:g} is not below the upper index {n_upper:g}")
    return math.degrees(math.asin(n_eff / n_upper))
