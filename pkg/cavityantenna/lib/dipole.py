"""
Emission engine: a point dipole inside the host layer of a planar stack.

The dipole field is expanded into plane waves and evanescent fields labelled by
the effective index n_eff. The upper and lower substacks act as mirrors with
generalized reflection coefficients; their multiple reflections give the
angular power emission spectrum, the total emitted power, the far field in the
collection half space and the collection factor xi. All powers are normalized
to the power P_hom the same dipole emits in the unbounded host.

Channel densities are per unit n_eff with measure 2 n_eff / n0^2, where n0 is
the real part of the host index. The p-polarized mirror coefficients enter in
the magnetic-field convention (an ideal electric mirror reflects with +1).
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.signal import find_peaks, peak_prominences, peak_widths

from cavityantenna.lib.errors import ConvergenceError, DomainError, NegativeDensityWarning, UnresolvedPeakWarning
from cavityantenna.lib.log import get_logger
from cavityantenna.lib.quadrature import integrate_panels
from cavityantenna.lib.stack import Layer, Stack, ensure_valid, flipped, split_at_dipole
from cavityantenna.lib.tmm import Polarization, compose, substack_indices, wavenumber

logger = get_logger(__name__)

PANEL_WIDTH = 8e-3
TAIL_PANEL_WIDTH = 4e-2
TAIL_SEGMENT = 1.0
TAIL_RTOL = 1e-6
TAIL_LIMIT = 50.0
QUADRATURE_RTOL = 1e-7
# homogeneous P/P_hom of the vertical, horizontal-TM and horizontal-TE rows
HOMOGENEOUS_SHARES = np.array([1.0, 0.25, 0.75])
BULK_POLAR_ANGLE_DEG = 54.7
_EDGE = 1e-6
_GRID_EDGE = 1e-9


@dataclass
class AngularSpectrum:
    """
    Angular power emission spectrum p(n_eff) per polarization.

    p_s, p_p are the contributions on top of the homogeneous emission (they
    vanish in an unbounded host). hom_s, hom_p carry the homogeneous share so
    that p + hom is the full channel density.
    """
    n_eff_grid: np.ndarray
    p_s: np.ndarray
    p_p: np.ndarray
    hom_s: np.ndarray
    hom_p: np.ndarray
    wavelength_nm: float
    host_index: float
    unresolved: List[float] = field(default_factory=list)

    @property
    def density_s(self) -> np.ndarray:
        return self.p_s + self.hom_s

    @property
    def density_p(self) -> np.ndarray:
        return self.p_p + self.hom_p

    @property
    def negative_channels(self) -> np.ndarray:
        """n_eff where the full density is negative inside the propagating region of the host"""
        propagating = self.n_eff_grid < self.host_index
        negative = (self.density_s < -1e-12) | (self.density_p < -1e-12)
        return self.n_eff_grid[propagating & negative]


@dataclass
class FarField:
    """Radiant intensity per unit solid angle, normalized to P_hom"""
    theta_deg: np.ndarray
    phi_deg: np.ndarray
    intensity: np.ndarray

    def hemisphere_power(self) -> float:
        theta = np.radians(self.theta_deg)
        phi = np.radians(self.phi_deg)
        over_phi = simpson(self.intensity, x=phi, axis=1)
        return float(simpson(over_phi * np.sin(theta), x=theta))


@dataclass
class EmissionResult:
    P_tot_over_P_hom: float
    xi: float
    P_upper_over_P_hom: float
    P_lower_over_P_hom: Optional[float] = None
    numerical_aperture: Optional[float] = None
    far_field: Optional[FarField] = None


@dataclass
class PowerBudget:
    """Where the emitted power goes, all relative to P_hom"""
    total: float
    upper: float
    lower: float

    @property
    def other(self) -> float:
        """Guided modes, surface plasmons and absorption"""
        return self.total - self.upper - self.lower


class EmissionModel:
    """
    Dipole in a validated stack, evaluated channel by channel
    """
    def __init__(self, stack: Stack):
        ensure_valid(stack)
        self.stack = stack
        self.wavelength_nm = stack.dipole.wavelength_nm
        self.k0 = wavenumber(self.wavelength_nm)
        theta = math.radians(stack.dipole.polar_angle_deg)
        self.cos2 = math.cos(theta) ** 2
        self.sin2 = math.sin(theta) ** 2

        upper, lower = split_at_dipole(stack)
        self.distance_up = upper.distance_nm
        self.distance_low = lower.distance_nm
        self.upper_indices, self.upper_thicknesses = substack_indices(upper, self.wavelength_nm)
        self.lower_indices, self.lower_thicknesses = substack_indices(lower, self.wavelength_nm)
        self.n0 = self.upper_indices[0]
        self.n0r = self.n0.real
        self.n_upper = self.upper_indices[-1].real

    def branch_points(self) -> List[float]:
        """Real parts of every index in the stack, where some k_z changes character"""
        points = {round(n.real, 12) for n in (*self.upper_indices, *self.lower_indices)}
        return sorted(points)

    def _mirrors(self, n_eff: np.ndarray):
        kz0 = self.k0 * np.sqrt(self.n0 ** 2 - n_eff ** 2 + 0j)
        kz0 = np.where(kz0.imag < 0, -kz0, kz0)
        up_phase = np.exp(2j * kz0 * self.distance_up)
        low_phase = np.exp(2j * kz0 * self.distance_low)
        mirrors = {}
        for polarization in (Polarization.S, Polarization.P):
            up = compose(self.upper_indices, self.upper_thicknesses, n_eff, self.k0, polarization)
            low = compose(self.lower_indices, self.lower_thicknesses, n_eff, self.k0, polarization)
            mirrors[polarization] = (up, up.r * up_phase, low.r * low_phase)
        return kz0, mirrors

    def channel_densities(self, n_eff) -> np.ndarray:
        """
        Rows (vertical, horizontal TM, horizontal TE) of the emission density on top
        of the homogeneous one, per unit n_eff
        """
        n_eff = np.atleast_1d(np.asarray(n_eff, dtype=float))
        kz0, mirrors = self._mirrors(n_eff)
        u = n_eff / self.n0r
        sz = kz0 / (self.k0 * self.n0r)
        measure = 2 * n_eff / self.n0r ** 2

        _, a_up, a_low = mirrors[Polarization.P]
        denominator = 1 - a_up * a_low
        vertical = (a_up + a_low + 2 * a_up * a_low) / denominator
        horizontal_tm = (2 * a_up * a_low - a_up - a_low) / denominator
        _, a_up, a_low = mirrors[Polarization.S]
        horizontal_te = (a_up + a_low + 2 * a_up * a_low) / (1 - a_up * a_low)

        with np.errstate(divide='ignore', invalid='ignore'):
            rows = np.array([
                0.75 * np.real(u ** 2 / sz * vertical),
                0.375 * np.real(sz * horizontal_tm),
                0.375 * np.real(horizontal_te / sz),
            ])
        return rows * measure

    def homogeneous_densities(self, n_eff) -> np.ndarray:
        """Homogeneous-host rows (vertical, horizontal TM, horizontal TE) per unit n_eff"""
        n_eff = np.atleast_1d(np.asarray(n_eff, dtype=float))
        kz0 = self.k0 * np.sqrt(self.n0 ** 2 - n_eff ** 2 + 0j)
        sz = np.where(kz0.imag < 0, -kz0, kz0) / (self.k0 * self.n0r)
        u = n_eff / self.n0r
        measure = 2 * n_eff / self.n0r ** 2
        with np.errstate(divide='ignore', invalid='ignore'):
            rows = np.array([
                0.75 * np.real(u ** 2 / sz),
                0.375 * np.real(sz),
                0.375 * np.real(1 / sz),
            ])
        return rows * measure

    def upper_amplitudes(self, n_eff) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Far-field amplitudes (s, vertical p, horizontal p) transmitted into the upper half space
        """
        n_eff = np.atleast_1d(np.asarray(n_eff, dtype=float))
        kz0, mirrors = self._mirrors(n_eff)
        k = self.k0 * self.n0r
        eps0 = self.n0r ** 2
        u = n_eff / self.n0r
        source_phase = np.exp(1j * kz0 * self.distance_up)

        up, a_up, a_low = mirrors[Polarization.S]
        flux = np.clip(np.real(up.q_out), 0.0, None)
        c_s = np.sqrt(3 / 16 * k * flux) * up.t * source_phase * (1 + a_low) / (kz0 * (1 - a_up * a_low))

        up, a_up, a_low = mirrors[Polarization.P]
        flux = np.clip(np.real(up.q_out), 0.0, None)
        common = up.t * source_phase / (1 - a_up * a_low)
        c_v = np.sqrt(3 / 8 * k * eps0 * flux) * u * common * (1 + a_low) / kz0
        c_h = np.sqrt(3 / 16 * eps0 / k * flux) * common * (1 - a_low)
        return c_s, c_v, c_h

    def collected_densities(self, n_eff) -> np.ndarray:
        """
        Azimuth-averaged upward far-field rows (vertical, horizontal p, horizontal s) per unit n_eff
        """
        n_eff = np.atleast_1d(np.asarray(n_eff, dtype=float))
        c_s, c_v, c_h = self.upper_amplitudes(n_eff)
        measure = 2 * n_eff / self.n0r ** 2
        return np.array([np.abs(c_v) ** 2, np.abs(c_h) ** 2, np.abs(c_s) ** 2]) * measure

    # mapped integration

    def _mapped(self, rows_of: callable, lo: float, hi: float, panel_width: float, atol: float):
        """
        Integral of rows_of(n_eff) over [lo, hi] on one side of n0, in the variable that
        removes the branch-point singularity at n_eff = n0
        """
        n0r = self.n0r
        if hi <= lo:
            return np.zeros(3), []
        panels = max(1, int(math.ceil((hi - lo) / panel_width)))

        if hi <= n0r * (1 + 1e-15):
            lo_a = math.asin(min(lo / n0r, 1.0))
            hi_a = math.asin(min(hi / n0r, 1.0))

            def integrand(alpha):
                alpha = np.minimum(alpha, math.pi / 2 - _EDGE)
                return rows_of(n0r * np.sin(alpha)) * (n0r * np.cos(alpha))

            result = integrate_panels(integrand, np.linspace(lo_a, hi_a, panels + 1), rtol=QUADRATURE_RTOL,
                                      atol=atol)
            unresolved = [n0r * math.sin(a) for a in result.unresolved]
        else:
            lo_b = math.acosh(max(lo / n0r, 1.0))
            hi_b = math.acosh(hi / n0r)

            def integrand(beta):
                beta = np.maximum(beta, _EDGE)
                return rows_of(n0r * np.cosh(beta)) * (n0r * np.sinh(beta))

            result = integrate_panels(integrand, np.linspace(lo_b, hi_b, panels + 1), rtol=QUADRATURE_RTOL,
                                      atol=atol)
            unresolved = [n0r * math.cosh(b) for b in result.unresolved]
        return result.value, unresolved

    def integrate(self, rows_of: callable, lo: float, hi: float,
                  panel_width: float = PANEL_WIDTH, atol: float = 1e-12) -> np.ndarray:
        """Integral over [lo, hi] split at every branch point"""
        edges = [lo] + [p for p in (*self.branch_points(), self.n0r) if lo < p < hi] + [hi]
        edges = sorted(set(edges))
        total = np.zeros(3)
        for a, b in zip(edges[:-1], edges[1:]):
            value, unresolved = self._mapped(rows_of, a, b, panel_width, atol)
            total = total + value
            for n_eff in unresolved:
                warnings.warn(UnresolvedPeakWarning(n_eff))
                logger.warning('unresolved peak at n_eff = %.6f', n_eff)
        return total


def _orientation_total(model: EmissionModel, rows: np.ndarray) -> float:
    return float(model.cos2 * rows[0] + model.sin2 * (rows[1] + rows[2]))


def power_components(stack: Stack) -> np.ndarray:
    """
    P/P_hom of the vertical, horizontal-TM and horizontal-TE dipole channels,
    each including its share of the homogeneous emission. The horizontal rows
    add up to the power of an in-plane dipole.
    """
    model = EmissionModel(stack)
    top = max([model.n0r, *model.branch_points()])
    total = model.integrate(model.channel_densities, 0.0, top, atol=QUADRATURE_RTOL)

    lo = top
    while True:
        if lo >= TAIL_LIMIT:
            raise ConvergenceError(
                f"evanescent tail of the emission spectrum not converged by n_eff = {TAIL_LIMIT:g}", lo
            )
        hi = min(lo + TAIL_SEGMENT, TAIL_LIMIT)
        width = PANEL_WIDTH if lo < top + TAIL_SEGMENT else TAIL_PANEL_WIDTH
        scale = np.max(np.abs(HOMOGENEOUS_SHARES + total))
        segment = model.integrate(model.channel_densities, lo, hi, panel_width=width,
                                  atol=QUADRATURE_RTOL * scale)
        total = total + segment
        if np.max(np.abs(segment)) < TAIL_RTOL * scale:
            break
        lo = hi

    return total + HOMOGENEOUS_SHARES


def total_power(stack: Stack) -> float:
    """
    P_tot/P_hom = 1 + integral of the angular power emission spectrum
    """
    model = EmissionModel(stack)
    return _orientation_total(model, power_components(stack))


def _collection_limit(model: EmissionModel, numerical_aperture: float) -> float:
    if not numerical_aperture > 0:
        raise DomainError(f"numerical aperture must be > 0, got {numerical_aperture}")
    if numerical_aperture > model.n_upper * (1 + 1e-12):
        raise DomainError(
            f"numerical aperture {numerical_aperture:g} exceeds the collection half-space index {model.n_upper:g}"
        )
    return min(numerical_aperture, model.n_upper)


def collection_factor(stack: Stack, numerical_aperture: float) -> float:
    """
    xi = Gamma_NA / Gamma_hom: far-field power inside the NA cone over P_hom
    """
    model = EmissionModel(stack)
    limit = _collection_limit(model, numerical_aperture)
    rows = model.integrate(model.collected_densities, 0.0, limit)
    return _orientation_total(model, rows)


def upper_power(stack: Stack) -> float:
    """Power radiated into the whole upper half space, over P_hom"""
    model = EmissionModel(stack)
    return _orientation_total(model, model.integrate(model.collected_densities, 0.0, model.n_upper))


def lower_power(stack: Stack) -> float:
    """Power radiated into the lower half space, over P_hom"""
    return upper_power(flipped(stack))


def power_budget(stack: Stack) -> PowerBudget:
    return PowerBudget(total=total_power(stack), upper=upper_power(stack), lower=lower_power(stack))


def bulk_reference(stack: Stack, polar_angle_deg: Optional[float] = BULK_POLAR_ANGLE_DEG) -> Stack:
    """
    A dipole at the same wavelength and depth under a single interface: host material
    fills the lower half space. The reference dipole has the (001) color-center tilt
    unless `polar_angle_deg` is None, which keeps the stack's own orientation.
    """
    host = stack.host.material
    dipole = stack.dipole
    if polar_angle_deg is not None:
        dipole = replace(dipole, polar_angle_deg=polar_angle_deg)
    return Stack(
        upper=stack.upper,
        layers_above=(),
        host=Layer(host, stack.host.thickness_nm),
        layers_below=(),
        lower=host,
        dipole=dipole,
    )


def enhancement_over_bulk(stack: Stack, numerical_aperture: float) -> float:
    return collection_factor(stack, numerical_aperture) / collection_factor(bulk_reference(stack),
                                                                            numerical_aperture)


def angular_spectrum(stack: Stack, n_eff_max: float, resolution: float = 1e-3,
                     refinements: int = 4) -> AngularSpectrum:
    """
    p(n_eff) on a uniform grid of spacing `resolution`, refined around peaks that
    the grid does not resolve
    """
    model = EmissionModel(stack)
    if n_eff_max < model.n0r:
        raise DomainError(f"n_eff_max = {n_eff_max:g} must reach the host index {model.n0r:g}")

    def _avoid_branch(grid):
        near = np.abs(grid - model.n0r) < _GRID_EDGE
        return np.where(near, model.n0r - _GRID_EDGE, grid)

    grid = _avoid_branch(np.arange(0.0, n_eff_max + 0.5 * resolution, resolution))
    step = resolution
    unresolved = []
    for level in range(refinements + 1):
        rows = model.homogeneous_densities(grid) + model.channel_densities(grid)
        densities = (model.sin2 * rows[2], model.cos2 * rows[0] + model.sin2 * rows[1])
        narrow = _narrow_peaks(grid, densities, model.n0r, branch_window=5 * resolution)
        if not narrow:
            break
        if level == refinements:
            unresolved = narrow
            break
        window = 5 * step
        step /= 10
        extra = np.concatenate([np.arange(x - window, x + window, step) for x in narrow])
        extra = extra[(extra >= 0) & (extra <= n_eff_max)]
        grid = _avoid_branch(np.unique(np.concatenate([grid, extra])))

    for n_eff in unresolved:
        warnings.warn(UnresolvedPeakWarning(n_eff))
        logger.warning('angular spectrum: unresolved peak at n_eff = %.6f', n_eff)

    inhomogeneous = model.channel_densities(grid)
    homogeneous = model.homogeneous_densities(grid)
    spectrum = AngularSpectrum(
        n_eff_grid=grid,
        p_s=model.sin2 * inhomogeneous[2],
        p_p=model.cos2 * inhomogeneous[0] + model.sin2 * inhomogeneous[1],
        hom_s=model.sin2 * homogeneous[2],
        hom_p=model.cos2 * homogeneous[0] + model.sin2 * homogeneous[1],
        wavelength_nm=model.wavelength_nm,
        host_index=model.n0r,
        unresolved=[float(x) for x in unresolved],
    )

    negative = spectrum.negative_channels
    if negative.size:
        warnings.warn(NegativeDensityWarning(negative))
        logger.warning('angular spectrum: negative channel density at %d n_eff values from %.6f to %.6f',
                       negative.size, negative.min(), negative.max())
    return spectrum


def peak_extent(grid: np.ndarray, density: np.ndarray, peaks: np.ndarray):
    """
    Prominences, FWHM in n_eff (at half prominence) and interpolated
    left/right half-prominence positions of `peaks`
    """
    prominences = peak_prominences(density, peaks)[0]
    _, _, left_ips, right_ips = peak_widths(density, peaks, rel_height=0.5)
    samples = np.arange(grid.size)
    left = np.interp(left_ips, samples, grid)
    right = np.interp(right_ips, samples, grid)
    return prominences, right - left, left, right


def _narrow_peaks(grid: np.ndarray, densities, host_index: float, branch_window: float) -> List[float]:
    """Positions of local maxima spanning fewer than 4 local grid steps at half prominence"""
    narrow = []
    for density in densities:
        finite = np.where(np.isfinite(density), density, 0.0)
        scale = max(float(np.max(np.abs(finite))), 1e-300)
        peaks, _ = find_peaks(finite, prominence=1e-3 * scale)
        peaks = peaks[np.abs(grid[peaks] - host_index) > branch_window]
        if peaks.size == 0:
            continue
        _, widths, _, _ = peak_extent(grid, finite, peaks)
        spacing = np.gradient(grid)[peaks]
        narrow.extend(float(grid[p]) for p, w, dx in zip(peaks, widths, spacing) if w < 4 * dx)
    return sorted(set(narrow))


def far_field(stack: Stack, theta_grid_deg: Sequence[float], phi_grid_deg: Sequence[float]) -> FarField:
    """
    Radiant intensity per unit solid angle in the upper half space, normalized so its
    hemisphere integral is P_upper/P_hom
    """
    model = EmissionModel(stack)
    theta = np.asarray(theta_grid_deg, dtype=float)
    phi = np.asarray(phi_grid_deg, dtype=float)
    if np.any(theta < 0) or np.any(theta >= 90):
        raise DomainError('far-field polar angles must lie in [0, 90) degrees')

    n_eff = model.n_upper * np.sin(np.radians(theta))
    c_s, c_v, c_h = model.upper_amplitudes(n_eff)
    sin_t = math.sqrt(model.sin2)
    cos_t = math.sqrt(model.cos2)
    phi_r = np.radians(phi)[None, :]

    p_wave = -cos_t * c_v[:, None] + math.sqrt(2) * sin_t * np.cos(phi_r) * c_h[:, None]
    density = 2 * model.sin2 * np.sin(phi_r) ** 2 * np.abs(c_s[:, None]) ** 2 + np.abs(p_wave) ** 2
    jacobian = model.n_upper ** 2 * np.cos(np.radians(theta))[:, None] / (math.pi * model.n0r ** 2)
    return FarField(theta_deg=theta, phi_deg=phi, intensity=density * jacobian)


def default_far_field(stack: Stack, theta_step_deg: float = 0.25, phi_points: int = 360) -> FarField:
    theta = np.arange(0.0, 90.0, theta_step_deg)
    phi = np.linspace(0.0, 360.0, phi_points + 1)
    return far_field(stack, theta, phi)


def emission(stack: Stack, numerical_aperture: float, with_far_field: bool = False,
             with_lower: bool = False) -> EmissionResult:
    """
    Total power, collection factor and upper-half-space power in one result
    """
    result = EmissionResult(
        P_tot_over_P_hom=total_power(stack),
        xi=collection_factor(stack, numerical_aperture),
        P_upper_over_P_hom=upper_power(stack),
        numerical_aperture=numerical_aperture,
    )
    if with_lower:
        result.P_lower_over_P_hom = lower_power(stack)
    if with_far_field:
        result.far_field = default_far_field(stack)
    logger.debug('emission: P_tot=%.6g xi=%.6g P_up=%.6g', result.P_tot_over_P_hom, result.xi,
                 result.P_upper_over_P_hom)
    return result
