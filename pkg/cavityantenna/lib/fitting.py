"""
Analysis of measured data: saturation curves, photon autocorrelation,
background ratios, membrane thickness from white-light reflectance and
zero-phonon line shapes.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import trapezoid
from scipy.optimize import curve_fit, least_squares
from scipy.special import erfc, erfcx

from cavityantenna.lib.errors import (
    AmbiguityError,
    ClampedValueWarning,
    DomainError,
    FitAdjustmentWarning,
    FitFailure,
    ValidationError,
)
from cavityantenna.lib.log import get_logger
from cavityantenna.lib.stack import Stack, full_substack
from cavityantenna.lib.tmm import normal_incidence_reflectance, substack_indices

logger = get_logger(__name__)

MAX_ITERATIONS = 500
DARK_COUNTS_CPS = 500.0
SINGLE_EMITTER_LIMIT = 0.5
AMBIGUITY_FRACTION = 0.05

SATURATION_PARAMETERS = ('I_sat_cps', 'P_sat_mW', 'c_cps_per_mW', 'D_cps')
G2_PARAMETERS = ('background_ratio', 'antibunching_time_ns', 'bunching_amplitude', 'bunching_time_ns')


def _frame(source: Union[str, pd.DataFrame], columns: Sequence[str]) -> pd.DataFrame:
    frame = source if isinstance(source, pd.DataFrame) else pd.read_csv(source, comment='#')
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationError('data is missing columns', missing)
    return frame


@dataclass
class SaturationData:
    """Detected count rate against excitation power"""
    power_mW: np.ndarray
    rate_cps: np.ndarray
    sigma_cps: Optional[np.ndarray] = None

    def __post_init__(self):
        self.power_mW = np.asarray(self.power_mW, dtype=float)
        self.rate_cps = np.asarray(self.rate_cps, dtype=float)
        if self.sigma_cps is not None:
            self.sigma_cps = np.asarray(self.sigma_cps, dtype=float)

        violations = []
        if self.power_mW.shape != self.rate_cps.shape:
            violations.append('power_mW and rate_cps must have the same length')
        elif np.any(self.power_mW <= 0) or np.any(np.diff(self.power_mW) <= 0):
            violations.append('powers must be strictly positive and increasing')
        if np.any(self.rate_cps < 0):
            violations.append('rates must be nonnegative')
        if self.sigma_cps is not None and (self.sigma_cps.shape != self.rate_cps.shape
                                           or np.any(self.sigma_cps <= 0)):
            violations.append('sigma_cps must be positive, one per row')
        if violations:
            raise ValidationError('invalid saturation data', violations)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> 'SaturationData':
        array = np.asarray(list(rows), dtype=float)
        sigma = array[:, 2] if array.shape[1] > 2 else None
        return cls(array[:, 0], array[:, 1], sigma)

    @classmethod
    def from_csv(cls, source: Union[str, pd.DataFrame]) -> 'SaturationData':
        """CSV with columns power_mW, rate_cps and optionally sigma_cps"""
        frame = _frame(source, ('power_mW', 'rate_cps'))
        sigma = frame['sigma_cps'].to_numpy() if 'sigma_cps' in frame.columns else None
        return cls(frame['power_mW'].to_numpy(), frame['rate_cps'].to_numpy(), sigma)


@dataclass
class SaturationFit:
    I_sat_cps: float
    P_sat_mW: float
    c_cps_per_mW: float
    D_cps: float
    errors: Dict[str, float] = field(default_factory=dict)
    fixed: Dict[str, bool] = field(default_factory=dict)
    residual_norm: float = 0.0

    def model(self, power_mW):
        return saturation_model(power_mW, self.I_sat_cps, self.P_sat_mW, self.c_cps_per_mW, self.D_cps)

    def as_dict(self) -> Dict[str, object]:
        return {
            'parameters': {name: float(getattr(self, name)) for name in SATURATION_PARAMETERS},
            'errors': dict(self.errors),
            'fixed': dict(self.fixed),
            'residual_norm': self.residual_norm,
        }


@dataclass
class G2Data:
    delay_ns: np.ndarray
    g2: np.ndarray
    jitter_sigma_ns: float

    def __post_init__(self):
        self.delay_ns = np.asarray(self.delay_ns, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        violations = []
        if self.delay_ns.shape != self.g2.shape:
            violations.append('delay_ns and g2 must have the same length')
        if np.any(self.g2 < 0):
            violations.append('g2 must be nonnegative')
        if self.jitter_sigma_ns < 0:
            violations.append('jitter sigma must be >= 0')
        if self.delay_ns.size and not self.delay_ns.min() <= 0 <= self.delay_ns.max():
            violations.append('delay grid must cover 0')
        if violations:
            raise ValidationError('invalid g2 data', violations)

    @classmethod
    def from_csv(cls, source: Union[str, pd.DataFrame], jitter_sigma_ns: float) -> 'G2Data':
        """CSV with columns delay_ns, g2"""
        frame = _frame(source, ('delay_ns', 'g2'))
        return cls(frame['delay_ns'].to_numpy(), frame['g2'].to_numpy(), jitter_sigma_ns)


@dataclass
class G2Fit:
    g2_zero: float
    g2_zero_raw: float
    antibunching_time_ns: float
    bunching_amplitude: float
    bunching_time_ns: Optional[float]
    background_ratio: float
    jitter_sigma_ns: float
    errors: Dict[str, float] = field(default_factory=dict)
    fixed: Dict[str, bool] = field(default_factory=dict)
    residual_norm: float = 0.0

    def model(self, delay_ns):
        return g2_convolved(delay_ns, self.background_ratio, self.antibunching_time_ns,
                            self.bunching_amplitude, self.bunching_time_ns or 1.0, self.jitter_sigma_ns)

    def as_dict(self) -> Dict[str, object]:
        return {
            'parameters': {
                'g2_zero': self.g2_zero,
                'g2_zero_raw': self.g2_zero_raw,
                'background_ratio': self.background_ratio,
                'antibunching_time_ns': self.antibunching_time_ns,
                'bunching_amplitude': self.bunching_amplitude,
                'bunching_time_ns': self.bunching_time_ns,
                'jitter_sigma_ns': self.jitter_sigma_ns,
            },
            'errors': dict(self.errors),
            'fixed': dict(self.fixed),
            'residual_norm': self.residual_norm,
        }


@dataclass
class ThicknessFit:
    t0_nm: float
    uncertainty_nm: float
    scale: float
    offset: float
    residual_norm: float
    scan_t0_nm: np.ndarray = field(repr=False, default=None)
    scan_chi2: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> Dict[str, object]:
        return {
            'parameters': {'t0_nm': self.t0_nm, 'scale': self.scale, 'offset': self.offset},
            'errors': {'t0_nm': self.uncertainty_nm},
            'residual_norm': self.residual_norm,
        }


@dataclass
class LineFit:
    center_nm: float
    fwhm_nm: float
    amplitude: float
    offset: float
    shape: str
    errors: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            'parameters': {'center_nm': self.center_nm, 'fwhm_nm': self.fwhm_nm,
                           'amplitude': self.amplitude, 'offset': self.offset},
            'errors': dict(self.errors),
            'shape': self.shape,
        }


def _standard_errors(jacobian: np.ndarray, cost: float, absolute_sigma: bool) -> np.ndarray:
    rows, columns = jacobian.shape
    variance = 1.0 if absolute_sigma else (2 * cost / (rows - columns) if rows > columns else 0.0)
    covariance = np.linalg.pinv(jacobian.T @ jacobian) * variance
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None))


def _least_squares(residual, start, lower, upper, jac='2-point'):
    result = least_squares(residual, start, jac=jac, bounds=(lower, upper), method='trf', x_scale='jac',
                           max_nfev=MAX_ITERATIONS, ftol=1e-12, xtol=1e-14, gtol=1e-14)
    if result.status == 0:
        raise FitFailure(f"no convergence after {MAX_ITERATIONS} iterations", np.linalg.norm(result.fun))
    return result


# saturation

def saturation_model(power_mW, I_sat_cps: float, P_sat_mW: float, c_cps_per_mW: float = 0.0,
                     D_cps: float = 0.0):
    """I(P) = I_sat P/(P + P_sat) + c P + D"""
    power_mW = np.asarray(power_mW, dtype=float)
    return I_sat_cps * power_mW / (power_mW + P_sat_mW) + c_cps_per_mW * power_mW + D_cps


def _saturation_jacobian(power: np.ndarray, I_sat: float, P_sat: float) -> Dict[str, np.ndarray]:
    denominator = power + P_sat
    return {
        'I_sat_cps': power / denominator,
        'P_sat_mW': -I_sat * power / denominator ** 2,
        'c_cps_per_mW': power,
        'D_cps': np.ones_like(power),
    }


_SATURATION_LOWER = {'I_sat_cps': 0.0, 'P_sat_mW': 1e-12, 'c_cps_per_mW': -np.inf, 'D_cps': 0.0}


def _saturation_pass(data: SaturationData, fixed: Dict[str, float], start: Dict[str, float]):
    names = [n for n in SATURATION_PARAMETERS if n not in fixed]
    power, rate = data.power_mW, data.rate_cps
    weights = 1.0 / data.sigma_cps if data.sigma_cps is not None else np.ones_like(rate)

    def values(x):
        merged = dict(fixed)
        merged.update(zip(names, x))
        return merged

    def residual(x):
        v = values(x)
        return (saturation_model(power, v['I_sat_cps'], v['P_sat_mW'], v['c_cps_per_mW'], v['D_cps'])
                - rate) * weights

    def jacobian(x):
        v = values(x)
        columns = _saturation_jacobian(power, v['I_sat_cps'], v['P_sat_mW'])
        return np.column_stack([columns[n] for n in names]) * weights[:, None]

    lower = [_SATURATION_LOWER[n] for n in names]
    upper = [np.inf] * len(names)
    x0 = np.clip([start[n] for n in names], np.array(lower) + 1e-9, None)
    result = _least_squares(residual, x0, lower, upper, jac=jacobian)
    errors = _standard_errors(result.jac, result.cost, data.sigma_cps is not None)
    return values(result.x), dict(zip(names, errors)), float(np.linalg.norm(result.fun))


def _saturation_start(data: SaturationData, fix_D: Optional[float]) -> Dict[str, float]:
    power, rate = data.power_mW, data.rate_cps
    dark = fix_D if fix_D is not None else 0.5 * float(rate.min())
    signal = np.clip(rate - dark, 0.0, None)
    plateau = max(float(signal.max()), 1.0)
    above_half = np.nonzero(signal >= plateau / 2)[0]
    half_power = power[above_half[0]] if above_half.size else float(np.median(power))
    return {'I_sat_cps': plateau, 'P_sat_mW': float(half_power), 'c_cps_per_mW': 0.0, 'D_cps': dark}


def fit_saturation(data: SaturationData, fix_c_to_zero: bool = False,
                   fix_D: Optional[float] = DARK_COUNTS_CPS) -> SaturationFit:
    """
    Least-squares fit of I(P) = I_sat P/(P + P_sat) + c P + D.

    D is held at `fix_D` (500 cps dark counts by default); pass None to fit it.
    A free c that converges below 0 is refitted with c = 0.
    """
    if data.power_mW.size < 4:
        raise DomainError('saturation fit needs at least 4 data points')

    fixed = {}
    if fix_c_to_zero:
        fixed['c_cps_per_mW'] = 0.0
    if fix_D is not None:
        fixed['D_cps'] = float(fix_D)

    start = _saturation_start(data, fix_D)
    values, errors, residual_norm = _saturation_pass(data, fixed, start)

    if 'c_cps_per_mW' not in fixed and values['c_cps_per_mW'] < 0:
        message = f"linear term c = {values['c_cps_per_mW']:.4g} < 0, refitting with c = 0"
        logger.warning(message)
        warnings.warn(FitAdjustmentWarning(message))
        fixed['c_cps_per_mW'] = 0.0
        values, errors, residual_norm = _saturation_pass(data, fixed, values)

    if not data.power_mW[0] < values['P_sat_mW'] < data.power_mW[-1]:
        raise DomainError(
            f"data ({data.power_mW[0]:g}-{data.power_mW[-1]:g} mW) does not span the "
            f"half-saturation power {values['P_sat_mW']:.3g} mW"
        )

    return SaturationFit(
        I_sat_cps=float(values['I_sat_cps']),
        P_sat_mW=float(values['P_sat_mW']),
        c_cps_per_mW=float(values['c_cps_per_mW']),
        D_cps=float(values['D_cps']),
        errors={n: float(errors.get(n, 0.0)) for n in SATURATION_PARAMETERS},
        fixed={n: n in fixed for n in SATURATION_PARAMETERS},
        residual_norm=residual_norm,
    )


def fit_saturation_batch(datasets: Sequence[SaturationData], threads: Optional[int] = None,
                         **options) -> List[SaturationFit]:
    """One saturation fit per dataset, in input order"""
    return Parallel(n_jobs=threads or 1)(delayed(fit_saturation)(data, **options) for data in datasets)


# photon autocorrelation

def g2_model(delay_ns, antibunching_time_ns: float, bunching_amplitude: float = 0.0,
             bunching_time_ns: float = 1.0):
    """Three-level g2: 1 - (1 + a) exp(-|t|/t1) + a exp(-|t|/t2)"""
    tau = np.abs(np.asarray(delay_ns, dtype=float))
    return (1 - (1 + bunching_amplitude) * np.exp(-tau / antibunching_time_ns)
            + bunching_amplitude * np.exp(-tau / bunching_time_ns))


def g2_with_background(delay_ns, background_ratio: float, antibunching_time_ns: float,
                       bunching_amplitude: float = 0.0, bunching_time_ns: float = 1.0):
    rho2 = background_ratio ** 2
    return 1 - rho2 + rho2 * g2_model(delay_ns, antibunching_time_ns, bunching_amplitude, bunching_time_ns)


def _one_sided(delay: np.ndarray, lifetime: float, sigma: float) -> np.ndarray:
    """exp(s^2/2T^2 - t/T) erfc((s/T - t/s)/sqrt 2), evaluated without overflow"""
    z = (sigma / lifetime - delay / sigma) / math.sqrt(2)
    with np.errstate(over='ignore', invalid='ignore', under='ignore'):
        scaled = erfcx(z) * np.exp(-delay ** 2 / (2 * sigma ** 2))
        direct = np.exp(sigma ** 2 / (2 * lifetime ** 2) - delay / lifetime) * erfc(z)
    return np.where(z >= 0, scaled, direct)


def convolved_decay(delay_ns, lifetime_ns: float, sigma_ns: float) -> np.ndarray:
    """exp(-|t|/T) convolved with a normalized Gaussian of width sigma"""
    delay = np.asarray(delay_ns, dtype=float)
    if sigma_ns == 0:
        return np.exp(-np.abs(delay) / lifetime_ns)
    return 0.5 * (_one_sided(delay, lifetime_ns, sigma_ns) + _one_sided(-delay, lifetime_ns, sigma_ns))


def g2_convolved(delay_ns, background_ratio: float, antibunching_time_ns: float, bunching_amplitude: float,
                 bunching_time_ns: float, jitter_sigma_ns: float):
    """Background-scaled g2 as recorded through a detector of Gaussian timing jitter"""
    rho2 = background_ratio ** 2
    model = (1 - (1 + bunching_amplitude) * convolved_decay(delay_ns, antibunching_time_ns, jitter_sigma_ns)
             + bunching_amplitude * convolved_decay(delay_ns, bunching_time_ns, jitter_sigma_ns))
    return 1 - rho2 + rho2 * model


_G2_LOWER = {'background_ratio': 0.0, 'antibunching_time_ns': 1e-6, 'bunching_amplitude': 0.0,
             'bunching_time_ns': 1e-6}
_G2_UPPER = {'background_ratio': 1.0, 'antibunching_time_ns': np.inf, 'bunching_amplitude': np.inf,
             'bunching_time_ns': np.inf}


def _g2_pass(data: G2Data, fixed: Dict[str, float], start: Dict[str, float]):
    names = [n for n in G2_PARAMETERS if n not in fixed]

    def values(x):
        merged = dict(fixed)
        merged.update(zip(names, x))
        return merged

    def residual(x):
        v = values(x)
        return g2_convolved(data.delay_ns, v['background_ratio'], v['antibunching_time_ns'],
                            v['bunching_amplitude'], v['bunching_time_ns'], data.jitter_sigma_ns) - data.g2

    lower = np.array([_G2_LOWER[n] for n in names])
    upper = np.array([_G2_UPPER[n] for n in names])
    x0 = np.clip([start[n] for n in names], lower + 1e-6, np.minimum(upper - 1e-6, 1e12))
    result = _least_squares(residual, x0, lower, upper)
    errors = _standard_errors(result.jac, result.cost, False)
    return values(result.x), dict(zip(names, errors)), float(np.linalg.norm(result.fun))


def _g2_start(data: G2Data) -> Dict[str, float]:
    dip = float(data.g2[np.argmin(np.abs(data.delay_ns))])
    rho = math.sqrt(min(max(1 - dip, 0.01), 0.99))
    half_level = (dip + 1) / 2
    order = np.argsort(np.abs(data.delay_ns))
    recovered = order[data.g2[order] >= half_level]
    width = abs(float(data.delay_ns[recovered[0]])) if recovered.size else float(np.ptp(data.delay_ns)) / 10
    antibunching = max(width / math.log(2), 1e-3)
    return {'background_ratio': rho, 'antibunching_time_ns': antibunching, 'bunching_amplitude': 0.05,
            'bunching_time_ns': 10 * antibunching}


def fit_g2(data: G2Data) -> G2Fit:
    """
    Least-squares fit of the jitter-convolved, background-scaled three-level g2.

    The bunching term is dropped (a = 0) when its amplitude is consistent with zero.
    """
    start = _g2_start(data)
    fixed: Dict[str, float] = {}
    values, errors, residual_norm = _g2_pass(data, fixed, start)

    if values['bunching_amplitude'] <= errors.get('bunching_amplitude', 0.0):
        message = (f"bunching amplitude {values['bunching_amplitude']:.3g} consistent with 0, "
                   f"refitting without bunching")
        logger.info(message)
        warnings.warn(FitAdjustmentWarning(message))
        fixed = {'bunching_amplitude': 0.0, 'bunching_time_ns': 1.0}
        values, errors, residual_norm = _g2_pass(data, fixed, values)

    coverage = float(np.max(np.abs(data.delay_ns)))
    if coverage < 5 * values['antibunching_time_ns']:
        raise DomainError(
            f"delays up to {coverage:g} ns do not cover 5x the antibunching time "
            f"{values['antibunching_time_ns']:.3g} ns"
        )

    rho = float(values['background_ratio'])
    bunching = float(values['bunching_amplitude'])
    raw = float(g2_convolved(0.0, rho, values['antibunching_time_ns'], bunching, values['bunching_time_ns'],
                             data.jitter_sigma_ns))
    return G2Fit(
        g2_zero=float(g2_with_background(0.0, rho, values['antibunching_time_ns'], bunching,
                                         values['bunching_time_ns'])),
        g2_zero_raw=raw,
        antibunching_time_ns=float(values['antibunching_time_ns']),
        bunching_amplitude=bunching,
        bunching_time_ns=None if 'bunching_time_ns' in fixed else float(values['bunching_time_ns']),
        background_ratio=rho,
        jitter_sigma_ns=float(data.jitter_sigma_ns),
        errors={n: float(errors.get(n, 0.0)) for n in G2_PARAMETERS},
        fixed={n: n in fixed for n in G2_PARAMETERS},
        residual_norm=residual_norm,
    )


def is_single_emitter(fit: G2Fit) -> bool:
    """Measured (jitter-limited) g2(0) below one half"""
    return fit.g2_zero_raw < SINGLE_EMITTER_LIMIT


def background_ratio_from_spectra(emitter_spectrum, background_spectrum,
                                  integration_window_nm: Tuple[float, float]) -> float:
    """
    rho = (S_emitter - S_background) / S_emitter, S the trapezoidal integral over the window.
    Spectra are rows of (wavelength_nm, intensity).
    """
    emitter = np.asarray(emitter_spectrum, dtype=float)
    background = np.asarray(background_spectrum, dtype=float)
    lower, upper = sorted(integration_window_nm)

    for label, spectrum in (('emitter', emitter), ('background', background)):
        if spectrum.ndim != 2 or spectrum.shape[1] < 2:
            raise ValidationError(f"{label} spectrum must be rows of (wavelength_nm, intensity)")
        if spectrum[:, 0].min() > lower or spectrum[:, 0].max() < upper:
            raise DomainError(f"{label} spectrum does not cover {lower:g}-{upper:g} nm")

    emitter = emitter[np.argsort(emitter[:, 0])]
    background = background[np.argsort(background[:, 0])]
    grid = emitter[:, 0]
    inside = (grid >= lower) & (grid <= upper)
    wavelengths = grid[inside]
    signal = trapezoid(emitter[inside, 1], x=wavelengths)
    noise = trapezoid(np.interp(wavelengths, background[:, 0], background[:, 1]), x=wavelengths)

    if signal <= 0:
        raise DomainError('emitter spectrum integrates to zero over the window')
    rho = (signal - noise) / signal
    if rho < 0:
        message = f"background exceeds emitter signal (rho = {rho:.3g}), clamped to 0"
        logger.warning(message)
        warnings.warn(ClampedValueWarning(message))
        rho = 0.0
    return float(rho)


# membrane thickness

def _scan_chi2(indices: np.ndarray, thicknesses: List[float], position: int, wavelengths: np.ndarray,
               measured: np.ndarray, t0: float) -> Tuple[float, float, float]:
    layers = list(thicknesses)
    layers[position] = t0
    model = normal_incidence_reflectance(indices, layers, wavelengths)
    design = np.column_stack([model, np.ones_like(model)])
    (scale, offset), *_ = np.linalg.lstsq(design, measured, rcond=None)
    residual = measured - design @ np.array([scale, offset])
    return float(residual @ residual), float(scale), float(offset)


def thickness_from_reflectance(measured_spectrum, stack_template: Stack,
                               t0_bounds: Tuple[float, float] = (150.0, 1000.0),
                               step_nm: float = 1.0) -> ThicknessFit:
    """
    Host thickness whose normal-incidence reflectance spectrum, up to scale and
    offset, best matches the measurement (rows of wavelength_nm, reflectance).
    Global scan at `step_nm`, then a parabola through the best scan point.
    """
    spectrum = np.asarray(measured_spectrum, dtype=float)
    if spectrum.ndim != 2 or spectrum.shape[0] < 4:
        raise ValidationError('reflectance spectrum must be rows of (wavelength_nm, reflectance)')
    wavelengths, measured = spectrum[:, 0], spectrum[:, 1]

    substack = full_substack(stack_template)
    position = len(stack_template.layers_above)
    per_wavelength = [substack_indices(substack, w)[0] for w in wavelengths]
    indices = np.array(per_wavelength, dtype=complex).T
    thicknesses = [layer.thickness_nm for layer in substack.layers]

    scan = np.arange(t0_bounds[0], t0_bounds[1] + step_nm / 2, step_nm)
    chi2 = np.array([_scan_chi2(indices, thicknesses, position, wavelengths, measured, t)[0] for t in scan])

    best = int(np.argmin(chi2))
    spread = float(np.median(chi2) - chi2[best])
    interior = np.nonzero((chi2[1:-1] <= chi2[:-2]) & (chi2[1:-1] <= chi2[2:]))[0] + 1
    comparable = [i for i in interior if chi2[i] - chi2[best] <= AMBIGUITY_FRACTION * spread]
    separated = [i for i in comparable if abs(scan[i] - scan[best]) > 2 * step_nm]
    variation = float(np.sum((measured - measured.mean()) ** 2))
    if variation <= 1e-12 * float(np.sum(measured ** 2)) or spread <= 1e-6 * variation or separated:
        candidates = [scan[i] for i in sorted(set(comparable) | {best})] or [scan[0], scan[-1]]
        raise AmbiguityError('reflectance matches several thicknesses equally well', candidates)

    t0 = float(scan[best])
    uncertainty = float(step_nm)
    if 0 < best < scan.size - 1:
        a, b, _ = np.polyfit(scan[best - 1:best + 2] - scan[best], chi2[best - 1:best + 2], 2)
        if a > 0:
            t0 = float(scan[best] - b / (2 * a))
            dof = max(wavelengths.size - 3, 1)
            uncertainty = math.sqrt(max(chi2[best] / dof, 0.0) / a)

    chi2_best, scale, offset = _scan_chi2(indices, thicknesses, position, wavelengths, measured, t0)
    logger.info('membrane thickness %.1f +- %.1f nm', t0, uncertainty)
    return ThicknessFit(t0_nm=t0, uncertainty_nm=uncertainty, scale=scale, offset=offset,
                        residual_norm=math.sqrt(chi2_best), scan_t0_nm=scan, scan_chi2=chi2)


# zero-phonon line

def lorentzian(x, center, half_width, amplitude, offset):
    return amplitude * half_width ** 2 / ((x - center) ** 2 + half_width ** 2) + offset


def gaussian(x, center, width, amplitude, offset):
    return amplitude * np.exp(-(x - center) ** 2 / (2 * width ** 2)) + offset


def fit_line(spectrum, shape: str = 'lorentzian') -> LineFit:
    """Centre, FWHM, amplitude and offset of a single emission line (rows of wavelength_nm, intensity)"""
    if shape not in ('lorentzian', 'gaussian'):
        raise ValidationError(f"line shape must be 'lorentzian' or 'gaussian', got '{shape}'")
    data = np.asarray(spectrum, dtype=float)
    x, y = data[:, 0], data[:, 1]

    offset = float(np.min(y))
    peak = int(np.argmax(y))
    above = x[y - offset >= (y[peak] - offset) / 2]
    width = max(float(above.max() - above.min()), float(np.min(np.diff(np.sort(x)))))
    model = lorentzian if shape == 'lorentzian' else gaussian
    start = [x[peak], width / 2 if shape == 'lorentzian' else width / 2.3548, y[peak] - offset, offset]

    try:
        popt, pcov = curve_fit(model, x, y, p0=start, maxfev=MAX_ITERATIONS * 10)
    except RuntimeError as e:
        raise FitFailure(f"line fit did not converge ({e})", float('nan'))
    errors = np.sqrt(np.clip(np.diag(pcov), 0.0, None))

    factor = 2.0 if shape == 'lorentzian' else 2 * math.sqrt(2 * math.log(2))
    return LineFit(
        center_nm=float(popt[0]),
        fwhm_nm=float(factor * abs(popt[1])),
        amplitude=float(popt[2]),
        offset=float(popt[3]),
        shape=shape,
        errors={'center_nm': float(errors[0]), 'fwhm_nm': float(factor * errors[1]),
                'amplitude': float(errors[2]), 'offset': float(errors[3])},
    )


# emitter statistics

def _fits_frame(fits: Union[pd.DataFrame, Sequence[SaturationFit]]) -> pd.DataFrame:
    if isinstance(fits, pd.DataFrame):
        return _frame(fits, ('I_sat_cps', 'P_sat_mW'))
    return pd.DataFrame({'I_sat_cps': [f.I_sat_cps for f in fits], 'P_sat_mW': [f.P_sat_mW for f in fits]})


def emitter_statistics(fits: Union[pd.DataFrame, Sequence[SaturationFit]]) -> Dict[str, float]:
    """Mean, standard deviation and range of I_sat and P_sat over a group of emitters"""
    frame = _fits_frame(fits)
    if frame.empty:
        raise DomainError('no emitters to summarize')
    summary = frame[['I_sat_cps', 'P_sat_mW']].agg(['mean', 'std', 'min', 'max'])
    stats = {'count': int(len(frame))}
    for column in ('I_sat_cps', 'P_sat_mW'):
        for statistic in ('mean', 'std', 'min', 'max'):
            value = summary.loc[statistic, column]
            stats[f"{column}_{statistic}"] = 0.0 if pd.isna(value) else float(value)
    return stats


def enhancement_ratio(antenna_fits, bare_fits) -> Dict[str, float]:
    """Saturation count-rate gain of antenna emitters over bare-membrane emitters"""
    antenna = emitter_statistics(antenna_fits)
    bare = emitter_statistics(bare_fits)
    return {
        'mean': antenna['I_sat_cps_mean'] / bare['I_sat_cps_mean'],
        'min': antenna['I_sat_cps_min'] / bare['I_sat_cps_min'],
        'max': antenna['I_sat_cps_max'] / bare['I_sat_cps_max'],
    }
