"""
Objective evaluation, parameter sweeps, particle-swarm search and local
refinement of the collection factor.
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from scipy.signal import find_peaks

from cavityantenna.lib.dipole import collection_factor
from cavityantenna.lib.errors import DomainError, OpenResonanceError, ValidationError
from cavityantenna.lib.log import get_logger
from cavityantenna.lib.stack import Stack, validate, with_params
from cavityantenna.lib.tmm import Polarization, stack_reflectance, unpolarized_reflectance

logger = get_logger(__name__)

FREE_PARAMETERS = ('t0', 'd', 't1', 't2')

# 1/e^2 intensity diameter of a Gaussian beam over its FWHM
SPOT_FWHM_TO_BEAM_DIAMETER = np.sqrt(2.0 / np.log(2.0))

# sweep axis name -> stack parameter
AXES = {
    't0': 't0',
    'd': 'd',
    't1': 't1',
    't2': 't2',
    'lambda': 'wavelength_nm',
    'theta': 'theta_deg',
    'na': None,
    'aoi': None,
}


@dataclass(frozen=True)
class ParameterSpace:
    """
    Free parameters with (lower_nm, upper_nm) bounds on top of a stack template
    """
    template: Optional[Stack]
    bounds: Mapping[str, Tuple[float, float]]
    numerical_aperture: float = 0.8

    def __post_init__(self):
        if not self.bounds:
            raise ValidationError('parameter space needs at least one free parameter')
        unknown = set(self.bounds) - set(FREE_PARAMETERS)
        if unknown and self.template is not None:
            raise ValidationError('unknown free parameters', sorted(unknown))
        for name, (lower, upper) in self.bounds.items():
            if lower > upper:
                raise ValidationError(f"bounds of '{name}' must satisfy lower <= upper")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.bounds[n][0] for n in self.names], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.bounds[n][1] for n in self.names], dtype=float)

    def as_dict(self, vector: Sequence[float]) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.names, vector)}

    def as_vector(self, params: Union[Mapping[str, float], Sequence[float]]) -> np.ndarray:
        if isinstance(params, Mapping):
            return np.array([params[n] for n in self.names], dtype=float)
        return np.asarray(params, dtype=float)


@dataclass(frozen=True)
class ObjectiveResult:
    xi: float
    feasible: bool


@dataclass
class PSOResult:
    best_params: Dict[str, float]
    best_xi: float
    trace: np.ndarray
    evaluations: int


@dataclass
class RefineResult:
    params: Dict[str, float]
    xi: float
    start_xi: float
    iterations: int
    converged: bool


@dataclass
class SweepGrid:
    """
    Values over the Cartesian product of the axes; values.shape == axis lengths
    """
    axes: List[Tuple[str, np.ndarray]]
    values: np.ndarray
    feasible: np.ndarray
    quantity: str = 'xi'
    metadata: Dict[str, object] = field(default_factory=dict)

    def axis(self, name: str) -> np.ndarray:
        for axis_name, values in self.axes:
            if axis_name == name:
                return values
        raise KeyError(name)

    def transposed(self, order: Sequence[str]) -> 'SweepGrid':
        names = [name for name, _ in self.axes]
        permutation = [names.index(name) for name in order]
        return SweepGrid(
            axes=[self.axes[i] for i in permutation],
            values=np.transpose(self.values, permutation),
            feasible=np.transpose(self.feasible, permutation),
            quantity=self.quantity,
            metadata=dict(self.metadata),
        )


@dataclass
class GradientReport:
    slope: float
    spot_diameter_nm: float
    acceptable_shift_nm: float
    bound_nm_per_um: float
    working_point_nm: Optional[float] = None


def _build(space: ParameterSpace, params: Mapping[str, float]) -> Stack:
    return with_params(space.template, **params)


def objective(params: Union[Mapping[str, float], Sequence[float]], space: ParameterSpace) -> ObjectiveResult:
    """
    Collection factor of the template with `params` applied; infeasible points score 0
    """
    values = space.as_dict(space.as_vector(params))
    stack = _build(space, values)
    if stack.dipole.depth_nm >= stack.host.thickness_nm or validate(stack):
        return ObjectiveResult(0.0, False)
    return ObjectiveResult(collection_factor(stack, space.numerical_aperture), True)


def _xi(vector: np.ndarray, space: ParameterSpace) -> float:
    return objective(vector, space).xi


def _parallel(threads: Optional[int]) -> Parallel:
    return Parallel(n_jobs=threads or 1)


def pso(space: ParameterSpace, swarm_size: int = 50, iterations: int = 200, seed: int = 0,
        threads: Optional[int] = None, inertia: float = 0.729, cognitive: float = 1.49,
        social: float = 1.49, fitness: Optional[Callable[[np.ndarray], float]] = None) -> PSOResult:
    """
    Global particle-swarm maximization with reflecting bounds; deterministic for a fixed seed.
    trace[i] is the best value after iteration i (trace[0] after initialization).
    """
    rng = np.random.default_rng(seed)
    lower, upper = space.lower, space.upper
    span = upper - lower
    dimension = len(space.names)

    positions = lower + rng.random((swarm_size, dimension)) * span
    velocities = (rng.random((swarm_size, dimension)) * 2 - 1) * 0.1 * span
    with _parallel(threads) as parallel:
        def _score(points: np.ndarray) -> np.ndarray:
            if fitness is not None:
                return np.array([fitness(p) for p in points])
            return np.array(parallel(delayed(_xi)(p, space) for p in points))

        scores = _score(positions)
        evaluations = swarm_size
        best_positions, best_scores = positions.copy(), scores.copy()
        leader = int(np.argmax(best_scores))
        global_position, global_score = best_positions[leader].copy(), float(best_scores[leader])
        trace = [global_score]

        for iteration in range(iterations):
            r1 = rng.random((swarm_size, dimension))
            r2 = rng.random((swarm_size, dimension))
            velocities = (inertia * velocities
                          + cognitive * r1 * (best_positions - positions)
                          + social * r2 * (global_position - positions))
            positions = positions + velocities

            below, above = positions < lower, positions > upper
            positions = np.where(below, 2 * lower - positions, positions)
            positions = np.where(above, 2 * upper - positions, positions)
            velocities = np.where(below | above, -velocities, velocities)
            positions = np.clip(positions, lower, upper)

            scores = _score(positions)
            evaluations += swarm_size
            improved = scores > best_scores
            best_positions[improved] = positions[improved]
            best_scores[improved] = scores[improved]
            leader = int(np.argmax(best_scores))
            if best_scores[leader] > global_score:
                global_position, global_score = best_positions[leader].copy(), float(best_scores[leader])
            trace.append(global_score)
            logger.debug('pso iteration %d: best xi %.6f', iteration + 1, global_score)

    logger.info('pso finished: xi = %.4f after %d evaluations', global_score, evaluations)
    return PSOResult(space.as_dict(global_position), global_score, np.array(trace), evaluations)


def _central_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, lower: np.ndarray,
                      upper: np.ndarray, step: float) -> np.ndarray:
    gradient = np.zeros_like(x)
    for i in range(x.size):
        forward, backward = x.copy(), x.copy()
        forward[i] = min(x[i] + step, upper[i])
        backward[i] = max(x[i] - step, lower[i])
        spread = forward[i] - backward[i]
        if spread > 0:
            gradient[i] = (func(forward) - func(backward)) / spread
    return gradient


def local_refine(start_params: Union[Mapping[str, float], Sequence[float]], space: ParameterSpace,
                 step: float = 0.1, max_iterations: int = 200, gradient_tolerance: float = 1e-5,
                 fitness: Optional[Callable[[np.ndarray], float]] = None) -> RefineResult:
    """
    Bounded quasi-Newton ascent (L-BFGS-B) with central finite differences; never returns
    less than the start value
    """
    lower, upper = space.lower, space.upper
    start = np.clip(space.as_vector(start_params), lower, upper)
    evaluate = fitness or (lambda vector: _xi(vector, space))

    def negative(x):
        return -evaluate(np.clip(x, lower, upper))

    def negative_gradient(x):
        return _central_gradient(negative, np.clip(x, lower, upper), lower, upper, step)

    start_value = evaluate(start)
    result = minimize(
        negative, start, jac=negative_gradient, method='L-BFGS-B',
        bounds=list(zip(lower, upper)),
        options={'maxiter': max_iterations, 'gtol': gradient_tolerance, 'ftol': 1e-15},
    )
    refined = np.clip(result.x, lower, upper)
    value = evaluate(refined)
    if value < start_value:
        refined, value = start, start_value

    return RefineResult(space.as_dict(refined), float(value), float(start_value), int(result.nit),
                        bool(result.success))


def optimize(space: ParameterSpace, swarm_size: int = 50, iterations: int = 200, seed: int = 0,
             threads: Optional[int] = None,
             fitness: Optional[Callable[[np.ndarray], float]] = None) -> Tuple[PSOResult, RefineResult]:
    """Swarm search followed by local refinement of the swarm's best point"""
    swarm = pso(space, swarm_size=swarm_size, iterations=iterations, seed=seed, threads=threads, fitness=fitness)
    refined = local_refine(swarm.best_params, space, fitness=fitness)
    return swarm, refined


def _evaluate_point(template: Stack, point: Dict[str, float], numerical_aperture: float, quantity: str,
                    polarization: Optional[str]) -> Tuple[float, bool]:
    stack_params = {AXES[name]: value for name, value in point.items() if AXES.get(name)}
    na = point.get('na', numerical_aperture)
    stack = with_params(template, **stack_params)

    if quantity == 'reflectance':
        angle = point.get('aoi', 0.0)
        if polarization in (None, 'unpolarized'):
            return float(unpolarized_reflectance(stack, stack.wavelength_nm, angle)), True
        return stack_reflectance(stack, stack.wavelength_nm, angle, Polarization.parse(polarization))[0], True

    if stack.dipole.depth_nm >= stack.host.thickness_nm or validate(stack):
        return 0.0, False
    return collection_factor(stack, na), True


def _evaluate_row(template, points, numerical_aperture, quantity, polarization):
    return [_evaluate_point(template, p, numerical_aperture, quantity, polarization) for p in points]


def sweep(template: Stack, axes: Mapping[str, Sequence[float]], numerical_aperture: float = 0.8,
          quantity: Optional[str] = None, polarization: Optional[str] = None,
          threads: Optional[int] = None) -> SweepGrid:
    """
    xi (or reflectance when an angle-of-incidence axis is present) at every grid point
    """
    if not axes:
        raise ValidationError('sweep needs at least one axis')
    unknown = set(axes) - set(AXES)
    if unknown:
        raise ValidationError('unknown sweep axes', sorted(unknown))
    if quantity is None:
        quantity = 'reflectance' if 'aoi' in axes else 'xi'
    if quantity not in ('xi', 'reflectance'):
        raise ValidationError(f"unknown sweep quantity '{quantity}'")

    names = list(axes)
    values = [np.asarray(axes[name], dtype=float) for name in names]
    shape = tuple(len(v) for v in values)
    points = [dict(zip(names, combo)) for combo in itertools.product(*values)]
    row_length = shape[-1]
    rows = [points[i:i + row_length] for i in range(0, len(points), row_length)]

    with _parallel(threads) as parallel:
        results = parallel(delayed(_evaluate_row)(template, row, numerical_aperture, quantity, polarization)
                           for row in rows)

    flat = [item for row in results for item in row]
    grid = SweepGrid(
        axes=list(zip(names, values)),
        values=np.array([v for v, _ in flat], dtype=float).reshape(shape),
        feasible=np.array([ok for _, ok in flat], dtype=bool).reshape(shape),
        quantity=quantity,
        metadata={'numerical_aperture': numerical_aperture, 'polarization': polarization},
    )
    logger.info('sweep over %s: %d points', ' x '.join(names), len(flat))
    return grid


def fwhm(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Full width at half maximum of the global peak, linear interpolation on both flanks
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peak = int(np.argmax(y))
    if peak == 0 or peak == y.size - 1:
        raise OpenResonanceError('the maximum lies on an endpoint of the curve')
    half = y[peak] / 2

    left = np.nonzero(y[:peak] < half)[0]
    right = np.nonzero(y[peak + 1:] < half)[0]
    if left.size == 0 or right.size == 0:
        raise OpenResonanceError('half maximum is not crossed on both flanks')

    i = left[-1]
    x_left = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    j = peak + 1 + right[0]
    x_right = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1])
    return float(x_right - x_left)


def resonance_maxima(x: np.ndarray, y: np.ndarray, min_relative_height: float = 0.05) -> np.ndarray:
    """Positions of local maxima of a sampled curve, parabola-refined"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peaks, _ = find_peaks(y, height=min_relative_height * np.max(y))
    positions = []
    for p in peaks:
        a, b, _ = np.polyfit(x[p - 1:p + 2] - x[p], y[p - 1:p + 2], 2)
        positions.append(x[p] - b / (2 * a) if a < 0 else x[p])
    return np.array(positions)


def resonant_thicknesses(template: Stack, wavelength_nm: float, t0_values: Sequence[float],
                         numerical_aperture: float = 0.8, threads: Optional[int] = None) -> np.ndarray:
    """Membrane thicknesses at which xi peaks for one emission wavelength"""
    grid = sweep(with_params(template, wavelength_nm=wavelength_nm), {'t0': t0_values},
                 numerical_aperture=numerical_aperture, threads=threads)
    return resonance_maxima(grid.axis('t0'), grid.values)


def resonance_wavelengths(template: Stack, t0_nm: float, wavelengths_nm: Sequence[float],
                          numerical_aperture: float = 0.8, threads: Optional[int] = None) -> np.ndarray:
    """Wavelengths at which a cavity of thickness t0 is resonant"""
    grid = sweep(with_params(template, t0=t0_nm), {'lambda': wavelengths_nm},
                 numerical_aperture=numerical_aperture, threads=threads)
    return resonance_maxima(grid.axis('lambda'), grid.values)


def dual_resonance_thickness(template: Stack, wavelengths_nm: Sequence[float], t0_values: Sequence[float],
                             numerical_aperture: float = 0.8, threshold: float = 0.5,
                             threads: Optional[int] = None) -> float:
    """
    Smallest t0 at which the cavity is resonant for every wavelength at once.

    Each xi(t0) curve is normalized to its maximum. The result is the smallest
    resonance maximum of any curve at which every normalized curve reaches `threshold`.
    """
    t0_values = np.asarray(t0_values, dtype=float)
    curves = []
    for wavelength in wavelengths_nm:
        grid = sweep(with_params(template, wavelength_nm=wavelength), {'t0': t0_values},
                     numerical_aperture=numerical_aperture, threads=threads)
        curves.append(grid.values / np.max(grid.values))

    candidates = np.sort(np.concatenate([resonance_maxima(t0_values, curve) for curve in curves]))
    for t0 in candidates:
        levels = [float(np.interp(t0, t0_values, curve)) for curve in curves]
        if min(levels) >= threshold:
            logger.info('dual resonance at t0 = %.2f nm (levels %s)', t0, ', '.join(f'{v:.2f}' for v in levels))
            return float(t0)
    raise DomainError('no thickness in range is resonant for all wavelengths')


def resonance_slope(template: Stack, t0_nm: float, wavelengths_nm: Sequence[float],
                    offsets_nm: Sequence[float] = (-4.0, -2.0, 0.0, 2.0, 4.0),
                    numerical_aperture: float = 0.8, threads: Optional[int] = None) -> float:
    """
    d lambda_res / d t0 from a linear fit of the resonance wavelength nearest to the
    resonance at t0 for a few nearby thicknesses
    """
    reference = resonance_wavelengths(template, t0_nm, wavelengths_nm, numerical_aperture, threads)
    if reference.size == 0:
        raise DomainError(f"no resonance in the wavelength window at t0 = {t0_nm:g} nm")
    target = template.wavelength_nm
    anchor = reference[np.argmin(np.abs(reference - target))]

    thicknesses, resonances = [], []
    for offset in offsets_nm:
        found = resonance_wavelengths(template, t0_nm + offset, wavelengths_nm, numerical_aperture, threads)
        if found.size:
            thicknesses.append(t0_nm + offset)
            resonances.append(found[np.argmin(np.abs(found - anchor))])
    if len(thicknesses) < 2:
        raise DomainError('resonance could not be tracked across thickness offsets')
    slope, _ = np.polyfit(thicknesses, resonances, 1)
    return float(slope)


def gradient_bound(slope: float, spot_diameter_nm: float, acceptable_shift_nm: float) -> float:
    """
    Largest thickness gradient (nm per um) keeping the resonance shift across the spot acceptable.

    `spot_diameter_nm` is the FWHM of the Gaussian excitation spot; the shift accrues over
    the 1/e^2 intensity diameter of the beam.
    """
    if slope == 0:
        raise DomainError('resonance slope must be non-zero')
    if spot_diameter_nm <= 0:
        raise DomainError('spot diameter must be positive')
    beam_diameter_um = spot_diameter_nm * SPOT_FWHM_TO_BEAM_DIAMETER / 1000.0
    return acceptable_shift_nm / (abs(slope) * beam_diameter_um)


def gradient_tolerance_report(stack_template: Stack, spot_diameter_nm: float, acceptable_shift_nm: float,
                              slope: Optional[float] = None, wavelengths_nm: Optional[Sequence[float]] = None,
                              numerical_aperture: float = 0.8, threads: Optional[int] = None) -> GradientReport:
    """
    Tolerable thickness gradient around the template's working point. The slope
    d lambda_res/d t0 is computed from the model unless given.
    """
    if slope is None:
        if wavelengths_nm is None:
            center = stack_template.wavelength_nm
            wavelengths_nm = np.arange(center - 60.0, center + 60.5, 1.0)
        slope = resonance_slope(stack_template, stack_template.t0, wavelengths_nm,
                                numerical_aperture=numerical_aperture, threads=threads)
    bound = gradient_bound(slope, spot_diameter_nm, acceptable_shift_nm)
    return GradientReport(slope=float(slope), spot_diameter_nm=float(spot_diameter_nm),
                          acceptable_shift_nm=float(acceptable_shift_nm), bound_nm_per_um=float(bound),
                          working_point_nm=stack_template.t0)
