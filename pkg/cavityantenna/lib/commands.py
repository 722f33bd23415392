"""
Handlers behind every command-line command. Each takes (config, writer),
reads its options from the RunConfig and writes CSV/JSON/report artifacts.
"""

from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from cavityantenna.lib.dipole import (
    angular_spectrum,
    default_far_field,
    emission,
    enhancement_over_bulk,
    power_budget,
)
from cavityantenna.lib.errors import ValidationError
from cavityantenna.lib.fitting import (
    G2Data,
    SaturationData,
    background_ratio_from_spectra,
    emitter_statistics,
    enhancement_ratio,
    fit_g2,
    fit_line,
    fit_saturation,
    is_single_emitter,
    thickness_from_reflectance,
)
from cavityantenna.lib.materials import complex_index
from cavityantenna.lib.modes import (
    ModeKind,
    find_modes,
    leaky_to_angle,
    penetration_depth,
    resonance_check,
)
from cavityantenna.lib.optimize import (
    ParameterSpace,
    dual_resonance_thickness,
    fwhm,
    gradient_tolerance_report,
    optimize,
    sweep,
)
from cavityantenna.lib.router import Router
from cavityantenna.lib.stack import split_at_dipole, stack_to_dict
from cavityantenna.lib.tmm import Polarization, reflectance_spectrum, stack_reflectance

router = Router()


def parse_range(text: str) -> np.ndarray:
    """'start:stop:step' (stop included) or a comma-separated list"""
    text = str(text).strip()
    try:
        if ':' in text:
            start, stop, step = (float(part) for part in text.split(':'))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return start + step * np.arange(count)
        return np.array([float(part) for part in text.split(',')])
    except ValueError:
        raise ValidationError(f"'{text}' is not a range start:stop:step or a list of numbers")


def parse_assignment(text: str) -> Tuple[str, str]:
    """'name=value' pairs of --axis and --bound options"""
    if '=' not in text:
        raise ValidationError(f"expected name=value, got '{text}'")
    name, value = text.split('=', 1)
    return name.strip(), value.strip()


def _read_rows(path: str, columns: Sequence[str]) -> np.ndarray:
    frame = pd.read_csv(path, comment='#')
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ValidationError(f"{path} is missing columns", missing)
    return frame[list(columns)].to_numpy(dtype=float)


def _stack_metadata(config) -> Dict[str, object]:
    return {'stack': stack_to_dict(config.stack)}


@router.command('reflectance')
def reflectance_command(config, writer):
    """Plane-wave reflectance, transmittance and absorptance from the collection side"""
    stack = config.stack
    wavelength = config.get('wavelength_nm', stack.wavelength_nm)

    if config.get('wavelengths'):
        wavelengths = parse_range(config.get('wavelengths'))
        angle = float(config.get('angle_deg', 0.0))
        columns = {'lambda_nm': wavelengths}
        for polarization in (Polarization.S, Polarization.P):
            r, t, a = reflectance_spectrum(stack, wavelengths, angle, polarization)
            columns.update({f"R_{polarization.value}": r, f"T_{polarization.value}": t,
                            f"A_{polarization.value}": a})
        metadata = {'angle_deg': angle}
    else:
        angles = parse_range(config.get('angles', '0:89:0.5'))
        columns = {'angle_deg': angles}
        for polarization in (Polarization.S, Polarization.P):
            r, t, a = stack_reflectance(stack, wavelength, angles, polarization)
            columns.update({f"R_{polarization.value}": r, f"T_{polarization.value}": t,
                            f"A_{polarization.value}": a})
        metadata = {'lambda_nm': wavelength}

    frame = pd.DataFrame(columns)
    metadata.update(_stack_metadata(config))
    writer.csv('reflectance.csv', frame, metadata).send({'rows': len(frame)})


def _spectrum(config):
    stack = config.stack
    host = complex_index(stack.host.material, stack.wavelength_nm).real
    n_eff_max = float(config.get('n_eff_max', host + 0.5))
    return angular_spectrum(stack, n_eff_max, resolution=float(config.get('resolution', 1e-3)))


@router.command('spectrum')
def spectrum_command(config, writer):
    """Angular power emission spectrum p(n_eff) for s and p polarization"""
    spectrum = _spectrum(config)
    frame = pd.DataFrame({
        'n_eff': spectrum.n_eff_grid,
        'p_s': spectrum.p_s,
        'p_p': spectrum.p_p,
        'density_s': spectrum.density_s,
        'density_p': spectrum.density_p,
    })
    metadata = _stack_metadata(config)
    metadata['unresolved_peaks'] = spectrum.unresolved
    writer.csv('spectrum.csv', frame, metadata).send({
        'points': len(frame),
        'unresolved_peaks': spectrum.unresolved,
    })


@router.command('farfield')
def farfield_command(config, writer):
    """Far-field intensity map in the collection half space"""
    field = default_far_field(config.stack, float(config.get('theta_step_deg', 0.25)),
                              int(config.get('phi_points', 360)))
    theta, phi = np.meshgrid(field.theta_deg, field.phi_deg, indexing='ij')
    frame = pd.DataFrame({'theta_deg': theta.ravel(), 'phi_deg': phi.ravel(),
                          'intensity': field.intensity.ravel()})
    writer.csv('farfield.csv', frame, _stack_metadata(config)).send({
        'hemisphere_power': field.hemisphere_power(),
    })


@router.command('xi')
def xi_command(config, writer):
    """Collection factor, total and upper-half-space power"""
    stack = config.stack
    na = float(config.get('na', 0.8))
    result = emission(stack, na, with_lower=bool(config.get('with_lower', False)))
    data = {
        'xi': result.xi,
        'P_tot_over_P_hom': result.P_tot_over_P_hom,
        'P_upper_over_P_hom': result.P_upper_over_P_hom,
        'P_lower_over_P_hom': result.P_lower_over_P_hom,
        'numerical_aperture': na,
    }
    if config.get('bulk', False):
        data['enhancement_over_bulk'] = enhancement_over_bulk(stack, na)

    writer.json('xi.json', data)
    writer.report('xi.txt', 'xi.txt.j2', {'stack_file': config.stack_file, 'stack': stack, **data})
    writer.send(data)


@router.command('modes')
def modes_command(config, writer):
    """Leaky, guided and SPP channels from peaks of the emission spectrum"""
    stack = config.stack
    spectrum = _spectrum(config)
    upper = complex_index(stack.upper, stack.wavelength_nm).real
    modes = find_modes(spectrum, upper_index=upper)

    rows = []
    for mode in modes:
        theta_up = leaky_to_angle(mode.n_eff, upper) if mode.kind is ModeKind.LEAKY else np.nan
        rows.append({'n_eff': mode.n_eff, 'pol': mode.polarization.value.upper(), 'kind': mode.kind.value,
                     'fwhm': mode.fwhm_n_eff, 'peak_height': mode.peak_height, 'theta_up_deg': theta_up})
    frame = pd.DataFrame(rows, columns=['n_eff', 'pol', 'kind', 'fwhm', 'peak_height', 'theta_up_deg'])
    writer.csv('modes.csv', frame, _stack_metadata(config)).send({'modes': len(frame)})


@router.command('resonance')
def resonance_command(config, writer):
    """Penetration depths into both mirrors and the Fabry-Perot resonance condition"""
    stack = config.stack
    polarization = Polarization.parse(config.get('polarization', 's'))
    n_eff = config.get('n_eff')
    if n_eff is None:
        upper = complex_index(stack.upper, stack.wavelength_nm).real
        leaky = [m for m in find_modes(_spectrum(config), upper_index=upper)
                 if m.kind is ModeKind.LEAKY and m.polarization is polarization]
        if not leaky:
            raise ValidationError(f"no leaky {polarization.value} mode found, pass --n-eff")
        n_eff = max(leaky, key=lambda m: m.peak_height).n_eff
    n_eff = float(n_eff)

    upper_mirror, lower_mirror = split_at_dipole(stack)
    d_up = penetration_depth(upper_mirror, n_eff, stack.wavelength_nm, polarization)
    d_low = penetration_depth(lower_mirror, n_eff, stack.wavelength_nm, polarization)
    n0 = complex_index(stack.host.material, stack.wavelength_nm).real
    check = resonance_check(stack.t0, n0, n_eff, d_up, d_low, stack.wavelength_nm)

    data = {
        'n_eff': n_eff,
        'polarization': polarization.value,
        'd_pen_upper_nm': d_up,
        'd_pen_lower_nm': d_low,
        'order_q': check.order_q,
        'lhs_nm': check.lhs_nm,
        'rhs_nm': check.rhs_nm,
        'residual_nm': check.residual_nm,
    }
    writer.json('resonance.json', data).send(data)


def sweep_frame(grid) -> pd.DataFrame:
    """
    1D: axis and value columns. 2D: matrix whose header row holds the values
    of the second axis. More axes: one row per grid point.
    """
    names = [name for name, _ in grid.axes]
    if len(names) == 1:
        return pd.DataFrame({names[0]: grid.axes[0][1], grid.quantity: grid.values,
                             'feasible': grid.feasible})
    if len(names) == 2:
        columns = [f"{value:.9g}" for value in grid.axes[1][1]]
        frame = pd.DataFrame(np.where(grid.feasible, grid.values, 0.0), columns=columns)
        frame.insert(0, f"{names[0]}\\{names[1]}", grid.axes[0][1])
        return frame
    mesh = np.meshgrid(*[values for _, values in grid.axes], indexing='ij')
    columns = {name: m.ravel() for name, m in zip(names, mesh)}
    columns[grid.quantity] = grid.values.ravel()
    columns['feasible'] = grid.feasible.ravel()
    return pd.DataFrame(columns)


@router.command('sweep')
def sweep_command(config, writer):
    """xi (or reflectance) over a grid of geometry, source or collection parameters"""
    stack = config.stack
    axes = {}
    for item in config.require('axes'):
        name, values = parse_assignment(item)
        axes[name] = parse_range(values)
    na = float(config.get('na', 0.8))
    grid = sweep(stack, axes, numerical_aperture=na, polarization=config.get('polarization'),
                 threads=config.threads)

    sidecar = {
        'axes': {name: values for name, values in grid.axes},
        'quantity': grid.quantity,
        'numerical_aperture': na,
        'template': stack_to_dict(stack),
        'materials': [m.name for m in stack.materials()],
    }
    writer.csv('sweep.csv', sweep_frame(grid), {'quantity': grid.quantity, 'numerical_aperture': na})
    writer.json('sweep.json', sidecar)

    best = np.unravel_index(int(np.argmax(grid.values)), grid.values.shape)
    summary = {'max': float(grid.values[best]),
               'argmax': {name: float(values[i]) for (name, values), i in zip(grid.axes, best)}}
    if len(grid.axes) == 1:
        try:
            summary['fwhm'] = fwhm(grid.axes[0][1], grid.values)
        except ValueError:
            summary['fwhm'] = None
    writer.send(summary)


def _parameter_space(config) -> ParameterSpace:
    bounds = {}
    for item in config.require('bounds'):
        name, values = parse_assignment(item)
        parts = values.replace(':', ',').split(',')
        if len(parts) != 2:
            raise ValidationError(f"bound of '{name}' must be lower:upper, got '{values}'")
        try:
            lower, upper = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"bound of '{name}' must be numeric, got '{values}'")
        bounds[name] = (float(lower), float(upper))
    return ParameterSpace(config.stack, bounds, float(config.get('na', 0.8)))


@router.command('optimize')
def optimize_command(config, writer):
    """Particle swarm search followed by local refinement of xi"""
    space = _parameter_space(config)
    swarm, refined = optimize(space, swarm_size=int(config.get('swarm_size', 50)),
                              iterations=int(config.get('iterations', 200)),
                              seed=config.seed, threads=config.threads)

    data = {
        'swarm': {'params': swarm.best_params, 'xi': swarm.best_xi, 'evaluations': swarm.evaluations},
        'refined': {'params': refined.params, 'xi': refined.xi, 'iterations': refined.iterations,
                    'converged': refined.converged},
        'bounds': {name: list(b) for name, b in space.bounds.items()},
        'seed': config.seed,
    }
    trace = pd.DataFrame({'iteration': np.arange(swarm.trace.size), 'best_xi': swarm.trace})
    writer.csv('trace.csv', trace, {'seed': config.seed}).json('optimize.json', data)
    writer.send({'xi': refined.xi, 'params': refined.params})


@router.command('fit-sat')
def fit_saturation_command(config, writer):
    """Saturation-curve fit of count rate against excitation power"""
    data = SaturationData.from_csv(config.require('data'))
    fix_D = None if config.get('free_dark', False) else float(config.get('dark_cps', 500.0))
    fit = fit_saturation(data, fix_c_to_zero=bool(config.get('fix_c', False)), fix_D=fix_D)
    report = fit.as_dict()
    writer.json('fit_saturation.json', report)
    writer.report('fit_saturation.txt', 'fit_saturation.txt.j2', {'fit': fit, 'data_file': config.get('data')})
    writer.send(report['parameters'])


@router.command('fit-g2')
def fit_g2_command(config, writer):
    """Jitter-convolved autocorrelation fit"""
    data = G2Data.from_csv(config.require('data'), float(config.get('jitter_ns', 0.3)))
    fit = fit_g2(data)
    report = fit.as_dict()
    report['single_emitter'] = is_single_emitter(fit)

    if config.get('emitter_spectrum') and config.get('background_spectrum'):
        window = parse_range(config.get('window_nm', '600,640'))
        report['background_ratio_from_spectra'] = background_ratio_from_spectra(
            _read_rows(config.get('emitter_spectrum'), ('lambda_nm', 'intensity')),
            _read_rows(config.get('background_spectrum'), ('lambda_nm', 'intensity')),
            (float(window[0]), float(window[-1])),
        )

    writer.json('fit_g2.json', report)
    writer.report('fit_g2.txt', 'fit_g2.txt.j2', {'fit': fit, 'report': report})
    writer.send({'g2_zero_raw': fit.g2_zero_raw, 'background_ratio': fit.background_ratio,
                 'single_emitter': report['single_emitter']})


@router.command('thickness')
def thickness_command(config, writer):
    """Membrane thickness from a white-light reflectance spectrum"""
    rows = _read_rows(config.require('data'), ('lambda_nm', 'reflectance'))
    bounds = parse_range(config.get('t0_bounds', '150,1000'))
    fit = thickness_from_reflectance(rows, config.stack, (float(bounds[0]), float(bounds[-1])))
    report = fit.as_dict()
    writer.json('thickness.json', report)
    writer.csv('thickness_scan.csv', pd.DataFrame({'t0_nm': fit.scan_t0_nm, 'chi2': fit.scan_chi2}))
    writer.send({'t0_nm': fit.t0_nm, 'uncertainty_nm': fit.uncertainty_nm})


@router.command('gradient-report')
def gradient_report_command(config, writer):
    """Largest tolerable membrane-thickness gradient under the excitation spot"""
    slope = config.get('slope')
    report = gradient_tolerance_report(
        config.stack,
        spot_diameter_nm=float(config.get('spot_nm', 800.0)),
        acceptable_shift_nm=float(config.get('shift_nm', 6.0)),
        slope=None if slope is None else float(slope),
        numerical_aperture=float(config.get('na', 0.8)),
        threads=config.threads,
    )
    data = {
        'slope': report.slope,
        'spot_diameter_nm': report.spot_diameter_nm,
        'acceptable_shift_nm': report.acceptable_shift_nm,
        'bound_nm_per_um': report.bound_nm_per_um,
        'working_point_nm': report.working_point_nm,
        'slope_source': 'given' if slope is not None else 'model',
    }
    writer.json('gradient_report.json', data)
    writer.report('gradient_report.txt', 'gradient_report.txt.j2', data)
    writer.send(data)


@router.command('working-point')
def working_point_command(config, writer):
    """Smallest membrane thickness resonant at every listed wavelength"""
    wavelengths = parse_range(config.get('wavelengths', '516,620'))
    t0_values = parse_range(config.get('t0_range', '50:800:1'))
    t0 = dual_resonance_thickness(config.stack, wavelengths, t0_values,
                                  numerical_aperture=float(config.get('na', 0.8)), threads=config.threads)
    data = {'t0_nm': t0, 'wavelengths_nm': wavelengths}
    writer.json('working_point.json', data).send(data)


@router.command('budget')
def budget_command(config, writer):
    """Split of the emitted power into upper, lower and bound channels"""
    budget = power_budget(config.stack)
    data = {'total': budget.total, 'upper': budget.upper, 'lower': budget.lower, 'other': budget.other}
    writer.json('budget.json', data).send(data)


@router.command('fit-line')
def fit_line_command(config, writer):
    """Lorentzian or Gaussian fit of the zero-phonon line"""
    rows = _read_rows(config.require('data'), ('lambda_nm', 'intensity'))
    fit = fit_line(rows, config.get('shape', 'lorentzian'))
    report = fit.as_dict()
    writer.json('fit_line.json', report).send(report['parameters'])


@router.command('stats')
def stats_command(config, writer):
    """Saturation statistics per emitter group and the antenna/bare enhancement"""
    frame = pd.read_csv(config.require('data'), comment='#')
    if 'group' not in frame.columns:
        frame['group'] = 'all'

    groups: Dict[str, Dict[str, float]] = {}
    for name, members in frame.groupby('group', sort=True):
        groups[str(name)] = emitter_statistics(members)

    data: Dict[str, object] = {'groups': groups}
    antenna, bare = config.get('antenna_group', 'antenna'), config.get('bare_group', 'bare')
    if antenna in groups and bare in groups:
        data['enhancement'] = enhancement_ratio(frame[frame['group'] == antenna], frame[frame['group'] == bare])
    writer.json('stats.json', data).send(data)
