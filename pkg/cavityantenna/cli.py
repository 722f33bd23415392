"""
Command-line front end: `cavityantenna [global options] <command> [options]`
"""

import json
import sys
from typing import Optional, Sequence

import click

from cavityantenna import cavityantenna
from cavityantenna.lib.errors import CavityAntennaError, ExitStatus
from cavityantenna.lib.request import RunConfig
from cavityantenna.lib.settings import load_settings

stack_option = click.option('--stack', 'stack_file', required=True, help='Stack definition (JSON).')
data_option = click.option('--data', required=True, help='Measured data (CSV).')
na_option = click.option('--na', type=float, default=0.8, show_default=True, help='Collection numerical aperture.')


def _run(ctx: click.Context, command: str, stack_file: Optional[str] = None, **options):
    obj = ctx.obj
    try:
        settings = load_settings()
    except CavityAntennaError as error:
        click.echo(f"{command}: error: {error}", err=True)
        ctx.exit(ExitStatus.VALIDATION_ERROR)
    settings = settings.updated(log_level=obj['log_level'], material_dir=obj['material_dir'])

    try:
        config = RunConfig(command=command, stack_file=stack_file, output_dir=obj['output_dir'],
                           options=options, seed=obj['seed'], threads=obj['threads'],
                           material_dir=obj['material_dir'])
    except CavityAntennaError as error:
        click.echo(f"{command}: error: {error}", err=True)
        ctx.exit(ExitStatus.VALIDATION_ERROR)

    writer = cavityantenna(settings).run(config)
    if writer.summary and writer.status_code == ExitStatus.OK:
        click.echo(json.dumps(writer.summary, indent=2, sort_keys=True))
    ctx.exit(writer.status_code)


@click.group()
@click.option('--threads', type=click.IntRange(min=1), default=None,
              help='Worker processes (default: CAVITYANTENNA_THREADS or all cores).')
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              default=None, help='Log level (default: CAVITYANTENNA_LOG_LEVEL or INFO).')
@click.option('--output-dir', type=click.Path(file_okay=False), default='.', show_default=True,
              help='Directory for result files.')
@click.option('--seed', type=int, default=0, show_default=True, help='Random seed of the optimizer.')
@click.option('--material-dir', type=click.Path(file_okay=False), default=None,
              help='Extra material JSON files (default: CAVITYANTENNA_MATERIAL_DIR).')
@click.version_option(package_name='cavityantenna')
@click.pass_context
def cli(ctx, threads, log_level, output_dir, seed, material_dir):
    """Dipole emission, collection factor and design of planar diamond antennas."""
    ctx.obj = {'threads': threads, 'log_level': log_level, 'output_dir': output_dir, 'seed': seed,
               'material_dir': material_dir}


@cli.command()
@stack_option
@click.option('--angles', default='0:89:0.5', show_default=True, help='Incidence angles start:stop:step (deg).')
@click.option('--wavelength-nm', type=float, default=None, help='Wavelength (default: dipole wavelength).')
@click.option('--wavelengths', default=None, help='Wavelength range start:stop:step; switches to a spectrum.')
@click.option('--angle-deg', type=float, default=0.0, show_default=True, help='Angle for a spectrum.')
@click.pass_context
def reflectance(ctx, stack_file, **options):
    """Reflectance, transmittance and absorptance."""
    _run(ctx, 'reflectance', stack_file, **options)


@cli.command()
@stack_option
@click.option('--n-eff-max', type=float, default=None, help='Upper end of the n_eff grid.')
@click.option('--resolution', type=float, default=1e-3, show_default=True, help='Base n_eff step.')
@click.pass_context
def spectrum(ctx, stack_file, **options):
    """Angular power emission spectrum p(n_eff)."""
    _run(ctx, 'spectrum', stack_file, **options)


@cli.command()
@stack_option
@click.option('--theta-step-deg', type=float, default=0.25, show_default=True)
@click.option('--phi-points', type=int, default=360, show_default=True)
@click.pass_context
def farfield(ctx, stack_file, **options):
    """Far-field intensity map."""
    _run(ctx, 'farfield', stack_file, **options)


@cli.command()
@stack_option
@na_option
@click.option('--with-lower', is_flag=True, help='Also report the power into the lower half space.')
@click.option('--bulk', is_flag=True, help='Also report the enhancement over the bulk interface.')
@click.pass_context
def xi(ctx, stack_file, **options):
    """Collection factor xi."""
    _run(ctx, 'xi', stack_file, **options)


@cli.command()
@stack_option
@click.option('--n-eff-max', type=float, default=None)
@click.option('--resolution', type=float, default=1e-3, show_default=True)
@click.pass_context
def modes(ctx, stack_file, **options):
    """Leaky, guided and SPP channels."""
    _run(ctx, 'modes', stack_file, **options)


@cli.command()
@stack_option
@click.option('--n-eff', type=float, default=None, help='Mode index (default: strongest leaky mode).')
@click.option('--polarization', type=click.Choice(['s', 'p']), default='s', show_default=True)
@click.option('--n-eff-max', type=float, default=None)
@click.option('--resolution', type=float, default=1e-3, show_default=True)
@click.pass_context
def resonance(ctx, stack_file, **options):
    """Penetration depths and the resonance condition."""
    _run(ctx, 'resonance', stack_file, **options)


@cli.command()
@stack_option
@click.option('--axis', 'axes', multiple=True, required=True,
              help='name=start:stop:step with name in t0, d, t1, t2, lambda, theta, na, aoi.')
@na_option
@click.option('--polarization', type=click.Choice(['s', 'p', 'unpolarized']), default=None)
@click.pass_context
def sweep(ctx, stack_file, **options):
    """xi or reflectance over a parameter grid."""
    _run(ctx, 'sweep', stack_file, **options)


@cli.command()
@stack_option
@click.option('--bound', 'bounds', multiple=True, required=True, help='name=lower:upper with name in t0, d, t1, t2.')
@click.option('--swarm-size', type=int, default=50, show_default=True)
@click.option('--iterations', type=int, default=200, show_default=True)
@na_option
@click.pass_context
def optimize(ctx, stack_file, **options):
    """Particle swarm search and local refinement of xi."""
    _run(ctx, 'optimize', stack_file, **options)


@cli.command('fit-sat')
@data_option
@click.option('--fix-c', is_flag=True, help='Hold the linear background c at 0.')
@click.option('--dark-cps', type=float, default=500.0, show_default=True, help='Fixed dark count rate D.')
@click.option('--free-dark', is_flag=True, help='Fit D instead of holding it.')
@click.pass_context
def fit_sat(ctx, **options):
    """Saturation curve fit."""
    _run(ctx, 'fit-sat', None, **options)


@cli.command('fit-g2')
@data_option
@click.option('--jitter-ns', type=float, default=0.3, show_default=True, help='Detector jitter sigma.')
@click.option('--emitter-spectrum', default=None, help='PL spectrum on the emitter (CSV lambda_nm,intensity).')
@click.option('--background-spectrum', default=None, help='PL spectrum next to the emitter.')
@click.option('--window-nm', default='600,640', show_default=True, help='Integration window lower,upper.')
@click.pass_context
def fit_g2(ctx, **options):
    """Photon autocorrelation fit."""
    _run(ctx, 'fit-g2', None, **options)


@cli.command()
@stack_option
@data_option
@click.option('--t0-bounds', default='150,1000', show_default=True, help='Thickness scan lower,upper (nm).')
@click.pass_context
def thickness(ctx, stack_file, **options):
    """Membrane thickness from white-light reflectance."""
    _run(ctx, 'thickness', stack_file, **options)


@cli.command('gradient-report')
@stack_option
@click.option('--spot-nm', type=float, default=800.0, show_default=True)
@click.option('--shift-nm', type=float, default=6.0, show_default=True)
@click.option('--slope', type=float, default=None, help='d lambda_res / d t0 (default: from the model).')
@na_option
@click.pass_context
def gradient_report(ctx, stack_file, **options):
    """Tolerable thickness gradient."""
    _run(ctx, 'gradient-report', stack_file, **options)


@cli.command('working-point')
@stack_option
@click.option('--wavelengths', default='516,620', show_default=True)
@click.option('--t0-range', default='50:800:1', show_default=True)
@na_option
@click.pass_context
def working_point(ctx, stack_file, **options):
    """Smallest thickness resonant at all wavelengths."""
    _run(ctx, 'working-point', stack_file, **options)


@cli.command()
@stack_option
@click.pass_context
def budget(ctx, stack_file):
    """Power budget: upper, lower and bound channels."""
    _run(ctx, 'budget', stack_file)


@cli.command('fit-line')
@data_option
@click.option('--shape', type=click.Choice(['lorentzian', 'gaussian']), default='lorentzian', show_default=True)
@click.pass_context
def fit_line(ctx, **options):
    """Zero-phonon line fit."""
    _run(ctx, 'fit-line', None, **options)


@cli.command()
@data_option
@click.option('--antenna-group', default='antenna', show_default=True)
@click.option('--bare-group', default='bare', show_default=True)
@click.pass_context
def stats(ctx, **options):
    """Emitter statistics per group."""
    _run(ctx, 'stats', None, **options)


def main(argv: Optional[Sequence[str]] = None):
    """Console entry point; usage errors exit with the validation status"""
    try:
        status = cli.main(args=argv, prog_name='cavityantenna', standalone_mode=False)
    except click.ClickException as error:
        error.show()
        status = ExitStatus.VALIDATION_ERROR
    except click.Abort:
        click.echo('aborted', err=True)
        status = ExitStatus.VALIDATION_ERROR
    sys.exit(status or 0)


if __name__ == '__main__':
    main()
