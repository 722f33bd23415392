"""
cavityantenna - dipole emission and planar Fabry-Perot antennas for color centers in diamond
"""

from cavityantenna.lib.application import Application
from cavityantenna.lib.commands import router as command_router
from cavityantenna.lib.errors import CavityAntennaError, ExitStatus
from cavityantenna.lib.materials import ComplexIndex, Material, get_material
from cavityantenna.lib.middleware import Middleware
from cavityantenna.lib.request import RunConfig
from cavityantenna.lib.response import ResultWriter
from cavityantenna.lib.router import Router
from cavityantenna.lib.settings import Settings, load_settings
from cavityantenna.lib.stack import DipoleSource, Layer, Stack, load_stack
from cavityantenna.lib.template import create_engine, get_default_engine


def cavityantenna(settings: Settings = None) -> Application:
    """
    Create an application with every command and the default middleware
    (logging, manifest, error handling) mounted
    """
    app = Application(settings)
    app.use(Middleware.logger())
    app.use(Middleware.manifest())
    app.use(Middleware.error_handler())
    app.use(command_router)
    return app


__version__ = '0.1.0'

__all__ = [
    'cavityantenna',
    'Application',
    'Router',
    'RunConfig',
    'ResultWriter',
    'Middleware',
    'Settings',
    'load_settings',
    'create_engine',
    'get_default_engine',
    'ExitStatus',
    'CavityAntennaError',
    'ComplexIndex',
    'Material',
    'get_material',
    'Layer',
    'DipoleSource',
    'Stack',
    'load_stack',
]
