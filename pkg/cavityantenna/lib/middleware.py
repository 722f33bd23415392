import time
import traceback

import click

from cavityantenna.lib.errors import ExitStatus, exit_status_for
from cavityantenna.lib.log import get_logger

logger = get_logger(__name__)


class Middleware:
    """
    Middleware factories. A middleware is called as mw(config, writer, next).
    """

    @staticmethod
    def logger(format_string: str = ':command :status :elapsed ms'):
        """
        Log one line per command once it finished
        """
        def logger_middleware(config, writer, next):
            start_time = time.perf_counter()
            try:
                next()
            finally:
                elapsed = time.perf_counter() - start_time
                message = format_string
                message = message.replace(':command', config.command)
                message = message.replace(':status', str(writer.status_code))
                message = message.replace(':elapsed', f"{elapsed * 1000:.2f}")
                message = message.replace(':stack', str(config.stack_file))
                logger.info(message)

        return logger_middleware

    @staticmethod
    def error_handler(show_traceback: bool = False):
        """
        Turn exceptions escaping a command into an exit status and a message on
        standard error
        """
        def error_middleware(config, writer, next):
            try:
                next()
            except (KeyboardInterrupt, SystemExit):
                raise
            except Exception as error:
                status = exit_status_for(error)
                writer.status(status)
                kind = 'numerical non-convergence' if status == ExitStatus.NON_CONVERGENCE else 'error'
                click.echo(f"{config.command}: {kind}: {error}", err=True)
                if show_traceback:
                    traceback.print_exc()
                logger.debug('command %s failed', config.command, exc_info=True)

        return error_middleware

    @staticmethod
    def manifest():
        """
        Write manifest.json after the command, whatever its outcome
        """
        def manifest_middleware(config, writer, next):
            try:
                next()
            finally:
                materials = []
                wavelengths = []
                if config.stack_file:
                    try:
                        stack = config.stack
                        materials = stack.materials()
                        wavelengths = [stack.wavelength_nm]
                    except Exception:
                        logger.debug('stack unavailable for manifest', exc_info=True)
                extra = {'summary': writer.summary} if writer.summary else None
                writer.manifest(config, materials, wavelengths, extra=extra)

        return manifest_middleware
