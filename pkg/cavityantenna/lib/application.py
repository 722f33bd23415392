import traceback
from typing import Any, Optional

import click

from cavityantenna.lib.errors import ExitStatus, exit_status_for
from cavityantenna.lib.log import configure_logging, get_logger
from cavityantenna.lib.request import RunConfig
from cavityantenna.lib.response import ResultWriter
from cavityantenna.lib.router import Router
from cavityantenna.lib.settings import Settings, load_settings

logger = get_logger(__name__)


class Application(Router):
    """
    Main application: command registry plus settings and the run loop
    """
    def __init__(self, settings: Optional[Settings] = None):
        super().__init__()
        self.settings = (settings or load_settings()).as_dict()

    def set(self, setting: str, value: Any):
        """Override a setting"""
        self.settings[setting] = value
        return self

    def get(self, setting: str, default: Any = None) -> Any:
        return self.settings.get(setting, default)

    def resolve(self, config: RunConfig) -> RunConfig:
        """Fill unset run options from the application settings"""
        if config.threads is None:
            config.threads = self.get('threads')
        if config.material_dir is None:
            config.material_dir = self.get('material_dir')
        return config

    def run(self, config: RunConfig, writer: Optional[ResultWriter] = None) -> ResultWriter:
        """
        Execute one command through the middleware chain; the writer carries
        the exit status and the artifacts
        """
        configure_logging(self.get('log_level', 'INFO'))
        config = self.resolve(config)
        writer = writer or ResultWriter(config.output_dir)
        handler = self.find_command(config.command)

        def execute_handler():
            if handler is None:
                writer.status(ExitStatus.VALIDATION_ERROR)
                click.echo(f"unknown command '{config.command}'", err=True)
                return
            handler(config, writer)

        chain = list(self.middleware)

        def process_chain(index: int = 0):
            if index >= len(chain):
                execute_handler()
                return
            chain[index](config, writer, lambda: process_chain(index + 1))

        try:
            process_chain()
        except Exception as error:
            logger.debug(traceback.format_exc())
            writer.status(exit_status_for(error))
            click.echo(f"{config.command}: {error}", err=True)

        return writer.end()
