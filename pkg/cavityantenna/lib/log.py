import logging
import sys
from typing import Optional, Union

import colorama

LOGGER_NAME = 'cavityantenna'

_LEVEL_COLORS = {
    logging.DEBUG: colorama.Fore.CYAN,
    logging.INFO: colorama.Fore.GREEN,
    logging.WARNING: colorama.Fore.YELLOW,
    logging.ERROR: colorama.Fore.RED,
    logging.CRITICAL: colorama.Fore.RED + colorama.Style.BRIGHT,
}


class ColorFormatter(logging.Formatter):
    """
    Console formatter that prefixes each record with a colored level name
    """
    def __init__(self, fmt: str = '%(levelname)s %(name)s: %(message)s', use_color: bool = True):
        super().__init__(fmt)
        self.use_color = use_color

    def format(self, record: logging.LogRecord) -> str:
        message = super().format(record)
        if not self.use_color:
            return message
        color = _LEVEL_COLORS.get(record.levelno, '')
        return f"{color}{message}{colorama.Style.RESET_ALL}"


def get_logger(name: Optional[str] = None) -> logging.Logger:
    if not name:
        return logging.getLogger(LOGGER_NAME)
    if name.startswith(LOGGER_NAME):
        return logging.getLogger(name)
    return logging.getLogger(f"{LOGGER_NAME}.{name}")


def configure_logging(level: Union[int, str] = 'INFO', stream=None) -> logging.Logger:
    """
    Install a single colored stream handler on the package logger.
    Calling it again only updates the level.
    """
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level)

    handler = next((h for h in logger.handlers if getattr(h, '_cavityantenna', False)), None)
    if handler is None:
        colorama.just_fix_windows_console()
        stream = stream or sys.stderr
        handler = logging.StreamHandler(stream)
        handler.setFormatter(ColorFormatter(use_color=hasattr(stream, 'isatty') and stream.isatty()))
        handler._cavityantenna = True
        logger.addHandler(handler)
        logger.propagate = False
    else:
        try:
            handler.setStream(stream or sys.stderr)
        except ValueError:
            # previous stream already closed
            handler.stream = stream or sys.stderr
    handler.setLevel(level)
    return logger
