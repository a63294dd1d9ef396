import os
import sys
import logging

from regmap_gen.constants import *

LOGGER_NAME = "regmap_gen"

_LEVEL_COLORS = {
    logging.DEBUG:   GRAY,
    logging.INFO:    CYAN,
    logging.WARNING: YELLOW,
    logging.ERROR:   RED,
}


# Colors whole records with the same palette the console messages always used
class ColorFormatter(logging.Formatter):

    def __init__(self, fmt="%(levelname)s: %(message)s", color=True):
        super().__init__(fmt)
        self.color = color

    def format(self, record):
        text = super().format(record)
        if not self.color:
            return text
        color = _LEVEL_COLORS.get(record.levelno, RED if record.levelno > logging.ERROR else "")
        return f"{color}{text}{RESET}" if color else text


def get_logger(name=None):
    return logging.getLogger(f"{LOGGER_NAME}.{name}" if name else LOGGER_NAME)


# Install a single stderr handler on the package logger; safe to call repeatedly
def setup_logging(level=logging.WARNING, stream=None):
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    stream = stream if stream is not None else sys.stderr
    logger = get_logger()
    for handler in list(logger.handlers):
        if getattr(handler, "_regmap_gen", False):
            logger.removeHandler(handler)
    handler = logging.StreamHandler(stream)
    handler._regmap_gen = True
    handler.setFormatter(ColorFormatter(color=hasattr(stream, "isatty") and stream.isatty()))
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = True
    return logger


# Hierarchical names: the top prefix is empty, so no leading underscore at depth 1
def join_prefix(prefix, name):
    return f"{prefix}_{name}" if prefix else name


# Paths in generated text are relative to the top file so output is host independent
def display_path(path, root):
    rel = os.path.relpath(os.path.abspath(path), os.path.abspath(root))
    return rel.replace(os.sep, "/")


def escape_markdown(text):
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")
