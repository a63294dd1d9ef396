import os
import sys
import logging
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from regmap_gen.functions import LOGGER_NAME

REPO_ROOT   = Path(__file__).resolve().parent.parent
STATION_DIR = REPO_ROOT / "designs" / "station"
GOLDEN_DIR  = Path(__file__).resolve().parent / "golden"


def pytest_addoption(parser):
    parser.addoption("--regold", action="store_true", default=False,
                     help="Rewrite tests/golden/ from the current output instead of comparing.")


@pytest.fixture
def regold(request):
    return request.config.getoption("--regold")


@pytest.fixture
def station_dir():
    return STATION_DIR


@pytest.fixture
def station_top():
    return STATION_DIR / "station.v"


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR


# Write {relative path: text} under tmp_path and return the root
@pytest.fixture
def write_design(tmp_path):
    def write(files, root=None):
        root = Path(root) if root is not None else tmp_path
        for rel, text in files.items():
            path = root / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        return root
    return write


# setup_logging from a CLI test installs a stderr handler; keep caplog working in later tests
@pytest.fixture(autouse=True)
def _reset_package_logger():
    yield
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        if getattr(handler, "_regmap_gen", False):
            logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


PRNG_V = (STATION_DIR / "prng.v").read_text()

STATION_V = (STATION_DIR / "station.v").read_text()
