import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from epiflow.domain import Domain
from epiflow.lang import parse
from epiflow.model import ModelConfig, build_model


@pytest.fixture(scope="session")
def booleans():
    return Domain.booleans()


@pytest.fixture(scope="session")
def int4():
    return Domain.integers(4)


@pytest.fixture(scope="session")
def copy_out_model(booleans):
    """The two-variable warm-up: x := y; out y over booleans."""
    program = parse("x := y; out y", booleans)
    return build_model(program, ModelConfig(booleans))


@pytest.fixture(scope="session")
def two_release_model(booleans):
    program = parse(
        "l := h1; release r1; out l; l := h2; release r2; out l", booleans)
    return build_model(program, ModelConfig(booleans))


def exec_from(model, **values):
    """Execution starting at the given non-flag values."""
    key = tuple(values[name] for name in model.variables)
    return model.exec_by_values[key]
