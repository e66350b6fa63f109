import sys

import numpy as np
import pytest

from advact import _kernels_py
from advact.autodiff import set_checked
from advact.kernels import compiled_module


@pytest.fixture(autouse=True)
def checked():
    """Every test runs with NaN/Inf rejection switched on."""
    previous = set_checked(True)
    yield
    set_checked(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


BACKENDS = [pytest.param(_kernels_py, id="python")]
if compiled_module() is not None:
    BACKENDS.append(pytest.param(compiled_module(), id="cython"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts at the end of the run, one line per criterion."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
