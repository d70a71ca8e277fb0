import mpmath
import pytest
from hypothesis import HealthCheck, settings

from conjlab.exactnum import AlphaOracle
from conjlab.sturmian import ConstructorConfig, Shape, ZeroRunFamily, construct_word

# 10^3 cases per property, derandomized so every run draws the same examples
settings.register_profile(
    "conjlab", max_examples=1000, derandomize=True, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("conjlab")


@pytest.fixture(autouse=True)
def mpmath_precision():
    """Every test starts at 60 digits; tests that change it do not leak into others."""
    saved = mpmath.mp.dps
    mpmath.mp.dps = 60
    yield
    mpmath.mp.dps = saved


def build(alpha: str, family: str, shape: Shape, top: int = 40):
    cfg = ConstructorConfig(AlphaOracle.parse(alpha), ZeroRunFamily.parse(family), shape, top)
    return construct_word(cfg)


@pytest.fixture(scope="session")
def zeros_growing_by_one():
    """alpha = ln 2, zero runs 1, 2, 3, ... placed before each block of ones."""
    return build("ln2", "identity", Shape.ZerosFirst)


@pytest.fixture(scope="session")
def sixths_word():
    """alpha = ln2/ln3, zero runs n - floor(5n/6) after each block of ones."""
    return build("ln2/ln3", "sixths", Shape.OnesFirst, top=200)


@pytest.fixture(scope="session")
def power_runs_word():
    """alpha = ln 2, zero runs floor(1.3^n)."""
    return build("ln2", "pow:13/10", Shape.ZerosFirst)


@pytest.fixture(scope="session")
def quarters_word():
    """alpha = ln2/ln3, zero runs n - floor(n/4)."""
    return build("ln2/ln3", "quarters", Shape.OnesFirst, top=200)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
