import pytest

from crestline import dispersion, reduction, stream, vorticity

# linear vorticity omega = psi, branch (-, 1): two negative eigenvalues with
# frequency ratio 0.66696
TWO_MODE = dict(gamma=1.0, s=3.569, branch=("-", 1))


@pytest.fixture(scope="session")
def b1_stream():
    return stream.build_stream(vorticity.constant(1.0), 1.5)


@pytest.fixture(scope="session")
def b1_model(b1_stream):
    spec = dispersion.solve_spectrum(b1_stream, b1_stream.model, 6)
    return reduction.build_model(b1_stream, spec)


@pytest.fixture(scope="session")
def two_mode_stream():
    return stream.build_stream(vorticity.linear(TWO_MODE["gamma"]), TWO_MODE["s"], TWO_MODE["branch"])


@pytest.fixture(scope="session")
def two_mode_spectrum(two_mode_stream):
    return dispersion.solve_spectrum(two_mode_stream, two_mode_stream.model, 8)


@pytest.fixture(scope="session")
def two_mode_model(two_mode_stream, two_mode_spectrum):
    return reduction.build_model(two_mode_stream, two_mode_spectrum)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
