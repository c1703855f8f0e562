"""
Shared fixtures for the cohom1 test suite.
"""

import pytest

from cohom1.solvers.system import Params


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long high-precision tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long high-precision computation (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


# ---------------------------
# Fixtures
# ---------------------------

@pytest.fixture
def params_29():
    """The (2, 9) system of the S^12 metric."""
    return Params(2, 9)


@pytest.fixture(scope="session")
def solved_29():
    """Broyden solution for (2, 9) at 30 digits, shared by slow tests."""
    from cohom1.solvers.shooting import broyden_solve

    return broyden_solve("6.08", "6.18", 30, Params(2, 9))


@pytest.fixture(scope="session")
def linearized_29(solved_29):
    """Finite-difference linearization at solve precision 45 (delta = 1e-15)."""
    from cohom1.solvers.shooting import fd_linearize

    alpha, omega, _, _ = solved_29
    return fd_linearize(alpha, omega, 30, Params(2, 9))


@pytest.fixture
def synthetic_shot():
    """A pathless A-shot at 50 working digits carrying the published (2, 9) values."""
    from cohom1.numerics.precision import context
    from cohom1.solvers.shooting import ShotResult

    ctx = context(50)
    alpha = ctx.mpf("6.0838655")
    return ShotResult(
        params=Params(2, 9, alpha),
        parameter=alpha,
        t_stop=ctx.mpf("1.4923108"),
        endpoint=(ctx.mpf("-2.896297"), ctx.mpf("0.058442"), ctx.mpf("-6.030915"), alpha, ctx.sqrt(11)),
        endpoint_derivative=(ctx.mpf("-0.093145"), ctx.mpf("-1.678808"), ctx.mpf("-6.960761"), ctx.zero, ctx.zero),
        value=(ctx.mpf("3.1566"), ctx.mpf("0.0584")),
    )


@pytest.fixture
def synthetic_omega_shot():
    """The matching pathless Omega-shot of the mirrored (9, 2) system."""
    from cohom1.numerics.precision import context
    from cohom1.solvers.shooting import ShotResult

    ctx = context(50)
    omega = ctx.mpf("6.1859148")
    return ShotResult(
        params=Params(9, 2, omega),
        parameter=omega,
        t_stop=ctx.mpf("1.1621186"),
        endpoint=(ctx.mpf("-3.029322"), ctx.mpf("0.058442"), ctx.mpf("-1.720995"), omega, ctx.sqrt(11)),
        endpoint_derivative=(ctx.mpf("-0.020498"), ctx.mpf("-9.323279"), ctx.mpf("-9.521176"), ctx.zero, ctx.zero),
        value=(ctx.mpf("3.1566"), ctx.mpf("0.0584")),
        mirrored=True,
    )
