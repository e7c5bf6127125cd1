import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fdrelay import NetworkParams, db_to_linear

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

MEANS = ("mu_sr", "mu_rd", "mu_sb", "mu_rb", "mu_cr", "mu_cd", "mu_cb", "phi_bar")


def perturbed(rng: np.random.Generator, spread_db: float = 10.0, **fixed) -> NetworkParams:
    """Baseline scenario with every mean scaled by a log-uniform factor in +-spread_db."""
    base = NetworkParams.baseline()
    means = {k: getattr(base, k) * float(db_to_linear(rng.uniform(-spread_db, spread_db)))
             for k in MEANS}
    means.update(fixed)
    return base.replace(**means)


db = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@st.composite
def scenarios(draw, max_relays=4, max_subcarriers=4):
    base = NetworkParams.baseline()
    means = {k: getattr(base, k) * float(db_to_linear(draw(db))) for k in MEANS}
    return base.replace(
        **means,
        p_s_max=float(db_to_linear(draw(db))), p_r_max=float(db_to_linear(draw(db))),
        s=float(db_to_linear(draw(st.floats(-5, 5)))),
        alpha=draw(st.floats(0.05, 0.95)), kappa=float(db_to_linear(draw(db))),
        n_relays=draw(st.integers(1, max_relays)),
        n_subcarriers=draw(st.integers(1, max_subcarriers)))


@pytest.fixture
def baseline():
    return NetworkParams.baseline()


# -- acceptance summary ------------------------------------------------------

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[name] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA, key=lambda n: int(n.split("_")[2])):
        verdict, detail = _CRITERIA[name]
        terminalreporter.write_line(f"{verdict}  {name}: {detail}")
