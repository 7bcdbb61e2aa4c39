import numpy as np
import pytest

from intbounds.data import Sample, Target, TransformSpec, transform_outcome
from intbounds.montecarlo import DgpSpec, Y0, dgp_sample

ACCEPTANCE_LINES = []


@pytest.fixture
def record_acceptance():
    def record(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def miv_sample(dgp=1, n=500, seed=0):
    raw = dgp_sample(DgpSpec(dgp, n), seed)
    return transform_outcome(raw, TransformSpec(1.0, Y0, -Y0, Target.LOWER_BOUND))


@pytest.fixture
def dgp1_sample():
    return miv_sample(1, 500, 11)


@pytest.fixture
def uniform_sample():
    rng = np.random.default_rng(3)
    v = rng.uniform(0, 1, 2000)
    y = np.sin(2 * v) + 0.3 * rng.standard_normal(v.size)
    return Sample(y=y, z=np.ones_like(v), v=v)
