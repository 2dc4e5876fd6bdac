import numpy as np
import pytest

from robound.space import COMPLEX, REAL, EuclideanSpace, TruncatedSignalSpace, WeightedSpace


def singular_gram(dim, rank, field, rng):
    B = rng.standard_normal((dim, rank))
    if field == COMPLEX:
        B = B + 1j * rng.standard_normal((dim, rank))
    return B @ B.conj().T


def make_space(kind, field, rng, dim=4):
    if kind == "euclidean":
        return EuclideanSpace(dim, field)
    if kind == "weighted":
        return WeightedSpace(singular_gram(dim, dim - 1, field, rng), field)
    if kind == "signal":
        return TruncatedSignalSpace(dim - 1, dim, field=field)
    raise ValueError(kind)


SPACE_KINDS = [(k, f) for k in ("euclidean", "weighted", "signal") for f in (REAL, COMPLEX)]


@pytest.fixture(params=SPACE_KINDS, ids=[f"{k}-{f}" for k, f in SPACE_KINDS])
def any_space(request):
    kind, field = request.param
    return make_space(kind, field, np.random.default_rng(7))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_OUTCOMES = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        if ACCEPTANCE_OUTCOMES.get(name) != "FAIL":
            ACCEPTANCE_OUTCOMES[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance")
    for name, outcome in ACCEPTANCE_OUTCOMES.items():
        terminalreporter.write_line(f"{outcome}  {name.removeprefix('test_')}")
