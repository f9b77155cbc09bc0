import time

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from mlrank.field import field_of_order
from mlrank.mform import MultilinearForm
from mlrank.mlmatrix import FormMatrix, ScalarMatrix

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SMALL_Q = [2, 3, 4, 5, 7]


def fields(qs=SMALL_Q):
    return st.sampled_from(qs).map(field_of_order)


@st.composite
def forms(draw, ctx=None, blocks=(1, 2), n=2, max_terms=6):
    ctx = draw(fields()) if ctx is None else ctx
    import itertools

    idxs = list(itertools.product(range(n), repeat=len(blocks)))
    chosen = draw(st.lists(st.sampled_from(idxs), max_size=max_terms, unique=True)) if idxs else []
    coefs = draw(st.lists(st.integers(1, ctx.q - 1), min_size=len(chosen), max_size=len(chosen)))
    return MultilinearForm(ctx, blocks, n, dict(zip(chosen, coefs)))


@st.composite
def form_matrices(draw, qs=(2, 3, 5, 7), d=None, n=None, max_dim=3):
    ctx = field_of_order(draw(st.sampled_from(qs)))
    d = draw(st.integers(0, 2)) if d is None else d
    n = draw(st.integers(1, 2)) if n is None else n
    a = draw(st.integers(1, max_dim))
    b = draw(st.integers(1, max_dim))
    blocks = tuple(range(1, d + 1))
    ents = [[draw(forms(ctx, blocks, n, max_terms=3)) for _ in range(b)] for _ in range(a)]
    return FormMatrix(ctx, blocks, n, ents)


@st.composite
def scalar_matrices(draw, ctx=None, max_dim=4, square=False):
    ctx = draw(fields()) if ctx is None else ctx
    a = draw(st.integers(1, max_dim))
    b = a if square else draw(st.integers(1, max_dim))
    rows = draw(st.lists(st.lists(st.integers(0, ctx.q - 1), min_size=b, max_size=b),
                         min_size=a, max_size=a))
    return ScalarMatrix(ctx, rows)


# -- acceptance reporting ----------------------------------------------------------------

_ACCEPTANCE: dict[str, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    t0 = time.perf_counter()
    yield
    item.user_properties.append(("elapsed", time.perf_counter() - t0))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    num, title = mark.args
    elapsed = dict(item.user_properties).get("elapsed", 0.0)
    status = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE[num] = (title, status, elapsed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE, key=lambda s: int(s)):
        title, status, elapsed = _ACCEPTANCE[num]
        tr.write_line(f"[{int(num):02d}] {status}  {title}  ({elapsed:.2f}s)")
