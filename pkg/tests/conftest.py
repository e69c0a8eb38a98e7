from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from routelp.instance import (KtsppInstance, MetricInstance, OtspInstance, WeightedMultigraph,
                              metric_closure, path_metric)

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


A, B, C, D = range(4)


@pytest.fixture
def path4():
    return path_metric(4, ("a", "b", "c", "d"))


@pytest.fixture
def tri3():
    one = Fraction(1)
    return MetricInstance.from_matrix([[0, one, one], [one, 0, one], [one, one, 0]], ("o1", "o2", "u"))


@st.composite
def metrics(draw, min_n=2, max_n=7, allow_zero=True):
    """Metric closure of a random complete graph with small integer weights."""
    n = draw(st.integers(min_n, max_n))
    lo = 0 if allow_zero else 1
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            edges.append((u, v, Fraction(draw(st.integers(lo, 9)))))
    return metric_closure(WeightedMultigraph(n, tuple(edges)))


@st.composite
def ktspp_instances(draw, min_n=2, max_n=7, max_k=3, distinct=True):
    m = draw(metrics(min_n=max(min_n, 2), max_n=max_n))
    n = m.n
    k = draw(st.integers(1, max(1, min(max_k, n // 2 if distinct else max_k))))
    if distinct:
        perm = draw(st.permutations(range(n)))
        pairs = tuple((perm[2 * i], perm[2 * i + 1]) for i in range(k))
    else:
        pairs = tuple((draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))) for _ in range(k))
    return KtsppInstance(m, pairs)


@st.composite
def otsp_instances(draw, min_n=2, max_n=7, max_k=3):
    m = draw(metrics(min_n=min_n, max_n=max_n))
    k = draw(st.integers(1, min(max_k, m.n)))
    perm = draw(st.permutations(range(m.n)))
    return OtspInstance(m, tuple(perm[:k]))


def one_two_metric(n, seed):
    """Random metric with every distance in {1, 2}; these often give fractional LPs."""
    import numpy as np
    rng = np.random.default_rng(seed)
    M = [[Fraction(0)] * n for _ in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            M[u][v] = M[v][u] = Fraction(int(rng.integers(1, 3)))
    return MetricInstance.from_matrix(M)


def lp_is_fractional(lp):
    return any(q.denominator > 1 for q in lp.x.values()) or any(q.denominator > 1 for q in lp.z.values())


def fractional_ktspp(count, n_range=(5, 8), max_k=2, start=0, limit=5000):
    """First ``count`` seeds (from ``start``) whose 1-2 metric instance has a fractional LP."""
    import numpy as np
    from routelp.algorithms import KtsppPipeline
    out = []
    for seed in range(start, start + limit):
        rng = np.random.default_rng(10**6 + seed)
        n = int(rng.integers(*n_range))
        k = int(rng.integers(1, max_k + 1))
        perm = [int(x) for x in rng.permutation(n)]
        inst = KtsppInstance(one_two_metric(n, seed), tuple((perm[2 * i], perm[2 * i + 1]) for i in range(k)))
        pipe = KtsppPipeline(inst)
        if lp_is_fractional(pipe.lp):
            out.append(pipe)
            if len(out) == count:
                break
    return out


def fractional_otsp(count, n=8, k=3, start=0, limit=5000):
    """Like :func:`fractional_ktspp` for OTSP instances of fixed size."""
    import numpy as np
    from routelp.algorithms import OtspPipeline
    out = []
    for seed in range(start, start + limit):
        rng = np.random.default_rng(2 * 10**6 + seed)
        order = tuple(int(x) for x in rng.permutation(n)[:k])
        pipe = OtspPipeline(OtspInstance(one_two_metric(n, 7000 + seed), order))
        if lp_is_fractional(pipe.lp):
            out.append(pipe)
            if len(out) == count:
                break
    return out
