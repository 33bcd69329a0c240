import itertools
import math

import numpy as np
import pytest

from mdz.corespace import ClassBounds, DomainError, FiniteMetricSpace, ResourceError
from mdz.distances import (
    coarse_lipschitz_fit, gh_bijective, gh_bounds, gh_exact, gh_exhaustive, hl_check, hl_closeness,
    lip_constants, lipschitz_exact, measure_witness, phi1, phi2,
)
from mdz.harness import gen_metric

from conftest import two_point


# Independent oracles: plain enumeration, no pruning, no shared helpers.

def relations(na, nb):
    cells = list(itertools.product(range(na), range(nb)))
    for mask in range(1, 2 ** len(cells)):
        rel = [cells[i] for i in range(len(cells)) if mask >> i & 1]
        if {a for a, _ in rel} == set(range(na)) and {b for _, b in rel} == set(range(nb)):
            yield rel


def oracle_gh(d, e):
    best = math.inf
    for rel in relations(len(d), len(e)):
        dis = max(abs(d[a, a2] - e[b, b2]) for a, b in rel for a2, b2 in rel)
        best = min(best, dis)
    return best / 2


def oracle_hl(d, e):
    def need(x, y):
        return max(0.0, (y - x) / max(1.0, x), (x - y) / max(1.0, y))
    return min(max(need(d[a, a2], e[b, b2]) for a, b in rel for a2, b2 in rel)
               for rel in relations(len(d), len(e)))


def oracle_lip(d, e):
    n = len(d)
    best = {"BBI": math.inf, "GROMOV": math.inf, "DK": math.inf}
    for p in itertools.permutations(range(n)):
        r = [e[p[i], p[j]] / d[i, j] for i in range(n) for j in range(n) if i != j]
        lo, hi = math.log(min(r)), math.log(max(r))
        best["BBI"] = min(best["BBI"], max(hi, -lo))
        best["GROMOV"] = min(best["GROMOV"], abs(hi) + abs(lo))
        best["DK"] = min(best["DK"], hi - lo)
    return best


def test_gh_examples():
    a, b = two_point(1), two_point(2)
    assert gh_exact(a, a)[0] == 0
    assert gh_exact(a, b)[0] == pytest.approx(0.5, abs=1e-12)
    one = FiniteMetricSpace(np.zeros((1, 1)))
    assert gh_exact(one, b)[0] == pytest.approx(1.0, abs=1e-12)


def test_gh_identity_witness():
    m = gen_metric(ClassBounds(1, 2), 4, 3)
    val, w = gh_exact(m, m)
    assert val == 0
    assert w.payload.pairs == frozenset((i, i) for i in range(4))


def test_gh_bijective_examples():
    a, b = two_point(1), two_point(2)
    assert gh_bijective(a, a)[0] == 0
    assert gh_bijective(a, b)[0] == pytest.approx(0.5, abs=1e-12)


def test_bijective_strictly_above_gh_on_uneven_clusters():
    # three clustered points plus one far one, against two pairs
    x = np.array([0.0, 0.1, 0.2, 5.0])
    a = FiniteMetricSpace(np.abs(x[:, None] - x[None, :]))
    y = np.array([0.0, 0.1, 5.0, 5.1])
    b = FiniteMetricSpace(np.abs(y[:, None] - y[None, :]))
    g, _ = gh_exact(a, b)
    h, _ = gh_bijective(a, b)
    assert h > g + 1e-3
    assert g == pytest.approx(oracle_gh(a.dist, b.dist), abs=1e-12)


@pytest.mark.parametrize("na,nb", [(2, 3), (3, 3), (2, 4), (3, 2)])
def test_gh_matches_enumeration_oracle(na, nb):
    rng = np.random.default_rng(na * 10 + nb)
    for _ in range(6):
        a = gen_metric(ClassBounds(0.5, 2), na, rng)
        b = gen_metric(ClassBounds(0.5, 2), nb, rng)
        want = oracle_gh(a.dist, b.dist)
        assert gh_exact(a, b)[0] == pytest.approx(want, abs=1e-12)
        assert gh_exact(a, b, method="bnb")[0] == pytest.approx(want, abs=1e-12)


def test_exhaustive_and_branch_and_bound_agree_on_larger_spaces():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = gen_metric(ClassBounds(1, 3), 4, rng)
        b = gen_metric(ClassBounds(1, 3), 4, rng)
        g1, w1 = gh_exhaustive(a, b)
        g2, w2 = gh_exact(a, b, method="bnb")
        assert g1 == pytest.approx(g2, abs=1e-12)
        assert measure_witness(w2, a, b) == pytest.approx(g2, abs=1e-12)


def test_gh_bounds_bracket_the_value():
    rng = np.random.default_rng(9)
    for _ in range(10):
        a = gen_metric(ClassBounds(0.5, 2), 4, rng)
        b = gen_metric(ClassBounds(0.5, 3), 5, rng)
        lo, hi = gh_bounds(a, b)
        g, _ = gh_exact(a, b)
        assert lo - 1e-12 <= g <= hi + 1e-12


def test_gh_budget_exhaustion():
    rng = np.random.default_rng(1)
    a = gen_metric(ClassBounds(1, 2), 7, rng)
    b = gen_metric(ClassBounds(1, 2), 7, rng)
    with pytest.raises(ResourceError):
        gh_exact(a, b, budget=5)


def test_gh_bijective_requires_equal_sizes():
    with pytest.raises(DomainError):
        gh_bijective(two_point(1), FiniteMetricSpace(np.zeros((1, 1))))


def test_lipschitz_variants_on_scaled_pair():
    a, b = two_point(1), two_point(2)
    assert lipschitz_exact(a, b, "BBI")[0] == pytest.approx(math.log(2))
    assert lipschitz_exact(a, b, "GROMOV")[0] == pytest.approx(2 * math.log(2))
    assert lipschitz_exact(a, b, "DK")[0] == pytest.approx(0.0, abs=1e-12)
    for v in ("BBI", "GROMOV", "DK"):
        assert lipschitz_exact(a, a, v)[0] == 0


def test_lipschitz_matches_permutation_oracle():
    rng = np.random.default_rng(21)
    for _ in range(8):
        a = gen_metric(ClassBounds(0.5, 2), 5, rng)
        b = gen_metric(ClassBounds(0.5, 2), 5, rng)
        want = oracle_lip(a.dist, b.dist)
        for v, val in want.items():
            got, w = lipschitz_exact(a, b, v)
            assert got == pytest.approx(val, abs=1e-12)
            assert measure_witness(w, a, b) == pytest.approx(val, abs=1e-12)


def test_lip_constants_of_scaling():
    lip, inv = lip_constants(two_point(1), two_point(3), __import__("mdz").Bijection.identity(2))
    assert (lip, inv) == (3, 1 / 3)


def test_hl_examples():
    assert hl_closeness(two_point(1), two_point(1))[0] == 0
    assert hl_closeness(two_point(1), two_point(1.2))[0] == pytest.approx(0.2)
    assert hl_closeness(two_point(10), two_point(12))[0] == pytest.approx(0.2)


def test_hl_matches_enumeration_oracle():
    rng = np.random.default_rng(33)
    for _ in range(8):
        a = gen_metric(ClassBounds(0.3, 3), 3, rng)
        b = gen_metric(ClassBounds(0.3, 3), 3, rng)
        got, w = hl_closeness(a, b)
        assert got == pytest.approx(oracle_hl(a.dist, b.dist), abs=1e-12)
        assert hl_check(a, b, w.payload, got)
        assert not hl_check(a, b, w.payload, got - 1e-6) or got == 0


def test_phi_moduli():
    assert phi1(1e-9) < 1e-8
    assert phi2(1e-9) < 1e-3
    # frozen from direct evaluation of the two closed forms
    assert phi1(0.1) == pytest.approx(0.7262051, abs=1e-6)
    assert phi2(0.01) == pytest.approx(0.3253102, abs=1e-6)
    xs = np.linspace(1e-4, 1, 50)
    assert all(np.diff([phi1(x) for x in xs]) > 0)
    assert all(np.diff([phi2(x) for x in xs]) > 0)
    with pytest.raises(DomainError):
        phi1(0)


def test_coarse_fit_examples():
    assert coarse_lipschitz_fit([(t, t) for t in (1, 2, 5)]) == (1.0, 0.0)
    assert coarse_lipschitz_fit([(t, 3 * t + 5) for t in (1, 2, 5)]) == pytest.approx((3.0, 5.0))
    assert coarse_lipschitz_fit([(t, min(t, 1)) for t in (0.2, 0.5, 1, 2, 4)]) == (0.0, 1.0)


def test_coarse_fit_dominates_every_pair():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 5, (40, 2))
    A, B = coarse_lipschitz_fit(pts)
    assert (pts[:, 1] <= A * pts[:, 0] + B + 1e-12).all()
