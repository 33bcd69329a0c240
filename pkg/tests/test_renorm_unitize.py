import numpy as np
import pytest

from mdz.corespace import Bijection, ClassBounds, DomainError, FiniteMetricSpace, PreconditionError, StructuralError
from mdz.harness import gen_metric, make_rng, random_near_isometry
from mdz.normed import NormSpec, norm_eval
from mdz.reductions import permutation_operator, renorm_build, renorm_push, unitize, unitize_pull
from mdz.reductions.unitize import pairwise_norms


def test_constant_metric_gives_uniform_boost():
    f = FiniteMetricSpace(0.5 * (1 - np.eye(4)))
    spec = renorm_build(f, 1.003, 0.002)
    assert [spec.boost(a, b) for a in range(4) for b in range(a + 1, 4)] == pytest.approx([1.004] * 6)


def test_two_point_metric_has_one_pair():
    spec = renorm_build(FiniteMetricSpace(np.array([[0, 0.7], [0.7, 0]])))
    assert list(spec.f) == [(0, 1)]


def test_renorm_build_rejects_out_of_class():
    with pytest.raises(DomainError):
        renorm_build(FiniteMetricSpace(np.array([[0, 2.0], [2.0, 0]])))


def test_relabelled_metric_permutes_coordinates():
    f = gen_metric(ClassBounds(0.5, 1), 4, 2)
    pi = Bijection(np.array([3, 0, 1, 2]))
    inv = np.argsort(pi.perm)
    g = FiniteMetricSpace(f.dist[np.ix_(inv, inv)])
    sf, sg = renorm_build(f), renorm_build(g)
    T = permutation_operator(pi, 4)
    X = make_rng(3).standard_normal((200, 4))
    assert np.allclose(norm_eval(sg, X @ T.T), norm_eval(sf, X))


def test_push_identity_is_isometry():
    f = gen_metric(ClassBounds(0.5, 1), 4, 4)
    s = renorm_build(f)
    w = renorm_push(Bijection.identity(4), 0.0, s, s, probes=500)
    assert w.quality == 0
    assert np.array_equal(w.payload, np.eye(4))
    assert w.meta["probe_max_ratio"] <= 1e-12


def test_push_probe_deviation():
    rng = make_rng(5)
    f = gen_metric(ClassBounds(0.5, 1), 4, rng)
    g = f.dist.copy()
    iu = np.triu_indices(4, 1)
    g[iu] = np.clip(g[iu] + rng.uniform(-0.2, 0.2, 6), 0.5, 1)
    g = FiniteMetricSpace(np.triu(g, 1) + np.triu(g, 1).T)
    sf, sg = renorm_build(f, 1.003, 0.002), renorm_build(g, 1.003, 0.002)
    w = renorm_push(Bijection.identity(4), 0.1, sf, sg)
    assert w.meta["probe_max_ratio"] <= 0.0004 + 1e-12
    assert w.quality <= 4 * 0.002 * 0.1


def test_push_rejects_far_metrics():
    f = FiniteMetricSpace(0.5 * (1 - np.eye(3)))
    g = FiniteMetricSpace(1.0 * (1 - np.eye(3)))
    with pytest.raises(PreconditionError):
        renorm_push(Bijection.identity(3), 0.1, renorm_build(f), renorm_build(g))


def test_unitize_values():
    m = unitize(NormSpec.lp(2, 2), [[0, 0], [0.4, 0], [7, 0]])
    assert m.dist[0, 1] == pytest.approx(0.4)
    assert m.dist[0, 2] == 1
    assert m.dist.max() <= 1
    with pytest.raises(StructuralError):
        unitize(NormSpec.lp(2, 2), [[0, 0], [0, 0]])


def grid(side=15, h=0.25):
    g = h * np.arange(side)
    return np.array([(x, y) for x in g for y in g])


def test_unitize_pull_identity():
    P = grid()
    n = NormSpec.lp(2, 2)
    res = unitize_pull(Bijection.identity(len(P)), 1e-9, n, P, n, P)
    assert res.ok and res.lip1 == pytest.approx(1) and res.lip1_inv == pytest.approx(1)
    N = pairwise_norms(n, P)
    assert res.pairs == int((N >= 1).sum())


def test_unitize_pull_near_isometry():
    rng = make_rng(6)
    n = NormSpec.lp(2, 2)
    P = grid()
    for _ in range(3):
        T = random_near_isometry(rng, 2, 1.05)
        Q = P @ T.T
        K = np.abs(unitize(n, P).dist - unitize(n, Q).dist).max() / 2 + 1e-12
        res = unitize_pull(Bijection.identity(len(P)), K, n, P, n, Q)
        assert res.ok
        assert max(res.lip1, res.lip1_inv) <= 1 + 6 * K


def test_unitize_pull_preconditions():
    P = grid(5)
    n = NormSpec.lp(2, 2)
    with pytest.raises(PreconditionError):
        unitize_pull(Bijection.identity(len(P)), 0.3, n, P, n, P)
    with pytest.raises(PreconditionError):
        unitize_pull(Bijection.identity(len(P)), 0.01, n, P, n, 1.2 * P)
