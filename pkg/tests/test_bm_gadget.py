import math

import numpy as np
import pytest

from mdz.corespace import Bijection, PreconditionError, StructuralError, validate_metric
from mdz.harness import hexagon, make_rng, random_near_isometry
from mdz.normed import NormSpec, norm_eval
from mdz.reductions import (
    bm_gadget, bm_gadget_pull, bm_gadget_push, choose_constants, induced_vertex_map, vec_degree_audit,
)
from mdz.reductions.bm_gadget import COVER_HIGH, COVER_LOW, edge_weight

L2 = NormSpec.lp(2, 2)


def realized(nu, V):
    return [float(norm_eval(nu, V[i] - V[j])) for i in range(len(V)) for j in range(len(V)) if i != j]


def gadget_pair(seed, c=1.02):
    rng = make_rng(seed)
    V = hexagon(rng)
    T = random_near_isometry(rng, 2, c)
    W = V @ T.T
    cs = choose_constants(realized(L2, V) + realized(L2, W))
    return V, T, bm_gadget(L2, V, cs), bm_gadget(L2, W, cs)


def test_edge_weight_clamp():
    assert edge_weight(1, 2.1) == pytest.approx(2.1)
    assert edge_weight(1, 1e6) == 3
    assert edge_weight(1, 0.1) == 2


def test_constants_cover_every_value():
    vals = list(np.random.default_rng(0).uniform(0.3, 5, 40))
    cs = choose_constants(vals)
    for v in vals:
        assert any(COVER_LOW < c * v < COVER_HIGH for c in cs)


def test_gadget_is_a_metric_with_addition_distances():
    V = hexagon(make_rng(1))
    g = bm_gadget(L2, V, choose_constants(realized(L2, V)))
    assert validate_metric(g.space).ok
    # v0 + v1 = v2 in a hexagon
    i0, x1, x3, t = g.vec(0), g.index[("add", 0, 1, 1)], g.index[("add", 0, 1, 3)], g.vec(2)
    assert g.space.dist[i0, x1] == 5
    assert g.space.dist[x3, t] == 5


def test_closure_and_duplicates():
    V = np.array([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(StructuralError):
        bm_gadget(L2, V, [1.0], require_closure=True)
    with pytest.raises(StructuralError):
        bm_gadget(L2, np.array([[1.0, 0.0], [1.0, 0.0]]), [1.0])


def test_degree_audit_finds_exactly_the_vectors():
    _, _, gn, gl = gadget_pair(2)
    assert vec_degree_audit(gn)[1] and vec_degree_audit(gl)[1]


def test_push_identity():
    V = hexagon(make_rng(3))
    g = bm_gadget(L2, V, choose_constants(realized(L2, V)))
    w = bm_gadget_push(np.eye(2), g, g)
    assert w.meta["lip"] == pytest.approx(1) and w.meta["lip_inv"] == pytest.approx(1)
    res = bm_gadget_pull(w.payload, g, g)
    assert res.ok
    assert np.array_equal(res.S, np.arange(6))
    assert res.bound == pytest.approx(0, abs=1e-12)


def test_push_pull_near_isometry():
    for seed in range(4):
        V, T, gn, gl = gadget_pair(10 + seed)
        w = bm_gadget_push(T, gn, gl)
        mx = max(w.meta["lip"], w.meta["lip_inv"])
        assert mx <= 1.02 + 1e-9
        res = bm_gadget_pull(w.payload, gn, gl)
        assert res.ok
        assert np.array_equal(res.S, np.arange(6))
        assert np.allclose(res.matrix, T, atol=1e-9)
        assert res.bound == pytest.approx(2 * math.log(mx), abs=1e-12)


def test_orientation_flip_reverses_paths():
    V = hexagon(make_rng(4))
    g = bm_gadget(L2, V, choose_constants(realized(L2, V)))
    tp = induced_vertex_map(-np.eye(2), g, g)
    labels = {i: lab for lab, i in g.index.items()}
    neg = {a: int(np.nonzero(np.all(np.isclose(V, -V[a]), axis=1))[0][0]) for a in range(6)}
    flipped = 0
    for lab, i in g.index.items():
        if lab[0] == "path":
            _, a, b, m, s = lab
            img = labels[int(tp.perm[i])]
            if a != b and img[1] == neg[b]:
                assert img == ("path", neg[b], neg[a], m, m + 1 - s)
                flipped += 1
    assert flipped > 0
    w = bm_gadget_push(-np.eye(2), g, g)
    assert w.meta["lip"] == pytest.approx(1) and w.meta["lip_inv"] == pytest.approx(1)


def test_pull_flags_uncovered_pairs():
    V = hexagon(make_rng(5))
    cs = choose_constants(realized(L2, V))[:1]
    g = bm_gadget(L2, V, cs)
    res = bm_gadget_pull(Bijection.identity(g.space.n), g, g)
    assert res.uncovered


def test_pull_rejects_expanding_maps():
    _, _, gn, gl = gadget_pair(6)
    perm = np.arange(gn.space.n)
    perm[[gn.vec(0), gn.vec(3)]] = perm[[gn.vec(3), gn.vec(0)]]
    with pytest.raises(PreconditionError):
        bm_gadget_pull(Bijection(perm), gn, gn)
