import math

import numpy as np
import pytest

from mdz.corespace import (
    Bijection, ClassBounds, Correspondence, FiniteMetricSpace, PreconditionError, Witness, validate_metric,
)
from mdz.distances import hl_check, hl_closeness, lipschitz_exact
from mdz.harness import gen_metric, perturb_bilipschitz, relabel
from mdz.reductions import Levels, hl_pull, hl_push, suspend, suspend_pull, suspend_push

from conftest import two_point


def identity_lip(n):
    return Witness("LIP", Bijection.identity(n), 0.0, {"variant": "BBI"})


def test_suspension_values():
    d = two_point(0.6)
    s = suspend(d, -3, 3)
    lv = Levels(2, -3, 3)
    assert s.n == 2 * 7 + 1
    assert s.dist[lv.index(0, 0), lv.index(1, 0)] == pytest.approx(0.6)
    assert s.dist[lv.index(0, 1), lv.index(1, -1)] == pytest.approx(20.3)
    assert s.dist[lv.index(0, 0), lv.club] == pytest.approx(5)
    assert s.dist[lv.index(0, -1), lv.club] == pytest.approx(7)


def test_suspension_is_a_metric():
    rng = np.random.default_rng(0)
    for _ in range(5):
        d = gen_metric(ClassBounds(0.5, 1), 4, rng)
        assert validate_metric(suspend(d, -3, 3)).ok
        assert validate_metric(suspend(d, -3, 0)).ok


def test_push_identity_is_exact():
    d = gen_metric(ClassBounds(0.5, 1), 3, 1)
    w, ds, es = suspend_push(identity_lip(3), d, d)
    assert w.meta["distortion"] == 0
    lv = Levels(3, -3, 3)
    assert (lv.club, lv.club) in w.payload.pairs
    assert {(lv.index(i, k), lv.index(i, k)) for i in range(3) for k in lv.ks} <= w.payload.pairs


def test_push_scaled_copy():
    d = gen_metric(ClassBounds(0.5, 1), 4, 2)
    e = FiniteMetricSpace(1.1 * d.dist)
    r = math.log(1.1)
    w, ds, es = suspend_push(Witness("LIP", Bijection.identity(4), r, {}), d, e)
    assert w.meta["distortion"] <= 0.2 + 1e-9
    lv = Levels(4, -3, 3)
    assert np.allclose(ds.dist[lv.club], es.dist[lv.club])


def test_pull_identity():
    d = gen_metric(ClassBounds(0.5, 1), 3, 3)
    w, _, _ = suspend_push(identity_lip(3), d, d)
    rep = suspend_pull(w, d, d, 1e-12)
    assert rep.ok
    assert rep.bound == pytest.approx(0, abs=1e-9)


def test_pull_round_trip_bound():
    rng = np.random.default_rng(4)
    for _ in range(10):
        d = gen_metric(ClassBounds(0.5, 1), 3, rng)
        e, lip = perturb_bilipschitz(d, 1.05, rng)
        r = lip.quality
        w, _, _ = suspend_push(lip, d, e)
        rep = suspend_pull(w, d, e, w.meta["distortion"] / 2 + 1e-12)
        assert rep.ok, rep.failed
        assert rep.bound <= math.log(1 + 24 * math.expm1(r)) + 1e-9
        assert lipschitz_exact(d, e)[0] <= rep.bound + 1e-9


def test_pull_rejects_level_mismatch():
    d = gen_metric(ClassBounds(0.5, 1), 3, 5)
    w, _, _ = suspend_push(identity_lip(3), d, d)
    lv = Levels(3, -3, 3)
    bad = Correspondence(set(w.payload.pairs) | {(lv.index(0, 1), lv.index(1, 2))})
    rep = suspend_pull(Witness("GH", bad, 0.0), d, d, 0.1)
    assert not rep.ok and rep.failed == "liptogh1"


def test_pull_precondition():
    d = two_point(1)
    w, _, _ = suspend_push(identity_lip(2), d, d)
    with pytest.raises(PreconditionError):
        suspend_pull(w, d, d, 0.25)


def test_hl_identity_pipeline():
    d = gen_metric(ClassBounds(0.5, 3), 3, 6)
    hl = Witness("HL", Correspondence([(i, i) for i in range(3)]), 0.0)
    w, _, _ = hl_push(hl, d, d)
    rep = hl_pull(w, d, d, 1e-12)
    assert rep.ok and rep.measured == 0


def test_hl_round_trip_on_known_closeness():
    a, b = two_point(1), two_point(1.2)
    eps_hl, hw = hl_closeness(a, b)
    assert eps_hl == pytest.approx(0.2)
    w, _, _ = hl_push(hw, a, b)
    rep = hl_pull(w, a, b, w.meta["distortion"] / 2 + 1e-12)
    assert rep.ok
    assert rep.bound >= 0.2
    assert hl_check(a, b, rep.r0, rep.bound)


def test_hl_pull_detects_missing_level_zero_row():
    d = gen_metric(ClassBounds(0.5, 3), 3, 7)
    hl = Witness("HL", Correspondence([(i, i) for i in range(3)]), 0.0)
    w, _, _ = hl_push(hl, d, d)
    lv = Levels(3, -3, 0)
    cut = Correspondence(p for p in w.payload.pairs if p[0] != lv.index(1, 0))
    rep = hl_pull(Witness("GH", cut, 0.0), d, d, 0.1)
    assert not rep.ok and rep.failed == "r0-correspondence"


def test_relabelled_perturbation_round_trip():
    rng = np.random.default_rng(9)
    d = gen_metric(ClassBounds(0.5, 1), 4, rng)
    e, lip = perturb_bilipschitz(d, 1.2, rng)
    perm = rng.permutation(4)
    e = relabel(e, perm)
    w, _, _ = suspend_push(Witness("LIP", Bijection(perm), lip.quality, {}), d, e)
    assert w.meta["distortion"] < 2 * math.expm1(lip.quality) + 1e-9
    assert suspend_pull(w, d, e, w.meta["distortion"] / 2 + 1e-12).ok
