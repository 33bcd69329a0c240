import numpy as np
import pytest

from mdz.corespace import Bijection, Correspondence, PreconditionError, StructuralError, Witness, validate_metric
from mdz.harness import make_rng, random_polytopal
from mdz.normed import NormSpec, norm_eval
from mdz.reductions import case_distortions, kadets_gadget, kadets_pull, kadets_push, sign_sum_audit, symmetric_sample


def setup(seed=0, half=4, scale=1.001):
    rng = make_rng(seed)
    X = random_polytopal(rng, 3, 5)
    k = len(X.functionals) // 2
    s = rng.uniform(1.0, scale, k)
    Y = NormSpec.polytopal(X.functionals * np.concatenate([s, s])[:, None])
    SX = symmetric_sample(X, half, rng)
    SY = SX / norm_eval(Y, SX)[:, None]
    return X, Y, kadets_gadget(X, SX, 3), kadets_gadget(Y, SY, 3)


def test_gadget_distances():
    X, _, gx, _ = setup()
    S, D, idx = gx.samples, gx.space.dist, gx.index
    assert D[idx[("x", 0)], idx[("x", 2)]] == pytest.approx(norm_eval(X, S[0] - S[2]))
    assert D[idx[("x", 1)], idx[("p", (0, 2), 2)]] == pytest.approx(10 + norm_eval(X, S[1] - S[2]))
    assert D[idx[("p", (0,), 0)], idx[("p", (1,), 1)]] == 20
    # samples 0 and 1 are negatives of each other, so their average vanishes
    assert D[idx[("p", (0, 1), 0)], idx[("p", (0, 1), 1)]] == pytest.approx(15)
    assert validate_metric(gx.space).ok


def test_sample_must_be_symmetric():
    X = NormSpec.lp(2, 2)
    with pytest.raises(StructuralError):
        kadets_gadget(X, np.array([[1.0, 0.0], [0.0, 1.0]]), 2)


def test_push_identity():
    _, _, gx, _ = setup(1)
    w = kadets_push(Bijection.identity(len(gx.samples)), 1e-9, gx, gx)
    assert w.meta["distortion"] == 0


def test_push_near_isometric_pair():
    for seed in range(3):
        _, _, gx, gy = setup(seed)
        pi = Bijection.identity(len(gx.samples))
        ratio = sign_sum_audit(pi, gx, gy)[0]
        eps = ratio * (1 + 1e-6) + 1e-12
        w = kadets_push(pi, eps, gx, gy)
        c = w.meta["cases"]
        assert w.meta["distortion"] < 4 * eps
        assert c[1] < 4 * eps and c[2] < 4 * eps and c[3] < 2 * eps
        assert c[4] == 0


def test_push_refuses_small_eps():
    _, _, gx, gy = setup(2, scale=1.05)
    pi = Bijection.identity(len(gx.samples))
    ratio = sign_sum_audit(pi, gx, gy)[0]
    with pytest.raises(PreconditionError):
        kadets_push(pi, ratio / 2, gx, gy)


def test_case_distortions_identity():
    _, _, gx, _ = setup(3)
    c = case_distortions(gx, gx, Bijection.identity(gx.space.n))
    assert all(v == 0 for v in c.values())


def test_pull_identity_gives_tiny_certificate():
    _, _, gx, _ = setup(4)
    w = kadets_push(Bijection.identity(len(gx.samples)), 1e-9, gx, gx)
    rep = kadets_pull(w, gx, gx, 1e-9)
    assert rep.ok
    assert rep.certificate.eps <= 17e-9


def test_pull_near_symmetry_at_one_percent():
    _, _, gx, gy = setup(5)
    pi = Bijection.identity(len(gx.samples))
    w = kadets_push(pi, 0.005, gx, gy)
    rep = kadets_pull(w, gx, gy, 0.01)
    assert rep.ok
    assert rep.near_symmetry < 0.08


def test_pull_detects_sphere_to_peak_pairing():
    _, _, gx, _ = setup(6)
    w = kadets_push(Bijection.identity(len(gx.samples)), 1e-9, gx, gx)
    pairs = set(Correspondence.from_bijection(w.payload).pairs)
    pairs.add((gx.index[("x", 0)], gx.index[("p", (1,), 1)]))
    rep = kadets_pull(Witness("GH", Correspondence(pairs), 0.0), gx, gx, 0.01)
    assert not rep.ok and rep.failed == "dichotomy"
