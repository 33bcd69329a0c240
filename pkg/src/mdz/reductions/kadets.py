"""Sphere-and-peak gadgets for a normed space and the Kadets <-> GH witness transfer."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..corespace import (
    TAU, Bijection, Correspondence, DomainError, FiniteMetricSpace, MetricValueError,
    PreconditionError, StructuralError, Witness, distortion, validate_metric,
)
from ..normed import KadetsCertificate, NormSpec, norm_eval
from .unitize import pairwise_norms


@dataclass(frozen=True, eq=False)
class KadetsGadget:
    space: FiniteMetricSpace
    norm: NormSpec
    samples: np.ndarray
    s_max: int
    subsets: tuple
    index: dict = field(repr=False)
    negation: np.ndarray = field(repr=False, default=None)


def symmetric_sample(norm: NormSpec, half: int, rng: np.random.Generator) -> np.ndarray:
    """2*half unit vectors: random directions and their negatives, interleaved."""
    g = rng.standard_normal((half, norm.dim))
    g /= norm_eval(norm, g)[:, None]
    out = np.empty((2 * half, norm.dim))
    out[0::2], out[1::2] = g, -g
    return out


def _negation_map(S: np.ndarray) -> np.ndarray:
    neg = np.full(len(S), -1)
    for i, x in enumerate(S):
        hit = np.nonzero(np.abs(S + x).max(axis=1) <= 1e-12 * max(1.0, np.abs(S).max()))[0]
        if len(hit) == 0:
            raise StructuralError(f"sample is not symmetric: -x_{i} is missing")
        neg[i] = hit[0]
    return neg


def kadets_gadget(norm: NormSpec, sphere_sample, s_max: int = 3) -> KadetsGadget:
    """Gadget metric on sphere points x_i and peaks p_{F,k} (|F| <= s_max, k in F).

    d(x_i, x_j) = ||x_i - x_j||, d(x_i, p_{F,k}) = 10 + ||x_i - x_k||,
    d(p_{F,i}, p_{F,j}) = 15 + ||sum_F x|| / |F| and 20 across different F.
    """
    S = np.atleast_2d(np.asarray(sphere_sample, dtype=float))
    if np.abs(norm_eval(norm, S) - 1).max() > TAU:
        raise DomainError("sphere sample points must have norm 1")
    neg = _negation_map(S)
    n = len(S)
    subsets = tuple(F for s in range(1, s_max + 1) for F in itertools.combinations(range(n), s))
    labels = [("x", i) for i in range(n)] + [("p", F, k) for F in subsets for k in F]
    Nx = pairwise_norms(norm, S)
    m = len(labels)
    D = np.zeros((m, m))
    D[:n, :n] = Nx
    peaks = labels[n:]
    pk = np.array([k for _, _, k in peaks])
    fid = np.array([subsets.index(F) for _, F, _ in peaks])
    avg = np.array([norm_eval(norm, S[list(F)].sum(axis=0)) / len(F) for F in subsets])
    D[:n, n:] = 10 + Nx[:, pk]
    D[n:, :n] = D[:n, n:].T
    same = fid[:, None] == fid[None, :]
    P = np.where(same, 15 + avg[fid][:, None], 20.0)
    np.fill_diagonal(P, 0.0)
    D[n:, n:] = P
    space = FiniteMetricSpace(D, tuple(labels))
    v = validate_metric(space)
    if not v.ok:
        raise MetricValueError(f"gadget violates the metric axioms: {v.triangle[:3]}")
    return KadetsGadget(space, norm, S, s_max, subsets, {l: i for i, l in enumerate(labels)}, neg)


def sign_sum_audit(pi: Bijection, gx: KadetsGadget, gy: KadetsGadget, budget: int = 10 ** 6):
    """Worst ratio |  ||sum_F d_i x_i|| - ||sum_F d_i y_pi(i)||  | / (2|F|) over subsets and signs.

    Returns (ratio, F, signs) of the worst case.
    """
    X, Y = gx.samples, gy.samples
    worst = (0.0, (), ())
    used = 0
    for F in gx.subsets:
        Fi = list(F)
        Gi = [int(pi.perm[i]) for i in F]
        for signs in itertools.product((1.0, -1.0), repeat=len(F)):
            used += 1
            if used > budget:
                return worst
            s = np.array(signs)
            dev = abs(norm_eval(gx.norm, s @ X[Fi]) - norm_eval(gy.norm, s @ Y[Gi])) / (2 * len(F))
            if dev > worst[0]:
                worst = (dev, F, signs)
    return worst


def _kind(lab) -> str:
    return "sphere" if lab[0] == "x" else "peak"


def _case(la, lb) -> int:
    if la[0] == "x" and lb[0] == "x":
        return 1
    if la[0] != lb[0]:
        return 2
    return 3 if la[1] == lb[1] else 4


def case_distortions(gx: KadetsGadget, gy: KadetsGadget, phi: Bijection) -> dict[int, float]:
    """Largest |d - e| within each of the four pair types (sphere/sphere, sphere/peak, same F, different F)."""
    diff = np.abs(gx.space.dist - gy.space.dist[np.ix_(phi.perm, phi.perm)])
    labs = gx.space.labels
    n = len(gx.samples)
    kinds = np.array([0 if i < n else 1 for i in range(len(labs))])
    fid = np.array([-1] * n + [gx.subsets.index(l[1]) for l in labs[n:]])
    sphere = kinds == 0
    masks = {
        1: sphere[:, None] & sphere[None, :],
        2: sphere[:, None] != sphere[None, :],
        3: ~sphere[:, None] & ~sphere[None, :] & (fid[:, None] == fid[None, :]),
        4: ~sphere[:, None] & ~sphere[None, :] & (fid[:, None] != fid[None, :]),
    }
    return {c: float(diff[m].max()) if m.any() else 0.0 for c, m in masks.items()}


def kadets_push(pi: Bijection, eps: float, gx: KadetsGadget, gy: KadetsGadget) -> Witness:
    """GH witness between gadgets induced by a sample bijection with small sign-sum deviations.

    Requires |  ||sum_F d_i x_i|| - ||sum_F d_i y_pi(i)||  | < 2|F| eps on every
    audited (F, d); the induced map x_i -> y_pi(i), p_{F,k} -> q_{pi F, pi k}
    then has distortion < 4 eps, checked case by case.
    """
    if len(gx.samples) != len(gy.samples) or gx.s_max != gy.s_max:
        raise DomainError("gadgets must have equal sample sizes and s_max")
    worst, F, signs = sign_sum_audit(pi, gx, gy)
    if not worst < eps:
        raise PreconditionError(f"sign-sum audit fails at F={F}, signs={signs}: ratio {worst} >= eps {eps}")
    perm = np.empty(gx.space.n, dtype=int)
    for lab, i in gx.index.items():
        if lab[0] == "x":
            perm[i] = gy.index[("x", int(pi.perm[lab[1]]))]
        else:
            G = tuple(sorted(int(pi.perm[t]) for t in lab[1]))
            perm[i] = gy.index[("p", G, int(pi.perm[lab[2]]))]
    phi = Bijection(perm)
    cases = case_distortions(gx, gy, phi)
    limits = {1: 4 * eps, 2: 4 * eps, 3: 2 * eps, 4: 0.0}
    for c, v in cases.items():
        if not v < limits[c] + TAU:
            raise AssertionError(f"case {c} distortion {v} not below {limits[c]}")
    dist = distortion(gx.space, gy.space, phi)
    return Witness("GH", phi, dist / 2, {"distortion": dist, "eps": eps, "cases": cases,
                                         "audit_ratio": worst})


@dataclass
class KadetsPullReport:
    ok: bool
    certificate: KadetsCertificate | None = None
    failed: str | None = None
    detail: str = ""
    checks: dict = field(default_factory=dict)
    near_symmetry: float | None = None
    tuple_worst: float | None = None
    sphere_map: np.ndarray | None = None


def _matching(rel: set, rows: list, cols: list) -> dict | None:
    """A bijection rows -> cols contained in rel, or None."""
    if len(rows) != len(cols):
        return None
    cost = np.ones((len(rows), len(cols)))
    ri = {r: a for a, r in enumerate(rows)}
    ci = {c: b for b, c in enumerate(cols)}
    for r, c in rel:
        if r in ri and c in ci:
            cost[ri[r], ci[c]] = 0.0
    a, b = linear_sum_assignment(cost)
    if cost[a, b].sum() > 0:
        return None
    return {rows[i]: cols[j] for i, j in zip(a, b)}


def kadets_pull(gh: Witness, gx: KadetsGadget, gy: KadetsGadget, eps: float,
                tuple_budget: int = 1000, seed: int = 0) -> KadetsPullReport:
    """Extract a Kadets certificate with constant 17 eps from a gadget correspondence.

    Checks, in order: the sphere/peak dichotomy and F-block preservation,
    distortion below 2 eps, peak anchoring ||phi(x_k) - y_phiF(k)|| < 2 eps,
    the tuple inequality below 4 eps |F| on every audited subset, the
    near-symmetry ||-phi(x) - phi(-x)|| < 8 eps, and the sampled 16 eps tuple
    inequality on the symmetrized generators (x, phi x), (x, -phi(-x)).
    """
    if not eps < 1:
        raise PreconditionError("kadets_pull needs eps < 1")
    R = gh.payload
    if isinstance(R, Bijection):
        R = Correspondence.from_bijection(R)
    if gh.kind != "GH" or not isinstance(R, Correspondence):
        raise DomainError("expected a GH witness")
    rep = KadetsPullReport(False)
    lx, ly = gx.space.labels, gy.space.labels

    def fail(name, detail):
        rep.checks[name] = False
        rep.failed, rep.detail = name, detail
        return rep

    block: dict = {}
    for u, v in sorted(R.pairs):
        if _kind(lx[u]) != _kind(ly[v]):
            return fail("dichotomy", f"{lx[u]} related to {ly[v]}")
        if lx[u][0] == "p":
            F, H = lx[u][1], ly[v][1]
            if block.setdefault(F, H) != H:
                return fail("dichotomy", f"block {F} meets blocks {block[F]} and {H}")
    if len(set(block.values())) != len(block):
        return fail("dichotomy", "two blocks share an image block")
    rep.checks["dichotomy"] = True
    dist = distortion(gx.space, gy.space, R)
    if not dist < 2 * eps:
        return fail("distortion", f"distortion {dist} is not below {2 * eps}")
    rep.checks["distortion"] = True
    n = len(gx.samples)
    sphere_rel = {(lx[u][1], ly[v][1]) for u, v in R.pairs if lx[u][0] == "x"}
    phi = _matching(sphere_rel, list(range(n)), list(range(len(gy.samples))))
    if phi is None:
        return fail("sphere-bijection", "no bijection of sphere samples inside the correspondence")
    X, Y = gx.samples, gy.samples
    PX = np.array([Y[phi[i]] for i in range(n)])
    rep.sphere_map = np.array([phi[i] for i in range(n)])
    NX, NY = gx.norm, gy.norm
    for F in gx.subsets:
        H = block.get(F)
        if H is None:
            return fail("dichotomy", f"block {F} has no image")
        rel = {(lx[u][2], ly[v][2]) for u, v in R.pairs if lx[u][0] == "p" and lx[u][1] == F}
        phiF = _matching(rel, list(F), list(H))
        if phiF is None:
            return fail("block-bijection", f"block {F} is not matched bijectively onto {H}")
        for k in F:
            if not norm_eval(NY, PX[k] - Y[phiF[k]]) < 2 * eps:
                return fail("peak-anchor", f"||phi(x_{k}) - y_{phiF[k]}|| >= 2 eps")
        Fi = list(F)
        dev = abs(norm_eval(NX, X[Fi].sum(axis=0)) - norm_eval(NY, PX[Fi].sum(axis=0)))
        if not dev < 4 * eps * len(F):
            return fail("tuple-4eps", f"subset {F}: deviation {dev} >= {4 * eps * len(F)}")
    rep.checks["peak-anchor"] = rep.checks["tuple-4eps"] = True
    neg = gx.negation
    sym = max(norm_eval(NY, -PX[i] - PX[neg[i]]) for i in range(n))
    rep.near_symmetry = float(sym)
    if not sym < 8 * eps:
        return fail("near-symmetry", f"||-phi(x) - phi(-x)|| = {sym} >= 8 eps")
    rep.checks["near-symmetry"] = True
    gens = [(X[i], PX[i]) for i in range(n)] + [(X[i], -PX[neg[i]]) for i in range(n)]
    rng = np.random.default_rng(seed)
    U = np.array([g[0] for g in gens])
    V = np.array([g[1] for g in gens])
    w = np.maximum(norm_eval(NX, U), norm_eval(NY, V))
    worst = -math.inf
    for _ in range(tuple_budget):
        size = int(rng.integers(1, 5))
        idx = rng.integers(0, len(gens), size=size)
        q = rng.integers(1, 6, size=size) * rng.choice([-1, 1], size=size) / rng.integers(1, 6, size=size)
        lhs = abs(norm_eval(NX, q @ U[idx]) - norm_eval(NY, q @ V[idx]))
        rhs = 16 * eps * float(np.abs(q) @ w[idx])
        worst = max(worst, lhs - rhs)
        if lhs > rhs + TAU:
            rep.tuple_worst = worst
            return fail("tuple-16eps", f"generators {idx.tolist()} with coefficients {q.tolist()}")
    rep.tuple_worst = float(worst)
    rep.checks["tuple-16eps"] = True
    rep.ok = True
    rep.certificate = KadetsCertificate(tuple(gens), 17 * eps, eps)
    return rep
