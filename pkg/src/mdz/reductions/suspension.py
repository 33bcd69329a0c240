"""Level suspensions of a finite metric and the Lip/HL to GH witness transformers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..corespace import (
    TAU, Bijection, Correspondence, DomainError, FiniteMetricSpace, MetricValueError,
    PreconditionError, Witness, distortion, validate_metric,
)
from ..distances import hl_check, hl_constant, lip_constants

CLUB = ("club",)


def node(i: int, k: int) -> tuple:
    return ("node", i, k)


@dataclass(frozen=True)
class Levels:
    n: int
    k_min: int
    k_max: int

    @property
    def ks(self) -> range:
        return range(self.k_min, self.k_max + 1)

    @property
    def size(self) -> int:
        return self.n * len(self.ks) + 1

    @property
    def club(self) -> int:
        return self.size - 1

    def index(self, i: int, k: int) -> int:
        return (k - self.k_min) * self.n + i

    def point(self, idx: int) -> tuple:
        if idx == self.club:
            return CLUB
        k, i = divmod(idx, self.n)
        return node(i, k + self.k_min)


def suspend(d: FiniteMetricSpace, k_min: int = -3, k_max: int = 3) -> FiniteMetricSpace:
    """Stack copies of d at levels k_min..k_max plus a club point.

    (i,k) to (j,l): |10k - 10l| + min{1, 2^min(k,l) d(i,j)}; (i,k) to club: |10k + 4| + 1.
    """
    if k_min > k_max:
        raise DomainError("k_min must not exceed k_max")
    v = validate_metric(d)
    if not v.ok:
        raise MetricValueError(f"base space is not a metric: {v}")
    lv = Levels(d.n, k_min, k_max)
    ks = np.repeat(np.arange(k_min, k_max + 1), d.n)
    ii = np.tile(np.arange(d.n), len(lv.ks))
    kmin = np.minimum(ks[:, None], ks[None, :])
    D = np.abs(10 * ks[:, None] - 10 * ks[None, :]) + np.minimum(
        1.0, np.exp2(kmin) * d.dist[ii[:, None], ii[None, :]])
    out = np.zeros((lv.size, lv.size))
    out[:-1, :-1] = D
    out[-1, :-1] = out[:-1, -1] = np.abs(10 * ks + 4) + 1
    labels = tuple(lv.point(t) for t in range(lv.size))
    return FiniteMetricSpace(out, labels)


def levels_of(s: FiniteMetricSpace) -> Levels:
    ks = [l[2] for l in s.labels if l != CLUB]
    n = sum(1 for l in s.labels if l != CLUB and l[2] == ks[0])
    return Levels(n, min(ks), max(ks))


def suspend_push(lip: Witness, d: FiniteMetricSpace, e: FiniteMetricSpace,
                 k_min: int = -3, k_max: int = 3) -> tuple[Witness, FiniteMetricSpace, FiniteMetricSpace]:
    """Turn a bi-Lipschitz bijection d -> e into a correspondence of the suspensions.

    With r the log-distortion of L and eps = exp(r) - 1, level k relates (i,k)
    and (j,k) when d(i, L^-1 j) and e(L i, j) are both at most 2^(-k-1) eps;
    the clubs are related. The distortion stays below 2 eps.
    """
    if lip.kind != "LIP":
        raise DomainError(f"expected a LIP witness, got {lip.kind}")
    L = lip.payload
    if not isinstance(L, Bijection) or L.n != d.n or L.n != e.n:
        raise DomainError("LIP witness must carry a bijection between the bases")
    a, b = lip_constants(d, e, L)
    r = max(0.0, math.log(a), math.log(b))
    eps = math.expm1(r)
    ds, es = suspend(d, k_min, k_max), suspend(e, k_min, k_max)
    lv_d, lv_e = Levels(d.n, k_min, k_max), Levels(e.n, k_min, k_max)
    Linv = L.inverse().perm
    near_src = d.dist[:, Linv]          # d(i, L^-1 j)
    near_dst = e.dist[L.perm, :]        # e(L i, j)
    pairs = [(lv_d.club, lv_e.club)]
    for k in lv_d.ks:
        t = 2.0 ** (-k - 1) * eps
        for i, j in zip(*np.nonzero((near_src <= t) & (near_dst <= t))):
            pairs.append((lv_d.index(int(i), k), lv_e.index(int(j), k)))
    R = Correspondence(pairs)
    dist = distortion(ds, es, R)
    bound = 2 * eps
    w = Witness("GH", R, dist / 2, {"distortion": dist, "r": r, "eps": eps, "bound": bound,
                                    "levels": (k_min, k_max)})
    if dist >= bound + TAU and dist > TAU:
        raise AssertionError(f"pushed distortion {dist} is not below 2(exp(r)-1) = {bound}")
    return w, ds, es


@dataclass
class PullReport:
    ok: bool
    bound: float | None
    failed: str | None = None
    detail: str = ""
    checks: dict = field(default_factory=dict)
    level_correspondences: dict = field(default_factory=dict)


def _level_split(R: Correspondence, lv_d: Levels, lv_e: Levels):
    """Split R into club pairs, cross-level pairs and per-level base relations."""
    club_ok = (lv_d.club, lv_e.club) in R.pairs
    stray, cross = [], []
    per: dict[int, set] = {k: set() for k in lv_d.ks}
    for u, v in sorted(R.pairs):
        pu, pv = lv_d.point(u), lv_e.point(v)
        if (pu == CLUB) != (pv == CLUB):
            stray.append((pu, pv))
        elif pu != CLUB:
            if pu[2] != pv[2]:
                cross.append((pu, pv))
            elif pu[2] in per:
                per[pu[2]].add((pu[1], pv[1]))
    return club_ok, stray, cross, per


def _fail(name: str, detail: str, checks: dict, per=None) -> PullReport:
    checks[name] = False
    return PullReport(False, None, name, detail, checks, per or {})


def _is_corr(rel: set, na: int, nb: int) -> bool:
    return {i for i, _ in rel} == set(range(na)) and {j for _, j in rel} == set(range(nb))


def suspend_pull(gh: Witness, d: FiniteMetricSpace, e: FiniteMetricSpace, eps: float,
                 k_min: int = -3, k_max: int = 3) -> PullReport:
    """Check the level conditions on a suspension correspondence and certify a Lipschitz bound.

    Conditions, in the order checked: club pairing, level preservation,
    distortion below 2 eps, every level relation a correspondence, then
    liptogh2 to liptogh6 and finally the Lipschitz constants of a bijection
    drawn from the top level. Returns log(1 + 24 eps) when all hold.
    """
    if not eps < 0.25:
        raise PreconditionError("suspend_pull needs eps < 1/4")
    if gh.kind != "GH" or not isinstance(gh.payload, Correspondence):
        raise DomainError("expected a GH witness carrying a correspondence")
    lv_d, lv_e = Levels(d.n, k_min, k_max), Levels(e.n, k_min, k_max)
    R = gh.payload
    checks: dict = {}
    club_ok, stray, cross, per = _level_split(R, lv_d, lv_e)
    if not club_ok or stray:
        return _fail("club", f"club pairing broken: missing={not club_ok}, stray={stray[:3]}", checks)
    checks["club"] = True
    if cross:
        return _fail("liptogh1", f"level mismatch {cross[0]}", checks)
    checks["liptogh1"] = True
    ds, es = suspend(d, k_min, k_max), suspend(e, k_min, k_max)
    dist = distortion(ds, es, R)
    if not dist < 2 * eps:
        return _fail("distortion", f"distortion {dist} is not below 2 eps = {2 * eps}", checks)
    checks["distortion"] = True
    for k, rel in per.items():
        if not _is_corr(rel, d.n, e.n):
            return _fail("level-correspondence", f"level {k} relation is not a correspondence", checks, per)
    checks["level-correspondence"] = True
    D, E = d.dist, e.dist

    def rel_arrays(rel):
        p = sorted(rel)
        return np.array([i for i, _ in p]), np.array([j for _, j in p])

    # liptogh2: within a level, small source distances grow by at most 2^(1-k) eps
    for k, rel in per.items():
        ia, ib = rel_arrays(rel)
        dd, ee = D[np.ix_(ia, ia)], E[np.ix_(ib, ib)]
        lim = 2.0 ** (-k - 1)
        slack = 2.0 ** (1 - k) * eps
        bad = ((dd <= lim) & (ee > dd + slack + TAU)) | ((ee <= lim) & (dd > ee + slack + TAU))
        if bad.any():
            a, b = np.argwhere(bad)[0]
            return _fail("liptogh2", f"level {k}: pairs {(ia[a], ib[a])}, {(ia[b], ib[b])}", checks, per)
    checks["liptogh2"] = True
    # liptogh3: the images of one point at levels k, k' lie within 2^(1-min) eps
    ks = list(per)
    for x, k in enumerate(ks):
        for k2 in ks[x:]:
            slack = 2.0 ** (1 - min(k, k2)) * eps + TAU
            for i, j in per[k]:
                for i2, j2 in per[k2]:
                    if i == i2 and E[j, j2] > slack:
                        return _fail("liptogh3", f"point {i} at levels {k},{k2}", checks, per)
                    if j == j2 and D[i, i2] > slack:
                        return _fail("liptogh3", f"image {j} at levels {k},{k2}", checks, per)
    checks["liptogh3"] = True
    # liptogh4 to 6 on the tails R*_s = union of levels >= s
    for s in ks:
        star = set().union(*(per[k] for k in ks if k >= s))
        lim = 2.0 ** (1 - s) * eps + TAU
        for i in range(d.n):
            js = [j for a, j in star if a == i]
            if js and E[np.ix_(js, js)].max() > lim:
                return _fail("liptogh4", f"e-diameter of the image of {i} in R*_{s}", checks, per)
        for j in range(e.n):
            iis = [a for a, b in star if b == j]
            if iis and D[np.ix_(iis, iis)].max() > lim:
                return _fail("liptogh4", f"d-diameter of the preimage of {j} in R*_{s}", checks, per)
        ia, ib = rel_arrays(star)
        dd, ee = D[np.ix_(ia, ia)], E[np.ix_(ib, ib)]
        far = 2.0 ** (-s - 2)
        if ((dd >= far) & (ee > (1 + 24 * eps) * dd + TAU)).any():
            return _fail("liptogh5", f"expansion above 1 + 24 eps in R*_{s}", checks, per)
        if ((ee >= far) & (dd > (1 + 24 * eps) * ee + TAU)).any():
            return _fail("liptogh6", f"contraction above 1 + 24 eps in R*_{s}", checks, per)
    checks["liptogh4"] = checks["liptogh5"] = checks["liptogh6"] = True
    bound = math.log1p(24 * eps)
    top = per[k_max]
    if d.n == e.n:
        cost = np.ones((d.n, e.n))
        for i, j in top:
            cost[i, j] = 0.0
        rows, cols = linear_sum_assignment(cost)
        if cost[rows, cols].sum() == 0:
            a, b = lip_constants(d, e, Bijection(cols))
            if max(math.log(a), math.log(b)) > bound + TAU:
                return _fail("lipschitz", f"top-level bijection has log-distortion above {bound}", checks, per)
            checks["lipschitz"] = True
    return PullReport(True, bound, None, "", checks, per)


# ----------------------------------------------------------- HL variant

def hl_push(hl: Witness, d: FiniteMetricSpace, e: FiniteMetricSpace,
            k_min: int = -3) -> tuple[Witness, FiniteMetricSpace, FiniteMetricSpace]:
    """Copy an HL(eps) correspondence onto every level k <= 0 of the half-suspensions."""
    if hl.kind != "HL":
        raise DomainError(f"expected an HL witness, got {hl.kind}")
    R0 = hl.payload if isinstance(hl.payload, Correspondence) else Correspondence.from_bijection(hl.payload)
    eps = hl_constant(d, e, R0)
    ds, es = suspend(d, k_min, 0), suspend(e, k_min, 0)
    lv_d, lv_e = Levels(d.n, k_min, 0), Levels(e.n, k_min, 0)
    pairs = [(lv_d.club, lv_e.club)]
    for k in lv_d.ks:
        pairs += [(lv_d.index(i, k), lv_e.index(j, k)) for i, j in R0.pairs]
    R = Correspondence(pairs)
    dist = distortion(ds, es, R)
    w = Witness("GH", R, dist / 2, {"distortion": dist, "hl": eps, "bound": 2 * eps, "levels": (k_min, 0)})
    if dist > 2 * eps + TAU:
        raise AssertionError(f"pushed distortion {dist} exceeds 2 eps = {2 * eps}")
    return w, ds, es


@dataclass
class HLBound:
    ok: bool
    bound: float | None
    r0: Correspondence | None = None
    measured: float | None = None
    failed: str | None = None
    detail: str = ""
    checks: dict = field(default_factory=dict)


def hl_pull(gh: Witness, d: FiniteMetricSpace, e: FiniteMetricSpace, eps: float,
            k_min: int = -3) -> HLBound:
    """Read the level-0 relation off a half-suspension correspondence and verify HL(24 eps)."""
    if not eps < 0.2:
        raise PreconditionError("hl_pull needs eps < 1/5")
    if gh.kind != "GH" or not isinstance(gh.payload, Correspondence):
        raise DomainError("expected a GH witness carrying a correspondence")
    lv_d, lv_e = Levels(d.n, k_min, 0), Levels(e.n, k_min, 0)
    checks: dict = {}
    club_ok, stray, cross, per = _level_split(gh.payload, lv_d, lv_e)
    if not club_ok or stray:
        checks["club"] = False
        return HLBound(False, None, None, None, "club", "club pairing broken", checks)
    checks["club"] = True
    if cross:
        checks["liptogh1"] = False
        return HLBound(False, None, None, None, "liptogh1", f"level mismatch {cross[0]}", checks)
    checks["liptogh1"] = True
    rel = per[0]
    if not _is_corr(rel, d.n, e.n):
        checks["r0-correspondence"] = False
        return HLBound(False, None, None, None, "r0-correspondence", "level-0 relation is not a correspondence", checks)
    checks["r0-correspondence"] = True
    R0 = Correspondence(rel)
    ds, es = suspend(d, k_min, 0), suspend(e, k_min, 0)
    dist = distortion(ds, es, gh.payload)
    if not dist < 2 * eps:
        checks["distortion"] = False
        return HLBound(False, None, R0, None, "distortion", f"distortion {dist} is not below {2 * eps}", checks)
    checks["distortion"] = True
    bound = 24 * eps
    measured = hl_constant(d, e, R0)
    if not hl_check(d, e, R0, bound):
        checks["hl"] = False
        return HLBound(False, None, R0, measured, "hl", f"level-0 relation needs eps {measured} > {bound}", checks)
    checks["hl"] = True
    return HLBound(True, bound, R0, measured, None, "", checks)
