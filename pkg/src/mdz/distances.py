"""Exact solvers for GH, bijective, Lipschitz and HL closeness on small finite spaces."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .corespace import (
    TAU, Bijection, Correspondence, DomainError, FiniteMetricSpace, ResourceError, Witness,
    distortion,
)

NODE_BUDGET = 10_000_000
EXHAUSTIVE_MAX_POINTS = 8
VARIANTS = ("BBI", "GROMOV", "DK")


# ---------------------------------------------------------------- pair costs

def _gh_cost(ma: FiniteMetricSpace, mb: FiniteMetricSpace) -> np.ndarray:
    """C[(a,b),(a',b')] = |d(a,a') - e(b,b')| over flattened nodes a*nb + b."""
    c = np.abs(ma.dist[:, None, :, None] - mb.dist[None, :, None, :])
    n = ma.n * mb.n
    return c.reshape(n, n)


def _hl_pair_eps(d: np.ndarray, e: np.ndarray) -> np.ndarray:
    # smallest eps making e <= d + eps*max(1,d) and d <= e + eps*max(1,e)
    return np.maximum(0.0, np.maximum((e - d) / np.maximum(1.0, d), (d - e) / np.maximum(1.0, e)))


def _hl_cost(ma: FiniteMetricSpace, mb: FiniteMetricSpace) -> np.ndarray:
    c = _hl_pair_eps(ma.dist[:, None, :, None], mb.dist[None, :, None, :])
    n = ma.n * mb.n
    return c.reshape(n, n)


# ------------------------------------------------- correspondence search core

class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def tick(self):
        self.used += 1
        if self.used > self.limit:
            raise ResourceError(
                f"search exceeded {self.limit} nodes; use gh_bounds for an interval estimate")


def _correspondence_search(C: np.ndarray, na: int, nb: int, incumbent: float,
                           budget: _Budget, strict: bool = True, first: bool = False):
    """Depth-first search for a covering set of nodes with small bottleneck cost.

    Returns (value, nodes) of the best covering set whose value beats `incumbent`
    (strictly, or non-strictly when strict=False), or None. With `first` the
    search stops at the first such set.
    """
    best: list = [incumbent, None]

    def admissible(vals):
        return vals < best[0] if strict else vals <= best[0]

    def dfs(worst, cur, rows, cols, chosen):
        budget.tick()
        if rows.all() and cols.all():
            best[0], best[1] = cur, list(chosen)
            return first
        vals = np.maximum(worst, cur)
        adm = admissible(vals).reshape(na, nb)
        rc = np.where(rows, na * nb + 1, adm.sum(axis=1))
        cc = np.where(cols, na * nb + 1, adm.sum(axis=0))
        r, c = int(rc.argmin()), int(cc.argmin())
        if min(rc[r], cc[c]) == 0:
            return False
        if rc[r] <= cc[c]:
            cand = [r * nb + j for j in range(nb) if adm[r, j]]
        else:
            cand = [i * nb + c for i in range(na) if adm[i, c]]
        cand.sort(key=lambda v: vals[v])
        for v in cand:
            if not admissible(vals[v]):
                continue
            rows2, cols2 = rows.copy(), cols.copy()
            rows2[v // nb] = True
            cols2[v % nb] = True
            chosen.append(v)
            if dfs(np.maximum(worst, C[v]), vals[v], rows2, cols2, chosen):
                return True
            chosen.pop()
        return False

    dfs(np.zeros(na * nb), 0.0, np.zeros(na, bool), np.zeros(nb, bool), [])
    if best[1] is None:
        return None
    return best[0], best[1]


def _nodes_to_corr(nodes, nb: int) -> Correspondence:
    return Correspondence((v // nb, v % nb) for v in nodes)


def _exhaustive_min(C: np.ndarray, na: int, nb: int):
    """Enumerate every relation (2^(na*nb) subsets) and keep the best correspondence."""
    n = na * nb
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    grid = bits.reshape(-1, na, nb)
    ok = grid.any(axis=2).all(axis=1) & grid.any(axis=1).all(axis=1)
    bits = bits[ok]
    val = np.zeros(len(bits))
    for u in range(n):
        for v in range(u, n):
            if C[u, v] > 0:
                both = bits[:, u] & bits[:, v]
                val = np.where(both & (C[u, v] > val), C[u, v], val)
    k = int(val.argmin())
    return float(val[k]), [int(v) for v in np.nonzero(bits[k])[0]]


# ----------------------------------------------------------------- GH distance

def gh_exhaustive(ma: FiniteMetricSpace, mb: FiniteMetricSpace) -> tuple[float, Witness]:
    """GH distance by brute force over all relations; only for |A|*|B| <= 16."""
    if ma.n * mb.n > 16:
        raise ResourceError("exhaustive enumeration is limited to |A|*|B| <= 16")
    val, nodes = _exhaustive_min(_gh_cost(ma, mb), ma.n, mb.n)
    r = _nodes_to_corr(nodes, mb.n)
    return val / 2, Witness("GH", r, val / 2, {"distortion": val})


def gh_exact(ma: FiniteMetricSpace, mb: FiniteMetricSpace, budget: int = NODE_BUDGET,
             method: str = "auto") -> tuple[float, Witness]:
    """Half the minimum distortion over all correspondences, with a minimizer.

    method "auto" enumerates exhaustively for tiny inputs and otherwise runs
    branch-and-bound; "bnb" forces the latter.
    """
    if ma.n == 0 or mb.n == 0:
        raise DomainError("spaces must be nonempty")
    if method == "auto" and ma.n + mb.n <= EXHAUSTIVE_MAX_POINTS and ma.n * mb.n <= 16:
        return gh_exhaustive(ma, mb)
    C = _gh_cost(ma, mb)
    full = float(C.max())
    found = _correspondence_search(C, ma.n, mb.n, full, _Budget(budget))
    if found is None:
        r = Correspondence((i, j) for i in range(ma.n) for j in range(mb.n))
        val = full
    else:
        val, nodes = found
        r = _nodes_to_corr(nodes, mb.n)
    val = distortion(ma, mb, r)
    return val / 2, Witness("GH", r, val / 2, {"distortion": val})


def gh_bounds(ma: FiniteMetricSpace, mb: FiniteMetricSpace) -> tuple[float, float]:
    """Cheap interval for the GH distance: half the diameter gap and half the larger diameter."""
    da, db = float(ma.dist.max()), float(mb.dist.max())
    return abs(da - db) / 2, max(da, db) / 2


# ------------------------------------------------------ permutation search core

def _perm_search(n: int, terms: Sequence[np.ndarray], lower: Callable[[np.ndarray], float],
                 budget: _Budget, final: Callable[[np.ndarray], float] | None = None):
    """Branch-and-bound over bijections i -> perm[i].

    Each term T has shape (n, n, n, n) with T[i, j, i', j'] the contribution of
    assigning i -> j and i' -> j'. The search tracks the running max of every
    term; `lower` maps those maxima to a bound that only grows as assignments
    are added. `final` scores a complete assignment (defaults to `lower`).
    """
    final = final or lower
    k = len(terms)
    best: list = [math.inf, None]
    perm = [-1] * n
    used = [False] * n

    def dfs(i, maxes):
        budget.tick()
        if i == n:
            v = final(maxes)
            if v < best[0]:
                best[0], best[1] = v, list(perm)
            return
        src = np.arange(i)
        dst = np.array(perm[:i], dtype=int)
        options = []
        for j in range(n):
            if used[j]:
                continue
            if i:
                m = np.array([max(maxes[t], terms[t][i, j, src, dst].max()) for t in range(k)])
            else:
                m = maxes.copy()
            lb = lower(m)
            if lb < best[0]:
                options.append((lb, j, m))
        options.sort(key=lambda o: o[0])
        for lb, j, m in options:
            if lb >= best[0]:
                break
            perm[i], used[j] = j, True
            dfs(i + 1, m)
            perm[i], used[j] = -1, False

    dfs(0, np.full(k, -math.inf))
    return best[0], np.array(best[1], dtype=int)


def _finite_or_zero(x: float) -> float:
    return x if math.isfinite(x) else 0.0


def bijection_distortion(ma: FiniteMetricSpace, mb: FiniteMetricSpace, b: Bijection) -> float:
    return distortion(ma, mb, b)


def gh_bijective(ma: FiniteMetricSpace, mb: FiniteMetricSpace,
                 budget: int = NODE_BUDGET) -> tuple[float, Witness]:
    """Half the minimum over bijections of max |d(i,i') - e(pi i, pi i')|."""
    if ma.n != mb.n:
        raise DomainError("bijective distance needs equal cardinalities")
    n = ma.n
    if n == 0:
        raise DomainError("spaces must be nonempty")
    cost = np.abs(ma.dist[:, None, :, None] - mb.dist[None, :, None, :])
    val, perm = _perm_search(n, [cost], lambda m: _finite_or_zero(m[0]) if n > 1 else 0.0,
                             _Budget(budget))
    b = Bijection(perm)
    val = distortion(ma, mb, b)
    return val / 2, Witness("GH", b, val / 2, {"distortion": val})


# ------------------------------------------------------------ Lipschitz distance

def lip_constants(ma: FiniteMetricSpace, mb: FiniteMetricSpace, b: Bijection) -> tuple[float, float]:
    """(Lip T, Lip T^-1) for the map i -> perm[i]."""
    n = ma.n
    if n < 2:
        return 1.0, 1.0
    off = ~np.eye(n, dtype=bool)
    e = mb.dist[np.ix_(b.perm, b.perm)][off]
    d = ma.dist[off]
    return float((e / d).max()), float((d / e).max())


def lip_value(variant: str, lip: float, lip_inv: float) -> float:
    a, b = math.log(lip), math.log(lip_inv)
    if variant == "BBI":
        return max(a, b)
    if variant == "GROMOV":
        return abs(a) + abs(b)
    if variant == "DK":
        return a + b
    raise DomainError(f"unknown Lipschitz variant {variant!r}")


def _lip_lower(variant: str) -> Callable[[np.ndarray], float]:
    # m[0] = running max of log(e/d), m[1] = running max of log(d/e)
    def lower(m):
        a, b = m
        if not math.isfinite(a):
            return 0.0
        if variant == "BBI":
            return max(a, b)
        if variant == "DK":
            return max(0.0, a + b)
        return max(max(a, 0.0) + max(b, 0.0), a + b)
    return lower


def lipschitz_exact(ma: FiniteMetricSpace, mb: FiniteMetricSpace, variant: str = "BBI",
                    budget: int = NODE_BUDGET) -> tuple[float, Witness]:
    """Minimum over bijections of the chosen log-distortion, with a minimizer."""
    variant = variant.upper()
    if variant not in VARIANTS:
        raise DomainError(f"unknown Lipschitz variant {variant!r}")
    if ma.n != mb.n:
        raise DomainError("Lipschitz distance needs equal cardinalities")
    n = ma.n
    off = ~np.eye(n, dtype=bool)
    if (ma.dist[off] <= 0).any() or (mb.dist[off] <= 0).any():
        raise DomainError("Lipschitz distance needs positive off-diagonal distances")
    if n < 2:
        b = Bijection.identity(n)
        return 0.0, Witness("LIP", b, 0.0, {"variant": variant})
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.log(mb.dist[None, :, None, :] / ma.dist[:, None, :, None])
    terms = [ratio, -ratio]
    _, perm = _perm_search(n, terms, _lip_lower(variant), _Budget(budget),
                           final=lambda m: lip_value(variant, math.exp(m[0]), math.exp(m[1])))
    b = Bijection(perm)
    val = lip_value(variant, *lip_constants(ma, mb, b))
    return val, Witness("LIP", b, val, {"variant": variant})


# ------------------------------------------------------------- HL closeness

def hl_constant(ma: FiniteMetricSpace, mb: FiniteMetricSpace, r: Correspondence) -> float:
    """Smallest eps for which `r` witnesses HL(eps)-closeness."""
    ia, ib = r.arrays()
    return float(_hl_pair_eps(ma.dist[np.ix_(ia, ia)], mb.dist[np.ix_(ib, ib)]).max())


def hl_check(ma: FiniteMetricSpace, mb: FiniteMetricSpace, r: Correspondence, eps: float,
             tol: float = TAU) -> bool:
    """Both HL inequalities for every pair of related pairs."""
    ia, ib = r.arrays()
    d = ma.dist[np.ix_(ia, ia)]
    e = mb.dist[np.ix_(ib, ib)]
    return bool((e <= d + eps * np.maximum(1.0, d) + tol).all()
                and (d <= e + eps * np.maximum(1.0, e) + tol).all())


def hl_closeness(ma: FiniteMetricSpace, mb: FiniteMetricSpace,
                 budget: int = NODE_BUDGET) -> tuple[float, Witness]:
    """Minimal eps admitting an HL(eps)-close correspondence.

    The minimum is attained at one of the finitely many pairwise thresholds, so
    the bisection runs over that sorted candidate list and is exact.
    """
    if ma.n == 0 or mb.n == 0:
        raise DomainError("spaces must be nonempty")
    C = _hl_cost(ma, mb)
    cands = np.unique(C)
    bud = _Budget(budget)

    def feasible(t):
        return _correspondence_search(C, ma.n, mb.n, t, bud, strict=False, first=True)

    lo, hi = 0, len(cands) - 1
    hit = feasible(cands[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        f = feasible(cands[mid])
        if f is not None:
            hi, hit = mid, f
        else:
            lo = mid + 1
    if hit is None or lo != hi:
        hit = feasible(cands[lo])
    r = _nodes_to_corr(hit[1], mb.n)
    val = hl_constant(ma, mb, r)
    return val, Witness("HL", r, val)


# ----------------------------------------------------------------- moduli

def phi1(eps: float) -> float:
    if not eps > 0:
        raise DomainError("eps must be positive")
    return math.exp(eps) - 1 + 2 * eps * math.exp(eps) + 4 * eps


def phi2(eps: float) -> float:
    if not eps > 0:
        raise DomainError("eps must be positive")
    r = math.sqrt(eps)
    return 2 * eps + 2 * r + math.log(1 + max(eps, r)) + eps * max(1.0, eps + r)


def coarse_lipschitz_fit(pairs: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Coarse Lipschitz fit image <= A*source + B of a finite sample of distance pairs.

    A is the slope sustained at the largest source scale: the slope of the last
    edge of the upper convex hull of the points (clipped at 0). B is then the
    least nonnegative intercept for which the line dominates every pair.
    """
    if not len(pairs):
        raise DomainError("need at least one pair")
    pts = np.asarray(pairs, dtype=float)
    if (pts < 0).any():
        raise DomainError("distances must be nonnegative")
    top: dict[float, float] = {}
    for s, t in pts:
        top[s] = max(t, top.get(s, -math.inf))
    xs = sorted(top)
    hull: list[tuple[float, float]] = []
    for x in xs:
        p = (x, top[x])
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    A = 0.0
    if len(hull) >= 2:
        (x1, y1), (x2, y2) = hull[-2], hull[-1]
        A = max(0.0, float((y2 - y1) / (x2 - x1)))
    B = max(0.0, float((pts[:, 1] - A * pts[:, 0]).max()))
    return A, B


# -------------------------------------------------------------- re-measurement

def measure_witness(w: Witness, ma: FiniteMetricSpace, mb: FiniteMetricSpace) -> float:
    """Recompute the quality a metric-space witness certifies from its payload alone."""
    if w.kind == "GH":
        return distortion(ma, mb, w.payload) / 2
    if w.kind == "LIP":
        return lip_value(w.meta.get("variant", "BBI"), *lip_constants(ma, mb, w.payload))
    if w.kind == "HL":
        r = w.payload if isinstance(w.payload, Correspondence) else Correspondence.from_bijection(w.payload)
        return hl_constant(ma, mb, r)
    raise DomainError(f"{w.kind} witnesses are not measured on metric spaces")
