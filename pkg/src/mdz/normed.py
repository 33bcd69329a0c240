"""Finite-dimensional norms, renorms of l2, Banach-Mazur upper bounds and the Kadets glue norm."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .corespace import TAU, DomainError, StructuralError, Witness

RENORM_CEILING = 200 / 199
DEFAULT_ALPHA = 1.003
DEFAULT_DELTA = 0.002


@dataclass(frozen=True, eq=False)
class NormSpec:
    """A norm on R^dim: an lp norm, a max of functionals, or a renorm of l2.

    For the renorm, `f` maps index pairs (n, m) with n < m to values in
    [1/2, 1]; the pair contributes (alpha + delta*f)/sqrt(2) * |x_n + x_m|.
    Pairs absent from `f` contribute nothing.
    """
    variant: str
    dim: int
    p: float = 2.0
    functionals: np.ndarray | None = None
    alpha: float = DEFAULT_ALPHA
    delta: float = DEFAULT_DELTA
    f: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in ("lp", "polytopal", "renorm"):
            raise DomainError(f"unknown norm variant {self.variant!r}")
        if self.dim < 1:
            raise DomainError("dim must be positive")
        if self.variant == "lp" and not self.p >= 1:
            raise DomainError("p must be at least 1")
        if self.variant == "polytopal":
            F = np.atleast_2d(np.asarray(self.functionals, dtype=float))
            if F.shape[1] != self.dim:
                raise StructuralError("functional length does not match dim")
            if np.linalg.matrix_rank(F) < self.dim:
                raise DomainError("functionals do not span the dual; the norm would be degenerate")
            for row in F:
                if not np.any(np.all(np.abs(F + row) < 1e-12, axis=1)):
                    raise DomainError("functional set is not closed under negation")
            F.setflags(write=False)
            object.__setattr__(self, "functionals", F)
        if self.variant == "renorm":
            if not (1 < self.alpha and self.delta > 0 and self.alpha + self.delta <= RENORM_CEILING + 1e-15):
                raise DomainError("renorm constants need 1 < alpha < alpha + delta <= 200/199")
            f = {}
            for (n, m), v in dict(self.f).items():
                n, m = int(n), int(m)
                if n == m or not (0 <= n < self.dim and 0 <= m < self.dim):
                    raise StructuralError(f"bad renorm pair ({n}, {m})")
                f[(min(n, m), max(n, m))] = float(v)
            object.__setattr__(self, "f", f)

    @classmethod
    def lp(cls, p: float, dim: int) -> "NormSpec":
        return cls("lp", dim, p=p)

    @classmethod
    def polytopal(cls, functionals) -> "NormSpec":
        F = np.atleast_2d(np.asarray(functionals, dtype=float))
        return cls("polytopal", F.shape[1], functionals=F)

    @classmethod
    def renorm(cls, f: dict, alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA,
               dim: int | None = None) -> "NormSpec":
        if dim is None:
            dim = 1 + max(max(k) for k in f) if f else 1
        return cls("renorm", dim, alpha=alpha, delta=delta, f=f)

    def boost(self, n: int, m: int) -> float:
        """h = alpha + delta*f(n,m) for a boosted pair."""
        key = (min(n, m), max(n, m))
        if key not in self.f:
            raise DomainError(f"pair {key} is not boosted by this renorm")
        return self.alpha + self.delta * self.f[key]

    def _pairs(self):
        keys = sorted(self.f)
        P = np.array(keys, dtype=int).reshape(-1, 2)
        c = np.array([(self.alpha + self.delta * self.f[k]) / math.sqrt(2) for k in keys])
        return P, c

    def to_json(self) -> dict:
        if self.variant == "lp":
            return {"variant": "lp", "p": "inf" if math.isinf(self.p) else self.p, "dim": self.dim}
        if self.variant == "polytopal":
            return {"variant": "polytopal", "functionals": self.functionals.tolist(), "dim": self.dim}
        return {"variant": "renorm", "alpha": self.alpha, "delta": self.delta, "dim": self.dim,
                "f": {f"{n},{m}": v for (n, m), v in sorted(self.f.items())}}

    @classmethod
    def from_json(cls, obj: dict) -> "NormSpec":
        v = obj.get("variant")
        if v == "lp":
            p = obj.get("p", 2)
            return cls.lp(math.inf if p in ("inf", "Infinity") else float(p), int(obj["dim"]))
        if v == "polytopal":
            spec = cls.polytopal(obj["functionals"])
            if "dim" in obj and int(obj["dim"]) != spec.dim:
                raise StructuralError("functional length does not match dim")
            return spec
        if v == "renorm":
            f = {tuple(int(t) for t in k.split(",")): float(x) for k, x in obj["f"].items()}
            return cls.renorm(f, float(obj["alpha"]), float(obj["delta"]), int(obj["dim"]))
        raise StructuralError(f"unknown norm variant {v!r}")


def load_norm(path: str | Path) -> NormSpec:
    return NormSpec.from_json(json.loads(Path(path).read_text()))


def norm_eval(spec: NormSpec, x) -> float | np.ndarray:
    """Evaluate the norm of a vector, or of every row of a 2-d array."""
    X = np.asarray(x, dtype=float)
    if X.shape[-1] != spec.dim:
        raise StructuralError(f"vector length {X.shape[-1]} does not match dim {spec.dim}")
    if spec.variant == "lp":
        out = np.linalg.norm(X, ord=spec.p, axis=-1)
    elif spec.variant == "polytopal":
        out = np.abs(X @ spec.functionals.T).max(axis=-1)
    else:
        out = np.linalg.norm(X, axis=-1)
        if spec.f:
            P, c = spec._pairs()
            out = np.maximum(out, (c * np.abs(X[..., P[:, 0]] + X[..., P[:, 1]])).max(axis=-1))
    return float(out) if X.ndim == 1 else out


# ------------------------------------------------------------ renorm facts

def renorm_sandwich_check(spec: NormSpec, samples) -> bool:
    """||x||_2 <= ||x||_f <= (200/199)||x||_2 on every sample."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    e = np.linalg.norm(X, axis=1)
    f = norm_eval(spec, X)
    return bool(np.all(e <= f + TAU) and np.all(f <= RENORM_CEILING * e + TAU))


def pair_vector(dim: int, n: int, m: int) -> np.ndarray:
    """e_{n,m} = (e_n + e_m)/sqrt(2)."""
    v = np.zeros(dim)
    v[n] = v[m] = 1 / math.sqrt(2)
    return v


def pnm_member(spec: NormSpec, n: int, m: int, x) -> bool:
    """x in P_{n,m}: ||x||_2 <= h (x_n + x_m)/sqrt(2) with h = alpha + delta*f(n,m)."""
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(x) - 1) > TAU:
        raise DomainError("pnm_member expects a unit vector")
    h = spec.boost(n, m)
    return bool(np.linalg.norm(x) <= h * (x[n] + x[m]) / math.sqrt(2) + TAU)


def pnm_ball_radius(h: float) -> float:
    return math.sqrt(2 * (h - 1) / h)


def pnm_ball_member(spec: NormSpec, n: int, m: int, x) -> bool:
    """The equivalent ball test ||x - e_{n,m}||_2 <= sqrt(2(h-1)/h) for unit x."""
    x = np.asarray(x, dtype=float)
    h = spec.boost(n, m)
    return bool(np.linalg.norm(x - pair_vector(len(x), n, m)) <= pnm_ball_radius(h) + TAU)


def basis_pair_table(dim: int = 4) -> list[dict]:
    """Distances between all pair vectors e_{n,m}, e_{n',m'} of R^dim."""
    pairs = list(itertools.combinations(range(dim), 2))
    rows = []
    for p, q in itertools.combinations(pairs, 2):
        u, v = pair_vector(dim, *p), pair_vector(dim, *q)
        rows.append({"pairs": (p, q), "shared": len(set(p) & set(q)),
                     "difference": float(np.linalg.norm(u - v)),
                     "sum": float(np.linalg.norm(u + v))})
    return rows


def basis_pair_distances(dim: int = 4) -> dict[str, float]:
    """Distance values between distinct pair vectors, by overlap case.

    Every instance of a case is computed; a case whose instances disagree by
    more than 1e-12 raises, so each returned value holds for all of them.
    """
    out: dict[str, list[float]] = {}
    for row in basis_pair_table(dim):
        case = "share_one" if row["shared"] == 1 else "disjoint"
        out.setdefault(f"{case}_difference", []).append(row["difference"])
        out.setdefault(f"{case}_sum", []).append(row["sum"])
    table = {}
    for k, vals in out.items():
        if max(vals) - min(vals) > 1e-12:
            raise AssertionError(f"case {k} is not constant: {min(vals)}..{max(vals)}")
        table[k] = vals[0]
    return table


def eta_max(alpha: float) -> float:
    """Largest admissible eta in the renorm extraction argument."""
    return min(1 / 100, math.sqrt(alpha ** 2 - 1) / (10 * alpha), (1 - 1 / alpha) / 2)


def reverse_constant(alpha: float, delta: float) -> float:
    """C = max{1/eta_max, 3/(2 delta)} of the Kadets-to-GH direction."""
    return max(1 / eta_max(alpha), 3 / (2 * delta))


# ------------------------------------------------------------ operator norms

@lru_cache(maxsize=8)
def sphere_mesh(dim: int, size: int | None = None) -> np.ndarray:
    """Deterministic unit directions: a uniform circle, a Fibonacci sphere, or fixed Gaussians."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        size = size or 4096
        t = 2 * np.pi * np.arange(size) / size
        return np.column_stack([np.cos(t), np.sin(t)])
    if dim == 3:
        size = size or 32768
        i = np.arange(size) + 0.5
        z = 1 - 2 * i / size
        r = np.sqrt(1 - z * z)
        th = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([r * np.cos(th), r * np.sin(th), z])
    size = size or 65536
    g = np.random.default_rng(20240601).standard_normal((size, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def op_norm(T: np.ndarray, a: NormSpec, b: NormSpec, mesh: np.ndarray | None = None,
            polish: bool = True) -> float:
    """Estimate sup b(Tx)/a(x) on a direction mesh, then refine locally."""
    T = np.asarray(T, dtype=float)
    D = sphere_mesh(a.dim) if mesh is None else mesh
    vals = norm_eval(b, D @ T.T) / norm_eval(a, D)
    k = int(vals.argmax())
    best = float(vals[k])
    if not polish or a.dim == 1:
        return best

    def neg(x):
        na = norm_eval(a, x)
        return -norm_eval(b, T @ x) / na if na > 0 else 0.0

    for start in D[np.argsort(vals)[-3:]]:
        res = minimize(neg, start, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 400 * a.dim})
        best = max(best, -float(res.fun))
    return best


def op_norm_polytopal(T: np.ndarray, a: NormSpec, b: NormSpec) -> float:
    """Exact ||T||_{a->b} when b is polytopal: one LP per functional of b.

    The source norm must be polytopal too, so its unit ball is a polytope.
    """
    if a.variant != "polytopal" or b.variant != "polytopal":
        raise DomainError("exact operator norm needs polytopal norms")
    F = a.functionals
    A_ub = np.vstack([F, -F])
    b_ub = np.ones(2 * len(F))
    best = 0.0
    for psi in b.functionals:
        res = linprog(-(psi @ T), A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * a.dim, method="highs")
        best = max(best, -res.fun)
    return float(best)


def _signed_permutations(dim: int):
    for perm in itertools.permutations(range(dim)):
        for signs in itertools.product((1.0, -1.0), repeat=dim):
            M = np.zeros((dim, dim))
            M[perm, range(dim)] = signs
            yield M


def bm_distortion(T: np.ndarray, a: NormSpec, b: NormSpec, mesh=None, polish=True) -> float:
    """log ||T||_{a->b} ||T^-1||_{b->a}; +inf for (near) singular T."""
    T = np.asarray(T, dtype=float)
    if abs(np.linalg.det(T)) < 1e-12:
        return math.inf
    Ti = np.linalg.inv(T)
    return math.log(op_norm(T, a, b, mesh, polish) * op_norm(Ti, b, a, mesh, polish))


def bm_upper(a: NormSpec, b: NormSpec, restarts: int = 8, seed: int = 0) -> tuple[float, Witness]:
    """Upper bound on the Banach-Mazur distance by local search over matrices.

    Starts are the identity, signed permutation matrices (dim <= 4) and random
    orthogonal matrices; each is improved by Nelder-Mead on a coarse mesh and the
    winner is re-measured on the full mesh with polishing.
    """
    if a.dim != b.dim:
        raise DomainError("Banach-Mazur distance needs equal dimensions")
    dim = a.dim
    rng = np.random.default_rng(seed)
    coarse = sphere_mesh(dim, {1: None, 2: 512, 3: 2048}.get(dim, 4096))

    def obj(flat):
        return bm_distortion(flat.reshape(dim, dim), a, b, coarse, polish=False)

    starts = [np.eye(dim)]
    if dim <= 4:
        starts += list(_signed_permutations(dim))
    for _ in range(restarts):
        q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
        starts.append(q * np.sign(np.diag(r)))
    scored = sorted(((obj(s.ravel()), i) for i, s in enumerate(starts)), key=lambda t: t[0])
    keep = [starts[i] for _, i in scored[:max(1, min(len(starts), 2 + restarts // 4))]]
    cands = []
    for s in keep:
        res = minimize(obj, s.ravel(), method="Nelder-Mead",
                       options={"maxiter": 300 * dim * dim, "xatol": 1e-8, "fatol": 1e-10})
        cands.append(s)
        if np.isfinite(res.fun):
            cands.append(res.x.reshape(dim, dim))
    best_val, best_T = math.inf, np.eye(dim)
    for T in cands:
        v = bm_distortion(T, a, b)
        if v < best_val:
            best_val, best_T = v, T
    best_val = max(0.0, best_val)
    return best_val, Witness("BM", best_T, best_val)


# ------------------------------------------------------------- Kadets glue

@dataclass(frozen=True, eq=False)
class KadetsCertificate:
    """Generator pairs (u_i, v_i) of a Q-homogeneous correspondence with constants eps > delta > 0."""
    generators: tuple
    eps: float
    delta: float

    def __post_init__(self):
        gens = tuple((np.asarray(u, dtype=float), np.asarray(v, dtype=float)) for u, v in self.generators)
        if not gens:
            raise DomainError("certificate needs at least one generator")
        if not 0 < self.delta < self.eps:
            raise DomainError("certificate needs 0 < delta < eps")
        object.__setattr__(self, "generators", gens)

    @property
    def slack(self) -> float:
        return self.eps - self.delta

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        U = np.column_stack([u for u, _ in self.generators])
        V = np.column_stack([v for _, v in self.generators])
        return U, V


def _generator_weights(cert: KadetsCertificate, X: NormSpec, Y: NormSpec) -> np.ndarray:
    return np.array([max(norm_eval(X, u), norm_eval(Y, v)) for u, v in cert.generators])


def glue_norm_eval(cert: KadetsCertificate, normX: NormSpec, normY: NormSpec, x, y) -> float:
    """||(x, y)||_Z: the cheapest split x = x0 + sum t_i u_i, y = y0 - sum t_i v_i.

    Cost ||x0||_X + ||y0||_Y + (eps - delta) sum |t_i| max(||u_i||, ||v_i||).
    Solved as an LP when both norms are polytopal, else as a conic program.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) != normX.dim or len(y) != normY.dim:
        raise StructuralError("vector lengths do not match the norms")
    U, V = cert.matrices()
    w = cert.slack * _generator_weights(cert, normX, normY)
    k = U.shape[1]
    if normX.variant == "polytopal" and normY.variant == "polytopal":
        return _glue_lp(normX.functionals, normY.functionals, U, V, w, x, y)
    return _glue_conic(normX, normY, U, V, w, x, y)


def _glue_lp(F, G, U, V, w, x, y) -> float:
    # variables: t (k, free), a, b (norm epigraphs), s (k, |t| epigraph)
    k = U.shape[1]
    nv = 2 * k + 2
    rows, rhs = [], []
    FU, GV = F @ U, G @ V
    for j in range(len(F)):
        # +-F_j (x - U t) <= a
        for sgn in (1, -1):
            r = np.zeros(nv)
            r[:k] = -sgn * FU[j]
            r[k] = -1
            rows.append(r)
            rhs.append(-sgn * F[j] @ x)
    for j in range(len(G)):
        # +-G_j (y + V t) <= b
        for sgn in (1, -1):
            r = np.zeros(nv)
            r[:k] = sgn * GV[j]
            r[k + 1] = -1
            rows.append(r)
            rhs.append(-sgn * G[j] @ y)
    for i in range(k):
        for sgn in (1, -1):
            r = np.zeros(nv)
            r[i] = sgn
            r[k + 2 + i] = -1
            rows.append(r)
            rhs.append(0.0)
    c = np.concatenate([np.zeros(k), [1.0, 1.0], w])
    bounds = [(None, None)] * k + [(0, None)] * (k + 2)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"glue LP failed: {res.message}")
    return float(res.fun)


def _cvx_norm(spec: NormSpec, expr):
    import cvxpy as cp
    if spec.variant == "lp":
        return cp.norm(expr, "inf" if math.isinf(spec.p) else spec.p)
    if spec.variant == "polytopal":
        return cp.max(cp.abs(spec.functionals @ expr))
    terms = [cp.norm(expr, 2)]
    if spec.f:
        P, c = spec._pairs()
        terms.append(cp.max(cp.multiply(c, cp.abs(expr[P[:, 0]] + expr[P[:, 1]]))))
    return cp.maximum(*terms) if len(terms) > 1 else terms[0]


def _glue_conic(X, Y, U, V, w, x, y) -> float:
    import cvxpy as cp
    t = cp.Variable(U.shape[1])
    cost = _cvx_norm(X, x - U @ t) + _cvx_norm(Y, y + V @ t) + w @ cp.abs(t)
    prob = cp.Problem(cp.Minimize(cost))
    prob.solve()
    return float(prob.value)


@dataclass
class CertificateAudit:
    ok: bool
    tuples_checked: int
    worst_excess: float
    violation: dict | None = None
    domination_failures: list = field(default_factory=list)
    note: str = "sampling check: a pass does not prove the certificate, a failure refutes it"


def kadets_certificate_audit(cert: KadetsCertificate, normX: NormSpec, normY: NormSpec,
                             tuple_budget: int = 1000, seed: int = 0, max_len: int = 4) -> CertificateAudit:
    """Sample rational combinations of generators and test the Kadets tuple inequality."""
    rng = np.random.default_rng(seed)
    U, V = cert.matrices()
    k = U.shape[1]
    nu = np.array([norm_eval(normX, u) for u, _ in cert.generators])
    nv = np.array([norm_eval(normY, v) for _, v in cert.generators])
    w = np.maximum(nu, nv)
    dom = []
    for i in range(k):
        same_u = [j for j in range(k) if np.allclose(U[:, j], U[:, i], atol=TAU)]
        if not any(nv[j] <= nu[i] + TAU for j in same_u):
            dom.append(("u", i))
        same_v = [j for j in range(k) if np.allclose(V[:, j], V[:, i], atol=TAU)]
        if not any(nu[j] <= nv[i] + TAU for j in same_v):
            dom.append(("v", i))
    worst, violation = -math.inf, None
    for t in range(tuple_budget):
        size = int(rng.integers(1, min(max_len, k) + 1))
        idx = rng.integers(0, k, size=size)
        num = rng.integers(1, 6, size=size) * rng.choice([-1, 1], size=size)
        q = num / rng.integers(1, 6, size=size)
        lhs = abs(norm_eval(normX, U[:, idx] @ q) - norm_eval(normY, V[:, idx] @ q))
        rhs = cert.slack * float(np.abs(q) @ w[idx])
        if lhs - rhs > worst:
            worst = lhs - rhs
        if lhs > rhs + TAU and violation is None:
            violation = {"generators": idx.tolist(), "coefficients": q.tolist(), "lhs": lhs, "rhs": rhs}
    ok = violation is None and not dom
    return CertificateAudit(ok, tuple_budget, float(worst), violation, dom)


def kadets_certificate_check(cert: KadetsCertificate, normX: NormSpec, normY: NormSpec,
                             tuple_budget: int = 1000, seed: int = 0) -> bool:
    return kadets_certificate_audit(cert, normX, normY, tuple_budget, seed).ok


def norm_ratio_bounds(X: NormSpec, Y: NormSpec) -> tuple[float, float]:
    """(a, b) with a ||z||_X <= ||z||_Y <= b ||z||_X for all z, exact for polytopal norms."""
    I = np.eye(X.dim)
    if X.variant == "polytopal" and Y.variant == "polytopal":
        return 1 / op_norm_polytopal(I, Y, X), op_norm_polytopal(I, X, Y)
    return 1 / op_norm(I, Y, X), op_norm(I, X, Y)
