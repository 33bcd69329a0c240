"""Random instance generators and per-theorem verification campaigns."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .corespace import (
    TAU, Bijection, ClassBounds, Correspondence, DomainError, FiniteMetricSpace, ResourceError,
    Witness, graph_metric_capped, sampled_triangle_violations, validate_metric,
)
from .distances import (
    gh_bijective, gh_exact, hl_check, hl_closeness, lip_constants, lipschitz_exact, measure_witness,
)
from .normed import (
    KadetsCertificate, NormSpec, basis_pair_distances, eta_max, glue_norm_eval, norm_eval,
    norm_ratio_bounds, pair_vector, pnm_ball_member, pnm_member,
    renorm_sandwich_check, reverse_constant,
)
from .reductions import (
    Levels, bm_gadget, bm_gadget_pull, bm_gadget_push, choose_constants, hl_pull, hl_push,
    kadets_gadget, kadets_pull, kadets_push, renorm_build, renorm_push, sign_sum_audit, suspend,
    suspend_pull, suspend_push, symmetric_sample, unitize, unitize_pull, vec_degree_audit,
)

RNG_NAME = "numpy.random.PCG64"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & (2 ** 64 - 1)))


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed)


# ------------------------------------------------------------- generators

def gen_metric(bounds: ClassBounds, n: int, seed) -> FiniteMetricSpace:
    """Random metric with off-diagonal values in [lower, upper].

    Values are drawn uniformly, then replaced by shortest-path distances, which
    keeps them inside the bounds (every path has an edge >= lower, and the
    direct edge is <= upper).
    """
    if n < 2:
        raise DomainError("need at least two points")
    p = bounds.lower if bounds.lower is not None else 0.1
    q = bounds.upper if bounds.upper is not None else 2 * p
    if q < p:
        raise DomainError("upper bound below lower bound")
    rng = _rng(seed)
    d = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    d[iu] = rng.uniform(p, q, len(iu[0]))
    d = d + d.T
    d = shortest_path(d, method="FW", directed=False)
    m = FiniteMetricSpace(d, bounds=bounds)
    v = validate_metric(m, bounds)
    if not v.ok:
        raise AssertionError(f"generated metric failed validation: {v}")
    return m


def perturb_bilipschitz(d: FiniteMetricSpace, L: float, seed,
                        bounds: ClassBounds | None = None, attempts: int = 100):
    """e = s*d with factors s in [1/L, L], repaired to a metric; returns (e, identity LIP witness).

    The repair takes shortest paths, which can only lower entries and keeps
    every ratio e/d inside [1/L, L]. When `bounds` are given, draws that leave
    the class are re-sampled.
    """
    if not L >= 1:
        raise DomainError("L must be at least 1")
    rng = _rng(seed)
    n = d.n
    iu = np.triu_indices(n, 1)
    for _ in range(attempts):
        s = np.ones((n, n))
        s[iu] = np.exp(rng.uniform(-math.log(L), math.log(L), len(iu[0])))
        s = np.triu(s, 1) + np.triu(s, 1).T
        e = shortest_path(d.dist * s, method="FW", directed=False)
        m = FiniteMetricSpace(e, bounds=bounds or ClassBounds())
        if bounds is None or validate_metric(m, bounds).ok:
            b = Bijection.identity(n)
            a, ai = lip_constants(d, m, b)
            r = max(0.0, math.log(a), math.log(ai))
            return m, Witness("LIP", b, r, {"variant": "BBI"})
    raise ResourceError("could not draw a perturbation inside the bounds")


def relabel(m: FiniteMetricSpace, perm: np.ndarray) -> FiniteMetricSpace:
    """The space with point i renamed perm[i]."""
    inv = np.argsort(perm)
    return FiniteMetricSpace(m.dist[np.ix_(inv, inv)], bounds=m.bounds)


def random_polytopal(rng: np.random.Generator, dim: int, pairs: int) -> NormSpec:
    F = rng.standard_normal((pairs, dim))
    return NormSpec.polytopal(np.vstack([F, -F]))


def random_near_isometry(rng: np.random.Generator, dim: int, c: float) -> np.ndarray:
    """A matrix with all singular values in [1/c, c]."""
    q1, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q1 @ np.diag(rng.uniform(1 / c, c, dim)) @ q2


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(np.round(np.asarray(a, dtype=float), 12)).tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------- reports

THEOREMS = ("gh-bij-equiv", "identity-mpq", "lip-to-gh", "hl-to-gh", "bm-to-lip", "unitize-hl",
            "kadets-to-gh", "gh-to-renorm", "lip-variants", "metric-axioms", "renorm-facts", "glue-norm")


@dataclass
class CampaignConfig:
    theorem_id: str
    trials: int = 10
    seed: int = 0
    size: int | None = None
    tolerance: float = TAU
    threads: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem_id not in THEOREMS:
            raise DomainError(f"unknown theorem id {self.theorem_id!r}")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")


@dataclass
class TrialRecord:
    trial: int
    seed: int
    passed: bool
    bound: float
    measured: dict
    margin: float
    digest: str = ""
    skipped: bool = False
    checks: dict = field(default_factory=dict)
    note: str = ""
    instance: dict | None = None


@dataclass
class VerificationReport:
    header: dict
    config: dict
    trials: list
    aggregate: dict

    @property
    def passed(self) -> bool:
        return self.aggregate["passed"]

    def to_json(self) -> dict:
        return {"header": self.header, "config": self.config,
                "trials": [asdict(t) for t in self.trials], "aggregate": self.aggregate}

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(_clean(self.to_json()), indent=1, sort_keys=True))


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _record(trial, seed, checks: dict, bound: float, measured: dict, margin: float, dg: str,
            instance: dict | None = None, note: str = "") -> TrialRecord:
    ok = all(bool(v) for v in checks.values())
    return TrialRecord(trial, seed, ok, float(bound), measured, float(margin), dg, False,
                       {k: bool(v) for k, v in checks.items()}, note, None if ok else instance)


# -------------------------------------------------------------- campaigns

def _trial_gh_bij_equiv(rng, cfg, t, seed):
    n = cfg.size or 5
    b = ClassBounds(1.0, 2.0)
    d = gen_metric(b, n, rng)
    if rng.random() < 0.5:
        # a noisy relabelled copy, so that small GH values occur often
        s = rng.uniform(0.02, 0.6)
        iu = np.triu_indices(n, 1)
        e = d.dist.copy()
        e[iu] = np.clip(e[iu] + rng.uniform(-s, s, len(iu[0])), 1.0, 2.0)
        e = np.triu(e, 1) + np.triu(e, 1).T
        e = relabel(FiniteMetricSpace(e, bounds=b), rng.permutation(n))
    else:
        e = gen_metric(b, n, rng)
    g, gw = gh_exact(d, e)
    h, hw = gh_bijective(d, e)
    tol = cfg.tolerance
    guard = g < 0.5
    checks = {
        "one_sided": h >= g - tol,
        "equality_under_guard": (abs(g - h) <= tol) if guard else True,
        "witness_gh": abs(measure_witness(gw, d, e) - g) <= tol,
        "witness_bij": abs(measure_witness(hw, d, e) - h) <= tol,
    }
    margin = (tol - abs(g - h)) if guard else (h - g)
    return _record(t, seed, checks, tol if guard else 0.0, {"gh": g, "bijective": h, "guard": guard},
                   margin, digest(d.dist, e.dist), {"d": d.dist, "e": e.dist})


def _trial_identity_mpq(rng, cfg, t, seed):
    n = cfg.size or 4
    p, q = 2.0, 15.0
    b = ClassBounds(p, q)
    d = gen_metric(b, n, rng)
    if rng.random() < 0.8:
        L = float(np.exp(rng.uniform(math.log(1.005), math.log(1.6))))
        e, _ = perturb_bilipschitz(d, L, rng, bounds=b)
        e = relabel(e, rng.permutation(n))
    else:
        e = gen_metric(b, n, rng)
    g, _ = gh_exact(d, e)
    lip, _ = lipschitz_exact(d, e, "BBI")
    tol = cfg.tolerance
    m1 = math.log1p(2 * g / p) + tol - lip if g < 1 else math.inf
    m2 = q * math.expm1(lip) / 2 + tol - g if lip < 1 else math.inf
    checks = {"gh_to_lip": m1 >= 0, "lip_to_gh": m2 >= 0}
    margin = min(m1, m2)
    bound = math.log1p(2 * g / p) if g < 1 else q * math.expm1(lip) / 2
    vacuous = not math.isfinite(margin)
    return _record(t, seed, checks, bound, {"gh": g, "lip": lip}, 0.0 if vacuous else margin,
                   digest(d.dist, e.dist), {"d": d.dist, "e": e.dist},
                   note="vacuous: neither guard applies" if vacuous else "")


LIP_FACTORS = (1.01, 1.05, 1.2)


def _trial_lip_to_gh(rng, cfg, t, seed):
    n = cfg.size or 4
    k_min, k_max = cfg.options.get("levels", (-3, 3))
    L = LIP_FACTORS[t % len(LIP_FACTORS)]
    d = gen_metric(ClassBounds(0.5, 1.0), n, rng)
    e, w = perturb_bilipschitz(d, L, rng)
    perm = rng.permutation(n)
    e = relabel(e, perm)
    w = Witness("LIP", Bijection(perm), w.quality, {"variant": "BBI"})
    gh, ds, es = suspend_push(w, d, e, k_min, k_max)
    dist, r = gh.meta["distortion"], gh.meta["r"]
    fwd_bound = 2 * math.expm1(r)
    forward = dist < fwd_bound + cfg.tolerance
    eps = dist / 2 + 1e-12
    rep = suspend_pull(gh, d, e, eps, k_min, k_max)
    lip, _ = lipschitz_exact(d, e, "BBI")
    lv_d, lv_e = Levels(d.n, k_min, k_max), Levels(e.n, k_min, k_max)
    i, j = int(rng.integers(n)), int(rng.integers(n))
    k = int(rng.integers(k_min, k_max))
    bad = Correspondence(set(gh.payload.pairs) | {(lv_d.index(i, k), lv_e.index(j, k + 1))})
    inj = suspend_pull(Witness("GH", bad, 0.0), d, e, eps, k_min, k_max)
    checks = {"forward": forward, "pull": rep.ok, "pull_bound": rep.ok and lip <= rep.bound + cfg.tolerance,
              "injected_rejected": (not inj.ok) and inj.failed == "liptogh1"}
    return _record(t, seed, checks, fwd_bound,
                   {"L": L, "r": r, "distortion": dist, "pull_bound": rep.bound, "lip": lip,
                    "pull_failed": rep.failed, "injected_failed": inj.failed},
                   fwd_bound + cfg.tolerance - dist, digest(d.dist, e.dist), {"d": d.dist, "e": e.dist})


def _trial_hl_to_gh(rng, cfg, t, seed):
    n = cfg.size or 4
    k_min = cfg.options.get("k_min", -3)
    L = (1.01, 1.05, 1.1)[t % 3]
    d = gen_metric(ClassBounds(0.5, 3.0), n, rng)
    e, _ = perturb_bilipschitz(d, L, rng)
    e = relabel(e, rng.permutation(n))
    eps_hl, hw = hl_closeness(d, e)
    gh, ds, es = hl_push(hw, d, e, k_min)
    dist = gh.meta["distortion"]
    eps = dist / 2 + 1e-12
    rep = hl_pull(gh, d, e, eps, k_min)
    exhaustive = rep.r0 is not None and hl_check(d, e, rep.r0, 24 * eps)
    checks = {"push": dist <= 2 * eps_hl + cfg.tolerance, "pull": rep.ok, "hl_exhaustive": exhaustive,
              "bound_dominates": rep.ok and rep.bound + cfg.tolerance >= eps_hl}
    return _record(t, seed, checks, 24 * eps, {"hl": eps_hl, "distortion": dist, "r0_hl": rep.measured,
                                               "failed": rep.failed},
                   24 * eps - (rep.measured or 0.0), digest(d.dist, e.dist), {"d": d.dist, "e": e.dist})


def hexagon(rng: np.random.Generator) -> np.ndarray:
    """{+-a, +-b, +-(a+b)} for a jittered pair at roughly 120 degrees."""
    t0 = rng.uniform(0, 2 * np.pi)
    t1 = t0 + 2 * np.pi / 3 + rng.uniform(-0.25, 0.25)
    a = rng.uniform(0.8, 1.2) * np.array([np.cos(t0), np.sin(t0)])
    b = rng.uniform(0.8, 1.2) * np.array([np.cos(t1), np.sin(t1)])
    return np.array([a, b, a + b, -a, -b, -a - b])


def _trial_bm_to_lip(rng, cfg, t, seed):
    c = cfg.options.get("iso", 1.02)
    nu = NormSpec.lp(2, 2)
    for attempt in range(10):
        V = hexagon(rng)[: cfg.size or 6]
        T = random_near_isometry(rng, 2, c)
        W = V @ T.T
        vals = [norm_eval(nu, X[i] - X[j]) for X in (V, W) for i in range(len(V)) for j in range(len(V)) if i != j]
        cs = choose_constants(vals)
        gn, gl = bm_gadget(nu, V, cs), bm_gadget(nu, W, cs)
        if vec_degree_audit(gn)[1] and vec_degree_audit(gl)[1]:
            break
    else:
        return TrialRecord(t, seed, True, 0.0, {}, 0.0, "", True, note="degree audit failed ten times")
    w = bm_gadget_push(T, gn, gl)
    mx = max(w.meta["lip"], w.meta["lip_inv"])
    res = bm_gadget_pull(w.payload, gn, gl)
    checks = {"push": mx <= c + cfg.tolerance, "pull": res.ok,
              "S_equals_T": res.S is not None and np.array_equal(res.S, np.arange(len(V)))
              and np.abs(res.matrix - T).max() <= 1e-9,
              "bound": res.ok and abs(res.bound - 2 * math.log(mx)) <= cfg.tolerance,
              "covered": not res.uncovered}
    return _record(t, seed, checks, c, {"max_lip": mx, "pull_bound": res.bound, "constants": len(cs),
                                        "vertices": gn.space.n, "status": res.status},
                   c + cfg.tolerance - mx, digest(V, T), {"V": V, "T": T})


def _trial_unitize_hl(rng, cfg, t, seed):
    side = cfg.size or 15
    c = cfg.options.get("iso", 1.05)
    if t % 2 == 0:
        norm = NormSpec.lp(2, 2)
    else:
        th = np.pi * np.arange(4) / 4 + rng.uniform(-0.2, 0.2, 4)
        F = np.column_stack([np.cos(th), np.sin(th)])
        norm = NormSpec.polytopal(np.vstack([F, -F]))
    # grid step chosen so neighbouring points (including diagonals) sit within 0.4
    h = 0.4 / float(norm_eval(norm, np.array([[1, 0], [0, 1], [1, 1], [1, -1]])).max())
    g = h * np.arange(side)
    P = np.array([(x, y) for x in g for y in g])
    T = random_near_isometry(rng, 2, c)
    Q = P @ T.T
    ms, mt = unitize(norm, P), unitize(norm, Q)
    dist = float(np.abs(ms.dist - mt.dist).max())
    K = dist / 2 + 1e-12
    if K >= 0.25:
        return TrialRecord(t, seed, True, 0.0, {"K": K}, 0.0, digest(P, T), True, note="K >= 1/4")
    res = unitize_pull(Bijection.identity(len(P)), K, norm, P, norm, Q)
    checks = {"status": res.ok, "within_1_plus_6K": res.ok and max(res.lip1, res.lip1_inv) <= 1 + 6 * K + cfg.tolerance}
    return _record(t, seed, checks, 1 + 6 * K, {"K": K, "lip1": res.lip1, "lip1_inv": res.lip1_inv,
                                                "chain_slack": res.chain_slack},
                   1 + 6 * K - max(res.lip1 or 0, res.lip1_inv or 0), digest(P, T), {"T": T})


def _trial_kadets(rng, cfg, t, seed):
    half = (cfg.size or 8) // 2
    s_max = cfg.options.get("s_max", 3)
    X = random_polytopal(rng, 3, 5)
    k = len(X.functionals) // 2
    s = rng.uniform(1.0, 1.001, k)
    Y = NormSpec.polytopal(X.functionals * np.concatenate([s, s])[:, None])
    SX = symmetric_sample(X, half, rng)
    perm = rng.permutation(2 * half)
    SY = np.empty_like(SX)
    SY[perm] = SX / norm_eval(Y, SX)[:, None]
    gx, gy = kadets_gadget(X, SX, s_max), kadets_gadget(Y, SY, s_max)
    pi = Bijection(perm)
    worst, _, _ = sign_sum_audit(pi, gx, gy)
    eps = worst * (1 + 1e-6) + 1e-12
    w = kadets_push(pi, eps, gx, gy)
    cases = w.meta["cases"]
    dist = w.meta["distortion"]
    eps_pull = dist / 2 * (1 + 1e-9) + 1e-12
    rep = kadets_pull(w, gx, gy, eps_pull, tuple_budget=cfg.options.get("tuples", 1000), seed=seed)
    checks = {
        "case1": cases[1] < 4 * eps + cfg.tolerance, "case2": cases[2] < 4 * eps + cfg.tolerance,
        "case3": cases[3] < 2 * eps + cfg.tolerance, "case4": cases[4] <= cfg.tolerance,
        "forward": dist < 4 * eps + cfg.tolerance,
        "pull": rep.ok, "dichotomy": rep.checks.get("dichotomy", False),
        "near_symmetry": rep.near_symmetry is not None and rep.near_symmetry < 8 * eps_pull,
        "tuple_16eps": rep.checks.get("tuple-16eps", False),
    }
    return _record(t, seed, checks, 4 * eps, {"eps": eps, "distortion": dist, "cases": cases,
                                              "eps_pull": eps_pull, "near_symmetry": rep.near_symmetry,
                                              "certificate_eps": rep.certificate.eps if rep.certificate else None,
                                              "failed": rep.failed},
                   4 * eps - dist, digest(X.functionals, SX), {"X": X.functionals, "samples": SX})


def _trial_gh_to_renorm(rng, cfg, t, seed):
    n = cfg.size or 4
    probes = cfg.options.get("probes", 10_000)
    f = gen_metric(ClassBounds(0.5, 1.0), n, rng)
    r = float(rng.uniform(0.0, 0.25))
    pi = rng.permutation(n)
    g = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    for a, b in zip(*iu):
        v = np.clip(f.dist[a, b] + rng.uniform(-2 * r, 2 * r), 0.5, 1.0)
        g[pi[a], pi[b]] = g[pi[b], pi[a]] = v
    g = FiniteMetricSpace(g)
    sf, sg = renorm_build(f), renorm_build(g)
    w = renorm_push(Bijection(pi), r, sf, sg, probes=probes, seed=seed)
    T = w.payload
    X = rng.standard_normal((probes, n))
    dev = np.abs(norm_eval(sg, X @ T.T) - norm_eval(sf, X))
    lim = 2 * sf.delta * r * np.linalg.norm(X, axis=1) + cfg.tolerance
    checks = {"probe": bool((dev <= lim).all()), "quality": w.quality <= 4 * sf.delta * r + cfg.tolerance,
              "push_probe": w.meta["probe_max_ratio"] <= 2 * sf.delta * r + cfg.tolerance}
    return _record(t, seed, checks, 4 * sf.delta * r,
                   {"r": r, "quality": w.quality, "probe_max": float((dev - lim + cfg.tolerance).max()),
                    "reverse_constant": w.meta["reverse_constant"]},
                   float((lim - dev).min()), digest(f.dist, g.dist), {"f": f.dist, "g": g.dist})


def _trial_lip_variants(rng, cfg, t, seed):
    n = cfg.size or 4
    d = gen_metric(ClassBounds(0.5, 2.0), n, rng)
    if rng.random() < 0.5:
        e, _ = perturb_bilipschitz(d, float(rng.uniform(1.01, 2.0)), rng)
        e = relabel(e, rng.permutation(n))
    else:
        e = gen_metric(ClassBounds(0.5, 2.0), n, rng)
    bbi = lipschitz_exact(d, e, "BBI")[0]
    gro = lipschitz_exact(d, e, "GROMOV")[0]
    tol = cfg.tolerance
    checks = {"lower": bbi <= gro + tol, "upper": gro <= 2 * bbi + tol}
    return _record(t, seed, checks, 2 * bbi, {"bbi": bbi, "gromov": gro}, min(gro - bbi, 2 * bbi - gro) + tol,
                   digest(d.dist, e.dist), {"d": d.dist, "e": e.dist})


def construction_families(rng: np.random.Generator) -> dict[str, FiniteMetricSpace]:
    """One instance of every metric construction."""
    d = gen_metric(ClassBounds(0.5, 1.0), 4, rng)
    out = {"suspension": suspend(d, -3, 3), "half_suspension": suspend(d, -3, 0)}
    nu = NormSpec.lp(2, 2)
    V = hexagon(rng)
    vals = [norm_eval(nu, V[i] - V[j]) for i in range(6) for j in range(6) if i != j]
    out["bm_gadget"] = bm_gadget(nu, V, choose_constants(vals)).space
    X = random_polytopal(rng, 3, 5)
    out["kadets_gadget"] = kadets_gadget(X, symmetric_sample(X, 4, rng), 3).space
    out["unitize"] = unitize(NormSpec.lp(1, 2), rng.uniform(0, 3, (60, 2)))
    nv = 40
    edges = [(int(a), int(b), float(rng.uniform(0.5, 6))) for a in range(nv) for b in range(a + 1, nv)
             if rng.random() < 0.08]
    out["capped_graph"] = graph_metric_capped(list(range(nv)), edges, 15.0)
    return out


def _trial_metric_axioms(rng, cfg, t, seed):
    checks_per_family = cfg.options.get("triangles", 10_000)
    fams = construction_families(rng)
    viol = {k: sampled_triangle_violations(m.dist, checks_per_family, rng, cfg.tolerance) for k, m in fams.items()}
    checks = {k: v == 0 for k, v in viol.items()}
    return _record(t, seed, checks, 0.0, {"violations": viol, "sizes": {k: m.n for k, m in fams.items()},
                                          "triangles": checks_per_family},
                   float(-sum(viol.values())), digest(*[m.dist for m in fams.values()]))


def _trial_renorm_facts(rng, cfg, t, seed):
    n = cfg.size or 6
    count = cfg.options.get("probes", 10_000)
    f = gen_metric(ClassBounds(0.5, 1.0), n, rng)
    spec = renorm_build(f)
    table = basis_pair_distances(n)
    expect = {"share_one_difference": 1.0, "share_one_sum": math.sqrt(3),
              "disjoint_difference": math.sqrt(2), "disjoint_sum": math.sqrt(2)}
    table_ok = all(abs(table[k] - v) <= 1e-12 for k, v in expect.items())
    agree = 0
    for _ in range(count):
        a, b = sorted(rng.choice(n, 2, replace=False))
        if rng.random() < 0.5:
            x = rng.standard_normal(n)
        else:
            x = pair_vector(n, a, b) + rng.normal(0, rng.uniform(0.01, 0.1), n)
        x /= np.linalg.norm(x)
        agree += pnm_member(spec, a, b, x) == pnm_ball_member(spec, a, b, x)
    sandwich = renorm_sandwich_check(spec, rng.standard_normal((count, n)))
    checks = {"pair_table": table_ok, "pnm_agreement": agree == count, "sandwich": sandwich}
    return _record(t, seed, checks, 0.0, {"table": table, "agree": agree, "eta_max": eta_max(spec.alpha),
                                          "reverse_constant": reverse_constant(spec.alpha, spec.delta)},
                   float(agree - count), digest(f.dist))


def certified_close_pair(rng: np.random.Generator, dim: int, k: int = 4, gap: float = 0.002):
    """Polytopal X, a perturbed Y and generators (u, u/||u||_Y) with a provably valid constant.

    For a ||z||_X <= ||z||_Y <= b ||z||_X and g = max(b - 1, 1 - a), every
    combination obeys | ||sum t u||_X - ||sum t v||_Y | <= sum |t_i| (g ||u_i||_X + ||u_i - v_i||_Y),
    so eps - delta = max_i (g ||u_i|| + ||u_i - v_i||) / max(||u_i||, ||v_i||) is valid.
    """
    X = random_polytopal(rng, dim, dim + 2)
    m = len(X.functionals) // 2
    s = rng.uniform(1 - gap, 1 + gap, m)
    Y = NormSpec.polytopal(X.functionals * np.concatenate([s, s])[:, None])
    a, b = norm_ratio_bounds(X, Y)
    g = max(b - 1, 1 - a)
    U = rng.standard_normal((k, dim))
    U /= norm_eval(X, U)[:, None]
    V = U / norm_eval(Y, U)[:, None]
    w = np.maximum(norm_eval(X, U), norm_eval(Y, V))
    slack = float(((g * norm_eval(X, U) + norm_eval(Y, U - V)) / w).max()) + 1e-12
    cert = KadetsCertificate(tuple(zip(U, V)), 2 * slack, slack)
    return X, Y, cert


def _trial_glue_norm(rng, cfg, t, seed):
    dim = cfg.size or int(rng.integers(1, 4))
    probes = cfg.options.get("probes", 1000)
    X, Y, cert = certified_close_pair(rng, dim)
    worst_x = worst_y = 0.0
    for _ in range(probes):
        x = rng.standard_normal(dim) * rng.uniform(0.1, 3)
        y = rng.standard_normal(dim) * rng.uniform(0.1, 3)
        worst_x = max(worst_x, abs(glue_norm_eval(cert, X, Y, x, np.zeros(dim)) - norm_eval(X, x)))
        worst_y = max(worst_y, abs(glue_norm_eval(cert, X, Y, np.zeros(dim), y) - norm_eval(Y, y)))
    gen_ok = all(glue_norm_eval(cert, X, Y, u, -v) <= cert.slack * norm_eval(X, u) + 1e-6
                 for u, v in cert.generators)
    checks = {"x_embedding": worst_x <= 1e-6, "y_embedding": worst_y <= 1e-6, "generators": gen_ok}
    return _record(t, seed, checks, 1e-6, {"worst_x": worst_x, "worst_y": worst_y, "slack": cert.slack},
                   1e-6 - max(worst_x, worst_y), digest(X.functionals, Y.functionals))


TRIALS: dict[str, Callable] = {
    "gh-bij-equiv": _trial_gh_bij_equiv,
    "identity-mpq": _trial_identity_mpq,
    "lip-to-gh": _trial_lip_to_gh,
    "hl-to-gh": _trial_hl_to_gh,
    "bm-to-lip": _trial_bm_to_lip,
    "unitize-hl": _trial_unitize_hl,
    "kadets-to-gh": _trial_kadets,
    "gh-to-renorm": _trial_gh_to_renorm,
    "lip-variants": _trial_lip_variants,
    "metric-axioms": _trial_metric_axioms,
    "renorm-facts": _trial_renorm_facts,
    "glue-norm": _trial_glue_norm,
}


def _run_trial(cfg: CampaignConfig, t: int) -> TrialRecord:
    seed = (cfg.seed ^ t) & (2 ** 64 - 1)
    rng = make_rng(seed)
    try:
        return TRIALS[cfg.theorem_id](rng, cfg, t, seed)
    except ResourceError as exc:
        return TrialRecord(t, seed, True, 0.0, {}, 0.0, "", True, note=f"skipped: {exc}")
    except Exception as exc:  # a crash inside a trial is a failed trial, not a crashed campaign
        return TrialRecord(t, seed, False, 0.0, {}, -math.inf, "", False, note=f"{type(exc).__name__}: {exc}")


def run_campaign(cfg: CampaignConfig, report_path: str | Path | None = None) -> VerificationReport:
    """Run every trial of a theorem campaign and collect a report (optionally written as JSON)."""
    threads = cfg.threads or int(os.environ.get("MDZ_THREADS", "1") or 1)
    start = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(lambda t: _run_trial(cfg, t), range(cfg.trials)))
    else:
        records = [_run_trial(cfg, t) for t in range(cfg.trials)]
    records.sort(key=lambda r: r.trial)
    wall = time.perf_counter() - start
    ran = [r for r in records if not r.skipped]
    margins = [r.margin for r in ran if math.isfinite(r.margin) and not r.note.startswith("vacuous")]
    agg = {"passed": all(r.passed for r in records), "pass_count": sum(r.passed and not r.skipped for r in records),
           "fail_count": sum(not r.passed for r in records), "skipped": sum(r.skipped for r in records),
           "worst_margin": min(margins) if margins else 0.0, "wall_time": wall}
    header = {"rng": RNG_NAME, "trial_seed": "seed XOR trial index", "tolerance": cfg.tolerance,
              "package": "mdz 0.1.0", "numpy": np.__version__, "python": platform.python_version()}
    conf = {"theorem_id": cfg.theorem_id, "trials": cfg.trials, "seed": cfg.seed, "size": cfg.size,
            "options": cfg.options}
    rep = VerificationReport(header, conf, records, agg)
    if report_path is not None:
        rep.write(report_path)
    return rep
