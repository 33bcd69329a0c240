"""Renorms of l2 indexed by metrics in M_{1/2}^1 and the GH -> Banach-Mazur transfer."""
from __future__ import annotations

import math

import numpy as np

from ..corespace import TAU, Bijection, DomainError, FiniteMetricSpace, PreconditionError, Witness
from ..normed import DEFAULT_ALPHA, DEFAULT_DELTA, NormSpec, norm_eval, reverse_constant


def renorm_build(f: FiniteMetricSpace, alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA,
                 dim: int | None = None) -> NormSpec:
    """The renorm with boost alpha + delta*f(n,m) on each pair of points of f."""
    n = f.n
    dim = n if dim is None else dim
    if dim < n:
        raise DomainError("dim must be at least the number of points")
    iu = np.triu_indices(n, 1)
    vals = f.dist[iu]
    if ((vals < 0.5 - TAU) | (vals > 1 + TAU)).any():
        raise DomainError("f must take values in [1/2, 1] off the diagonal")
    return NormSpec.renorm({(int(a), int(b)): float(v) for a, b, v in zip(*iu, vals)}, alpha, delta, dim)


def permutation_operator(pi: Bijection, dim: int) -> np.ndarray:
    """T e_n = e_pi(n), identity on coordinates beyond the permuted block."""
    T = np.eye(dim)
    k = pi.n
    T[:k, :k] = 0.0
    T[pi.perm, np.arange(k)] = 1.0
    return T


def renorm_push(pi: Bijection, r: float, spec_f: NormSpec, spec_g: NormSpec,
                probes: int = 10_000, seed: int = 0) -> Witness:
    """Banach-Mazur witness from a bijection pi with |g(pi n, pi m) - f(n,m)| <= 2r.

    The permutation operator moves each norm value by at most 2 delta r ||x||_2,
    so log ||T|| ||T^-1|| <= 2 log(1 + 2 delta r). The probe check measures the
    deviation on Gaussian vectors.
    """
    if spec_f.variant != "renorm" or spec_g.variant != "renorm":
        raise DomainError("renorm_push needs renorm specs")
    if (spec_f.dim, spec_f.alpha, spec_f.delta) != (spec_g.dim, spec_g.alpha, spec_g.delta):
        raise DomainError("specs must share dim, alpha and delta")
    for (n, m), v in spec_f.f.items():
        key = tuple(sorted((int(pi.perm[n]), int(pi.perm[m]))))
        if key not in spec_g.f:
            raise PreconditionError(f"pair {key} missing from g")
        if abs(spec_g.f[key] - v) > 2 * r + TAU:
            raise PreconditionError(f"|g{key} - f({n},{m})| = {abs(spec_g.f[key] - v)} exceeds 2r = {2 * r}")
    T = permutation_operator(pi, spec_f.dim)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((probes, spec_f.dim))
    dev = np.abs(norm_eval(spec_g, X @ T.T) - norm_eval(spec_f, X)) / np.linalg.norm(X, axis=1)
    delta = spec_f.delta
    q = 2 * math.log1p(2 * delta * r)
    return Witness("BM", T, q, {"probe_max_ratio": float(dev.max()), "probe_bound": 2 * delta * r,
                                "probes": probes, "reverse_constant": reverse_constant(spec_f.alpha, delta)})
