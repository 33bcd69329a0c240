"""Unit-capped metrics on samples of a normed space and the large-scale Lipschitz pullback."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..corespace import (
    TAU, Bijection, ClassBounds, FiniteMetricSpace, PreconditionError, StructuralError, distortion,
)
from ..normed import NormSpec, norm_eval

STEP = 0.5


def pairwise_norms(norm: NormSpec, points) -> np.ndarray:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    diff = P[:, None, :] - P[None, :, :]
    return norm_eval(norm, diff.reshape(-1, P.shape[1])).reshape(len(P), len(P))


def unitize(norm: NormSpec, points) -> FiniteMetricSpace:
    """min{||x - y||, 1} on a finite sample."""
    N = pairwise_norms(norm, points)
    off = ~np.eye(len(N), dtype=bool)
    if (N[off] <= 0).any():
        raise StructuralError("sample contains duplicate points")
    return FiniteMetricSpace(np.minimum(N, 1.0), bounds=ClassBounds(None, 1.0))


@dataclass
class LargeScaleLip:
    status: str
    K: float
    lip1: float | None = None
    lip1_inv: float | None = None
    bound: float | None = None
    chain_slack: float | None = None
    pairs: int = 0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _chain_bound(N: np.ndarray, K: float) -> np.ndarray:
    """Least value of sum over a chain of (step + 2K), steps <= 1/2, for every pair."""
    W = np.where((N <= STEP + TAU) & (N > 0), N + 2 * K, 0.0)
    return shortest_path(csr_matrix(W), method="D", directed=False)


def _lip1(Ns: np.ndarray, Nt: np.ndarray, perm: np.ndarray):
    img = Nt[np.ix_(perm, perm)]
    mask = Ns >= 1.0
    if not mask.any():
        return None, mask
    return float((img[mask] / Ns[mask]).max()), mask


def unitize_pull(phi: Bijection, K: float, norm_src: NormSpec, points_src,
                 norm_dst: NormSpec, points_dst) -> LargeScaleLip:
    """Large-scale Lipschitz constants of a sample bijection with small unitized distortion.

    Lip_1 is the largest ratio ||phi x - phi y|| / ||x - y|| over pairs at
    distance >= 1. Any chain of steps <= 1/2 from x to y bounds the image
    distance by its length plus 2K per step; the best such chain bound is
    reported, and its excess over 1 + 6K is the chain slack.
    """
    if not K < 0.25:
        raise PreconditionError("unitize_pull needs K < 1/4")
    Ns, Nt = pairwise_norms(norm_src, points_src), pairwise_norms(norm_dst, points_dst)
    ms, mt = FiniteMetricSpace(np.minimum(Ns, 1.0)), FiniteMetricSpace(np.minimum(Nt, 1.0))
    dist = distortion(ms, mt, phi)
    if not dist < 2 * K:
        raise PreconditionError(f"unitized distortion {dist} is not below 2K = {2 * K}")
    res = LargeScaleLip("ok", K, bound=1 + 6 * K)
    perm, inv = phi.perm, phi.inverse().perm
    lip1, mask = _lip1(Ns, Nt, perm)
    lip1_inv, mask_inv = _lip1(Nt, Ns, inv)
    res.lip1, res.lip1_inv, res.pairs = lip1, lip1_inv, int(mask.sum())
    if lip1 is None or lip1_inv is None:
        res.status, res.detail = "inconclusive", "no sample pair at distance >= 1"
        return res
    cb_s, cb_t = _chain_bound(Ns, K), _chain_bound(Nt, K)
    if not (np.isfinite(cb_s[mask]).all() and np.isfinite(cb_t[mask_inv]).all()):
        res.status, res.detail = "inconclusive", "sample too sparse for chains of step <= 1/2"
        return res
    worst = max(float((cb_s[mask] / Ns[mask]).max()), float((cb_t[mask_inv] / Nt[mask_inv]).max()))
    res.chain_slack = max(0.0, worst - res.bound)
    limit = res.bound + res.chain_slack + TAU
    if lip1 > limit or lip1_inv > limit:
        res.status = "failed"
        res.detail = f"Lip_1 = {lip1}, {lip1_inv} exceeds {limit}"
    return res
