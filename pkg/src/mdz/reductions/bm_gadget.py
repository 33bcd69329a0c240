"""Graph gadgets encoding a normed space by a finite metric, and the linear map <-> Lipschitz map transfer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..corespace import (
    TAU, Bijection, DomainError, FiniteMetricSpace, PreconditionError, StructuralError, Witness,
    graph_metric_capped,
)
from ..distances import lip_constants
from ..normed import NormSpec, norm_eval, op_norm, op_norm_polytopal

CAP = 15.0
M_START = 7
DEFAULT_RATIONALS = (Fraction(-1), Fraction(1, 2), Fraction(2))
COVER_LOW, COVER_HIGH = 2.0, 2.25


@dataclass(frozen=True, eq=False)
class BMGadget:
    space: FiniteMetricSpace
    norm: NormSpec
    vectors: np.ndarray
    constants: tuple
    rationals: tuple
    coding: dict
    index: dict = field(repr=False)

    def vec(self, a: int) -> int:
        return self.index[("vec", a)]


def lex_less(u: np.ndarray, v: np.ndarray) -> bool:
    return tuple(u) < tuple(v)


def edge_weight(c: float, nu_ab: float) -> float:
    """K = max{2, min{3, c * nu(a - b)}}."""
    return max(2.0, min(3.0, c * nu_ab))


def choose_constants(values: Sequence[float], step: float = 1.04) -> list[float]:
    """Constants c with every value v covered: c*v in (2, 9/4) for some c.

    Greedy geometric net: the smallest uncovered v gets anchor v*step and
    c = 2.1/anchor, which covers all values in (anchor*2/2.1, anchor*2.25/2.1).
    """
    vals = sorted(v for v in values if v > 0)
    out: list[float] = []
    for v in vals:
        if any(COVER_LOW < c * v < COVER_HIGH for c in out):
            continue
        out.append(2.1 / (v * step))
    return out or [1.0]


def _find(vectors: np.ndarray, x: np.ndarray, scale: float) -> int | None:
    hit = np.nonzero(np.abs(vectors - x).max(axis=1) <= 1e-9 * max(1.0, scale))[0]
    return int(hit[0]) if len(hit) else None


def default_coding(rationals: Sequence[Fraction]) -> dict:
    return {q: i + 2 for i, q in enumerate(sorted(rationals))}


def bm_gadget(nu: NormSpec, vectors, constants: Sequence[float],
              rationals: Sequence = DEFAULT_RATIONALS, coding: dict | None = None,
              require_closure: bool = False) -> BMGadget:
    """The capped graph metric of the gadget built over a finite vector set.

    Scalar and addition gadgets are built for every (a, q) with qa in the set
    and every a <= b with a + b in the set. With require_closure, a missing
    target is a structural error instead of a skipped gadget.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.shape[1] != nu.dim:
        raise StructuralError("vector length does not match the norm")
    k = len(V)
    for i in range(k):
        for j in range(i):
            if np.array_equal(V[i], V[j]):
                raise StructuralError(f"vectors {j} and {i} coincide")
    rationals = tuple(Fraction(q).limit_denominator(10 ** 6) for q in rationals)
    coding = dict(coding) if coding else default_coding(rationals)
    if sorted(coding.values()) != sorted(set(coding.values())) or min(coding.values()) < 2:
        raise DomainError("coding must be injective with values >= 2")
    scale = float(np.abs(V).max())
    missing = []
    vertices: list = [("vec", a) for a in range(k)]
    edges: list = []
    for a in range(k):
        for b in range(k):
            if a != b and not lex_less(V[a], V[b]):
                continue
            nab = norm_eval(nu, V[a] - V[b])
            for t, c in enumerate(constants):
                m = M_START + t
                w = edge_weight(c, nab)
                chain = [("vec", a)] + [("path", a, b, m, s) for s in range(1, m + 1)] + [("vec", b)]
                vertices += chain[1:-1]
                edges += [(u, v, w) for u, v in zip(chain, chain[1:])]
    for a in range(k):
        for q in rationals:
            t = _find(V, float(q) * V[a], scale)
            if t is None:
                missing.append(f"{q}*v{a}")
                continue
            chain = [("scalar", a, q, s) for s in range(1, coding[q] + 1)]
            vertices += chain
            edges.append((("vec", a), chain[0], 7.0))
            edges += [(u, v, 10.0) for u, v in zip(chain, chain[1:])]
            edges.append((chain[-1], ("vec", t), 10.0))
    for a in range(k):
        for b in range(k):
            if a != b and not lex_less(V[a], V[b]):
                continue
            t = _find(V, V[a] + V[b], scale)
            if t is None:
                missing.append(f"v{a}+v{b}")
                continue
            x1, x2, x3 = (("add", a, b, s) for s in (1, 2, 3))
            vertices += [x1, x2, x3]
            edges += [(("vec", a), x1, 5.0), (("vec", b), x2, 5.0), (x1, x3, 5.0), (x2, x3, 5.0),
                      (x3, ("vec", t), 5.0)]
    if require_closure and missing:
        raise StructuralError(f"vector set is not closed; missing {', '.join(missing)}")
    space = graph_metric_capped(vertices, edges, CAP)
    index = {v: i for i, v in enumerate(vertices)}
    return BMGadget(space, nu, V, tuple(constants), rationals, coding, index)


def vec_degree_audit(g: BMGadget) -> tuple[list[int], bool]:
    """Vertices with >= 3 others within distance 3, and whether they are exactly the VEC vertices."""
    D = g.space.dist
    close = (D <= 3 + TAU).sum(axis=1) - 1
    found = [int(i) for i in np.nonzero(close >= 3)[0]]
    expected = sorted(g.vec(a) for a in range(len(g.vectors)))
    return found, found == expected


def _op_norm_exact_or_mesh(T: np.ndarray, a: NormSpec, b: NormSpec) -> tuple[float, float]:
    """(estimate, slack): spectral norm or LP when exact, else mesh estimate with 1e-3 slack."""
    if a.variant == b.variant == "lp" and a.p == b.p == 2:
        return float(np.linalg.norm(T, 2)), 0.0
    if a.variant == b.variant == "polytopal":
        return op_norm_polytopal(T, a, b), 0.0
    return op_norm(T, a, b), 1e-3


def _vector_map(T: np.ndarray, gn: BMGadget, gl: BMGadget) -> np.ndarray:
    scale = float(np.abs(gl.vectors).max())
    S = np.empty(len(gn.vectors), dtype=int)
    for a, v in enumerate(gn.vectors):
        j = _find(gl.vectors, T @ v, scale)
        if j is None:
            raise DomainError(f"T maps vector {a} outside the target vector set")
        S[a] = j
    if len(set(S.tolist())) != len(S) or len(gl.vectors) != len(gn.vectors):
        raise DomainError("T does not map the vector set bijectively")
    return S


def induced_vertex_map(T: np.ndarray, gn: BMGadget, gl: BMGadget) -> Bijection:
    """T' on gadget vertices, re-orienting paths and addition triangles when T flips the order."""
    S = _vector_map(np.asarray(T, dtype=float), gn, gl)
    W = gl.vectors
    perm = np.full(gn.space.n, -1, dtype=int)
    for lab, i in gn.index.items():
        tag = lab[0]
        if tag == "vec":
            img = ("vec", int(S[lab[1]]))
        elif tag == "path":
            _, a, b, m, s = lab
            ta, tb = int(S[a]), int(S[b])
            if ta == tb or lex_less(W[ta], W[tb]):
                img = ("path", ta, tb, m, s)
            else:
                img = ("path", tb, ta, m, m + 1 - s)
        elif tag == "scalar":
            _, a, q, s = lab
            img = ("scalar", int(S[a]), q, s)
        else:
            _, a, b, s = lab
            ta, tb = int(S[a]), int(S[b])
            if ta == tb or lex_less(W[ta], W[tb]):
                img = ("add", ta, tb, s)
            else:
                img = ("add", tb, ta, {1: 2, 2: 1, 3: 3}[s])
        if img not in gl.index:
            raise DomainError(f"no image for gadget vertex {lab}")
        perm[i] = gl.index[img]
    return Bijection(perm)


def bm_gadget_push(T, gn: BMGadget, gl: BMGadget) -> Witness:
    """Lipschitz witness between the gadgets induced by a linear map T."""
    T = np.asarray(T, dtype=float)
    tp = induced_vertex_map(T, gn, gl)
    lip, lip_inv = lip_constants(gn.space, gl.space, tp)
    nT, sl = _op_norm_exact_or_mesh(T, gn.norm, gl.norm)
    nTi, sli = _op_norm_exact_or_mesh(np.linalg.inv(T), gl.norm, gn.norm)
    if lip > max(1.0, nT) + sl + TAU or lip_inv > max(1.0, nTi) + sli + TAU:
        raise AssertionError(f"induced map too expanding: Lip={lip}, Lip^-1={lip_inv}, ||T||={nT}, ||T^-1||={nTi}")
    q = max(math.log(lip), math.log(lip_inv), 0.0)
    return Witness("LIP", tp, q, {"variant": "BBI", "lip": lip, "lip_inv": lip_inv,
                                  "op_norm": nT, "op_norm_inv": nTi})


@dataclass
class ExtractionResult:
    status: str
    S: np.ndarray | None = None
    matrix: np.ndarray | None = None
    bound: float | None = None
    lip: float | None = None
    lip_inv: float | None = None
    failures: list = field(default_factory=list)
    uncovered: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def bm_gadget_pull(tv: Bijection, gn: BMGadget, gl: BMGadget) -> ExtractionResult:
    """Recover the vector map S from a gadget bijection with Lipschitz constants below 4/3.

    VEC vertices are located by the degree criterion, then S is checked for
    homogeneity on scalar gadgets, additivity on addition triangles, and the
    norm ratio on every pair covered by a constant. The certified bound is
    2 log max Lip.
    """
    lip, lip_inv = lip_constants(gn.space, gl.space, tv)
    if not max(lip, lip_inv) < 4 / 3:
        raise PreconditionError(f"pull needs Lipschitz constants below 4/3, got {lip}, {lip_inv}")
    res = ExtractionResult("ok", lip=lip, lip_inv=lip_inv)
    vn, good_n = vec_degree_audit(gn)
    vl, good_l = vec_degree_audit(gl)
    if not (good_n and good_l):
        res.status = "inconclusive"
        res.failures.append("degree criterion does not isolate the vector vertices in this truncation")
        return res
    inv_l = {i: lab for lab, i in gl.index.items()}
    if sorted(int(tv.perm[i]) for i in vn) != vl:
        res.status = "failed"
        res.failures.append("vertex bijection does not map vector vertices onto vector vertices")
        return res
    k = len(gn.vectors)
    S = np.array([inv_l[int(tv.perm[gn.vec(a)])][1] for a in range(k)], dtype=int)
    res.S = S
    W = gl.vectors
    scale = float(np.abs(W).max())
    hom = add = paths = 0
    for lab, i in gn.index.items():
        img = inv_l[int(tv.perm[i])]
        if lab[0] == "scalar" and lab[3] == 1:
            _, a, q, _ = lab
            t = _find(gn.vectors, float(q) * gn.vectors[a], float(np.abs(gn.vectors).max()))
            hom += 1
            if img[0] != "scalar" or img[2] != q:
                res.failures.append(f"scalar chain {lab} mapped to {img}")
            elif np.abs(W[S[t]] - float(q) * W[S[a]]).max() > 1e-9 * max(1.0, scale):
                res.failures.append(f"homogeneity fails for q={q} at vector {a}")
        elif lab[0] == "add" and lab[3] == 3:
            _, a, b, _ = lab
            t = _find(gn.vectors, gn.vectors[a] + gn.vectors[b], float(np.abs(gn.vectors).max()))
            add += 1
            if img[0] != "add":
                res.failures.append(f"addition triangle {lab} mapped to {img}")
            elif np.abs(W[S[t]] - W[S[a]] - W[S[b]]).max() > 1e-9 * max(1.0, scale):
                res.failures.append(f"additivity fails at vectors {a}, {b}")
        elif lab[0] == "path":
            paths += 1
            if img[0] != "path" or img[3] != lab[3]:
                res.failures.append(f"path vertex {lab} mapped to {img}")
    for a in range(k):
        for b in range(a + 1, k):
            nab = norm_eval(gn.norm, gn.vectors[a] - gn.vectors[b])
            lab_ = norm_eval(gl.norm, W[S[a]] - W[S[b]])
            fwd = any(COVER_LOW < c * nab < COVER_HIGH for c in gn.constants)
            bwd = any(COVER_LOW < c * lab_ < COVER_HIGH for c in gl.constants)
            if fwd:
                if lab_ > lip * nab + TAU:
                    res.failures.append(f"ratio check fails for pair {a}, {b}")
            else:
                res.uncovered.append((a, b, "forward"))
            if bwd:
                if nab > lip_inv * lab_ + TAU:
                    res.failures.append(f"inverse ratio check fails for pair {a}, {b}")
            else:
                res.uncovered.append((a, b, "backward"))
    res.checked = {"homogeneity": hom, "additivity": add, "path_vertices": paths,
                   "ratio_pairs": k * (k - 1) // 2 - len(res.uncovered)}
    M, *_ = np.linalg.lstsq(gn.vectors, W[S], rcond=None)
    res.matrix = M.T
    if res.failures:
        res.status = "failed"
        return res
    res.bound = 2 * max(math.log(lip), math.log(lip_inv), 0.0)
    return res
