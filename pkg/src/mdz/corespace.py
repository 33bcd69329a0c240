"""Finite metric spaces, relations between them, and metric-building utilities."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

TAU = 1e-9  # the single absolute tolerance used for every distance comparison


class MdzError(Exception):
    pass


class StructuralError(MdzError, ValueError):
    pass


class MetricValueError(MdzError, ValueError):
    pass


class DomainError(MdzError, ValueError):
    pass


class PreconditionError(MdzError, ValueError):
    pass


class ResourceError(MdzError, RuntimeError):
    pass


@dataclass(frozen=True)
class ClassBounds:
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is not None and self.lower <= 0:
            raise DomainError("lower bound must be positive")
        if self.upper is not None and self.upper <= 0:
            raise DomainError("upper bound must be positive")
        if self.lower is not None and self.upper is not None and self.lower >= self.upper:
            raise DomainError(f"lower bound {self.lower} must be below upper bound {self.upper}")


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    dist: np.ndarray
    labels: tuple = ()
    bounds: ClassBounds = field(default_factory=ClassBounds)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise StructuralError(f"distance matrix must be square, got shape {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        labels = tuple(self.labels) if len(self.labels) else tuple(range(d.shape[0]))
        if len(labels) != d.shape[0]:
            raise StructuralError("label count does not match matrix size")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self) -> int:
        return self.n

    def sub(self, idx: Sequence[int]) -> "FiniteMetricSpace":
        idx = list(idx)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], tuple(self.labels[i] for i in idx), self.bounds)

    def to_json(self) -> dict:
        return {
            "labels": [_jsonable(l) for l in self.labels],
            "dist": self.dist.tolist(),
            "bounds": {"lower": self.bounds.lower, "upper": self.bounds.upper},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteMetricSpace":
        if "dist" not in obj:
            raise StructuralError("metric JSON needs a 'dist' field")
        b = obj.get("bounds") or {}
        labels = obj.get("labels") or ()
        return cls(np.asarray(obj["dist"], dtype=float), tuple(_unjson(l) for l in labels),
                   ClassBounds(b.get("lower"), b.get("upper")))


def _jsonable(x: Any) -> Any:
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (int, float, str)) or x is None:
        return x
    return str(x)


def _unjson(x: Any) -> Any:
    return tuple(_unjson(v) for v in x) if isinstance(x, list) else x


def load_metric(path: str | Path) -> FiniteMetricSpace:
    return FiniteMetricSpace.from_json(json.loads(Path(path).read_text()))


def save_metric(m: FiniteMetricSpace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(m.to_json()))


@dataclass(frozen=True)
class Correspondence:
    pairs: frozenset

    def __init__(self, pairs: Iterable[tuple[int, int]]):
        object.__setattr__(self, "pairs", frozenset((int(i), int(j)) for i, j in pairs))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        p = sorted(self.pairs)
        return np.array([i for i, _ in p], dtype=int), np.array([j for _, j in p], dtype=int)

    def inverse(self) -> "Correspondence":
        return Correspondence((j, i) for i, j in self.pairs)

    def is_valid(self, na: int, nb: int) -> bool:
        return ({i for i, _ in self.pairs} == set(range(na))
                and {j for _, j in self.pairs} == set(range(nb)))

    @classmethod
    def from_bijection(cls, b: "Bijection") -> "Correspondence":
        return cls((i, int(j)) for i, j in enumerate(b.perm))


@dataclass(frozen=True, eq=False)
class Bijection:
    perm: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=int)
        if p.ndim != 1 or not np.array_equal(np.sort(p), np.arange(len(p))):
            raise StructuralError("perm is not a permutation of 0..n-1")
        p.setflags(write=False)
        object.__setattr__(self, "perm", p)

    @property
    def n(self) -> int:
        return len(self.perm)

    def inverse(self) -> "Bijection":
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(len(self.perm))
        return Bijection(inv)

    @classmethod
    def identity(cls, n: int) -> "Bijection":
        return cls(np.arange(n))


WITNESS_KINDS = ("GH", "LIP", "HL", "BM", "KADETS")


@dataclass(frozen=True, eq=False)
class Witness:
    """A tagged closeness certificate.

    `quality` is the number the payload certifies: half the distortion for GH,
    the log-distortion of the chosen variant for LIP, the closeness constant for
    HL, log ||T|| ||T^-1|| for BM and the constant eps for KADETS.
    """
    kind: str
    payload: Any
    quality: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in WITNESS_KINDS:
            raise DomainError(f"unknown witness kind {self.kind!r}")


@dataclass
class ValidationResult:
    ok: bool
    asymmetric: list = field(default_factory=list)
    diagonal: list = field(default_factory=list)
    nonpositive: list = field(default_factory=list)
    triangle: list = field(default_factory=list)
    bounds: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_metric(m: FiniteMetricSpace | np.ndarray, b: ClassBounds | None = None,
                    tol: float = TAU) -> ValidationResult:
    """Report every metric-axiom and class-bound violation of `m`."""
    d = m.dist if isinstance(m, FiniteMetricSpace) else np.asarray(m, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise StructuralError(f"distance matrix must be square, got shape {d.shape}")
    if np.isnan(d).any():
        raise MetricValueError("distance matrix contains NaN")
    if (d < 0).any():
        raise MetricValueError("distance matrix contains a negative entry")
    if b is None and isinstance(m, FiniteMetricSpace):
        b = m.bounds
    n = d.shape[0]
    res = ValidationResult(ok=True)
    res.asymmetric = [(int(i), int(j)) for i, j in zip(*np.nonzero(np.abs(d - d.T) > tol)) if i < j]
    res.diagonal = [int(i) for i in np.nonzero(np.abs(np.diag(d)) > tol)[0]]
    off = ~np.eye(n, dtype=bool)
    res.nonpositive = [(int(i), int(j)) for i, j in zip(*np.nonzero(off & (d <= 0))) if i < j]
    for j in range(n):
        bad = d > d[:, j:j + 1] + d[j:j + 1, :] + tol
        for i, k in zip(*np.nonzero(bad)):
            res.triangle.append((int(i), j, int(k)))
    if b is not None:
        if b.lower is not None:
            res.bounds += [(int(i), int(j)) for i, j in zip(*np.nonzero(off & (d < b.lower - tol))) if i < j]
        if b.upper is not None:
            res.bounds += [(int(i), int(j)) for i, j in zip(*np.nonzero(d > b.upper + tol)) if i < j]
    res.ok = not (res.asymmetric or res.diagonal or res.nonpositive or res.triangle or res.bounds)
    return res


def sampled_triangle_violations(d: np.ndarray, n_triples: int, rng: np.random.Generator,
                                tol: float = TAU) -> int:
    """Count triangle violations among `n_triples` random index triples."""
    n = d.shape[0]
    i, j, k = rng.integers(0, n, size=(3, n_triples))
    return int(np.count_nonzero(d[i, k] > d[i, j] + d[j, k] + tol))


def hausdorff_distance(ambient: FiniteMetricSpace, A: Iterable[int], B: Iterable[int]) -> float:
    A, B = sorted(set(A)), sorted(set(B))
    if not A or not B:
        raise DomainError("Hausdorff distance needs nonempty subsets")
    block = ambient.dist[np.ix_(A, B)]
    return float(max(block.min(axis=1).max(), block.min(axis=0).max()))


def distortion(ma: FiniteMetricSpace, mb: FiniteMetricSpace,
               r: Correspondence | Bijection) -> float:
    """sup |d(a,a') - e(b,b')| over related pairs (a,b), (a',b')."""
    if isinstance(r, Bijection):
        if r.n != ma.n or r.n != mb.n:
            raise StructuralError("bijection size does not match the spaces")
        ia, ib = np.arange(r.n), r.perm
    else:
        ia, ib = r.arrays()
        if len(ia) == 0:
            raise StructuralError("empty relation")
        if ia.min() < 0 or ia.max() >= ma.n or ib.min() < 0 or ib.max() >= mb.n:
            raise StructuralError("correspondence index out of range")
    return float(np.abs(ma.dist[np.ix_(ia, ia)] - mb.dist[np.ix_(ib, ib)]).max())


def greedy_net(m: FiniteMetricSpace, eps: float) -> list[int]:
    """Maximal eps-separated subset, scanning points in index order."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    net: list[int] = []
    for i in range(m.n):
        if all(m.dist[i, j] >= eps for j in net):
            net.append(i)
    return net


def graph_metric_capped(vertices: Sequence[Any], edges: Iterable[tuple[Any, Any, float]],
                        cap: float) -> FiniteMetricSpace:
    """Shortest-path metric of a weighted graph, truncated at `cap`."""
    if not cap > 0:
        raise DomainError("cap must be positive")
    index = {v: i for i, v in enumerate(vertices)}
    if len(index) != len(vertices):
        raise StructuralError("duplicate vertex labels")
    best: dict[tuple[int, int], float] = {}
    for u, v, w in edges:
        if not w > 0:
            raise DomainError(f"edge ({u!r}, {v!r}) has non-positive weight {w}")
        a, b = index[u], index[v]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        best[key] = min(w, best.get(key, np.inf))
    n = len(vertices)
    if best:
        rows, cols = zip(*best)
        g = coo_matrix((list(best.values()), (rows, cols)), shape=(n, n)).tocsr()
        d = shortest_path(g, method="D", directed=False)
    else:
        d = np.full((n, n), np.inf)
        np.fill_diagonal(d, 0.0)
    d = np.minimum(d, cap)
    return FiniteMetricSpace(d, tuple(vertices), ClassBounds(None, cap))
