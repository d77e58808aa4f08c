"""Operator algebra: averaged maps, union maps, and their combinators.

A union map evaluates to a finite set of candidate points, one per index
chosen by an active selector.  Combinators keep track of the averagedness
constant: alpha in (0, 1) means alpha-averaged nonexpansive, and the
sentinel alpha = 1 means nonexpansive but not (known to be) averaged.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

Index = Hashable

DEFAULT_TIE_TOL = 1e-10


class DimensionMismatchError(ValueError):
    """Vector dimension does not match the operator's dimension."""


class EmptySelectionError(RuntimeError):
    """An active selector returned no indices (contract violation)."""


def as_vector(x) -> np.ndarray:
    """Validate and convert to a finite 1-D float array."""
    v = np.array(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return float(alpha)


@dataclass(frozen=True)
class AveragedMap:
    """Single-valued operator with an averagedness constant.

    ``alpha`` in (0, 1) asserts the strengthened contraction inequality;
    ``alpha = 1`` asserts plain nonexpansiveness only.  Evaluation must be
    a pure function of the input.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    alpha: float
    label: str = ""

    def __post_init__(self):
        _check_alpha(self.alpha)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(x), dtype=float)


def identity_map(label: str = "id") -> AveragedMap:
    return AveragedMap(lambda x: x, alpha=1.0, label=label)


class UnionMap:
    """Finite family of averaged maps plus an active selector.

    ``pieces`` maps an index to an :class:`AveragedMap`; ``selector`` maps a
    point to a nonempty subset of those indices.  Instances are immutable
    after construction and safe to evaluate concurrently.
    """

    def __init__(
        self,
        pieces: Mapping[Index, AveragedMap],
        selector: Callable[[np.ndarray], Iterable[Index]],
        alpha: float,
        dim: int | None = None,
        label: str = "",
    ):
        if not pieces:
            raise ValueError("a union map needs at least one piece")
        self._pieces = dict(pieces)
        self._selector = selector
        self.alpha = _check_alpha(alpha)
        self.dim = dim
        self.label = label

    @property
    def pieces(self) -> dict[Index, AveragedMap]:
        return self._pieces

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = as_vector(x)
        if self.dim is not None and x.size != self.dim:
            raise DimensionMismatchError(
                f"operator {self.label!r} expects dimension {self.dim}, got {x.size}"
            )
        return x

    def selector(self, x) -> list[Index]:
        """Active indices at x, in deterministic evaluation order."""
        x = self._check_dim(x)
        indices = list(self._selector(x))
        if not indices:
            raise EmptySelectionError(
                f"selector of {self.label!r} returned no indices at {x}"
            )
        unknown = [i for i in indices if i not in self._pieces]
        if unknown:
            raise KeyError(f"selector returned unknown indices {unknown}")
        return indices

    def piece_value(self, index: Index, x) -> np.ndarray:
        """Evaluate one piece at x, regardless of the selector."""
        return self._pieces[index](self._check_dim(x))

    def evaluate(self, x) -> list[tuple[Index, np.ndarray]]:
        """Full (index, point) list; repeated calls are bit-identical."""
        x = self._check_dim(x)
        return [(i, self._pieces[i](x)) for i in self.selector(x)]

    def evaluate_points(self, x, dedup_tol: float = 1e-12) -> list[np.ndarray]:
        """Evaluation as a set of points, deduplicated within dedup_tol."""
        points: list[np.ndarray] = []
        for _, v in self.evaluate(x):
            if all(np.linalg.norm(v - p) > dedup_tol for p in points):
                points.append(v)
        return points


def from_map(m: AveragedMap, dim: int | None = None) -> UnionMap:
    """Wrap a single-valued map as a one-piece union map."""
    return UnionMap({0: m}, lambda x: (0,), alpha=m.alpha, dim=dim, label=m.label)


def _merge_dim(maps: Sequence[UnionMap]) -> int | None:
    dims = {m.dim for m in maps if m.dim is not None}
    if len(dims) > 1:
        raise DimensionMismatchError(f"mixed operator dimensions {sorted(dims)}")
    return dims.pop() if dims else None


def union_of(maps: Sequence[UnionMap], label: str = "") -> UnionMap:
    """Pointwise union; alpha is the maximum of the inputs' alphas."""
    maps = list(maps)
    if not maps:
        raise ValueError("union_of needs at least one map")
    dim = _merge_dim(maps)
    pieces = {
        (j, i): piece
        for j, um in enumerate(maps)
        for i, piece in um.pieces.items()
    }

    def selector(x):
        return [(j, i) for j, um in enumerate(maps) for i in um.selector(x)]

    alpha = max(m.alpha for m in maps)
    return UnionMap(pieces, selector, alpha=alpha, dim=dim, label=label or "union")


def combination_alpha(alphas: Sequence[float], weights: Sequence[float]) -> float:
    """Averagedness constant of a convex combination; 1 if any input is 1."""
    if any(a >= 1.0 for a in alphas):
        return 1.0
    return float(sum(w * a for w, a in zip(weights, alphas)))


def composition_alpha(alphas: Sequence[float]) -> float:
    """Averagedness constant of a composition; 1 if any input is 1."""
    if any(a >= 1.0 for a in alphas):
        return 1.0
    s = sum(a / (1.0 - a) for a in alphas)
    if s == 0.0:
        return 0.0  # unreachable for alphas in (0,1); kept for safety
    return 1.0 / (1.0 + 1.0 / s)


def convex_combination(
    maps: Sequence[UnionMap], weights: Sequence[float], label: str = ""
) -> UnionMap:
    """Minkowski-sum combination sum_j w_j T_j with w_j > 0, sum w_j = 1."""
    maps = list(maps)
    weights = [float(w) for w in weights]
    if len(maps) != len(weights) or not maps:
        raise ValueError("maps and weights must be nonempty and equal length")
    if any(w <= 0 for w in weights):
        raise ValueError(f"weights must be strictly positive, got {weights}")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got sum {sum(weights)!r}")
    dim = _merge_dim(maps)
    alpha = combination_alpha([m.alpha for m in maps], weights)

    def make_piece(keys):
        parts = [m.pieces[k] for m, k in zip(maps, keys)]

        def fn(x, parts=parts):
            return sum(w * p(x) for w, p in zip(weights, parts))

        return AveragedMap(fn, alpha=alpha)

    key_sets = [list(m.pieces) for m in maps]
    pieces = {keys: make_piece(keys) for keys in itertools.product(*key_sets)}

    def selector(x):
        actives = [m.selector(x) for m in maps]
        return list(itertools.product(*actives))

    return UnionMap(pieces, selector, alpha=alpha, dim=dim, label=label or "comb")


def compose(maps: Sequence[UnionMap], label: str = "") -> UnionMap:
    """Composition applying maps[0] first, then maps[1], and so on.

    The composite selector is realized lazily: index tuples are enumerated
    by chaining through intermediate evaluations, never as a function of a
    precomputed selector table.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("compose needs at least one map")
    dim = _merge_dim(maps)
    alpha = composition_alpha([m.alpha for m in maps])

    def make_piece(keys):
        parts = [m.pieces[k] for m, k in zip(maps, keys)]

        def fn(x, parts=parts):
            for p in parts:
                x = p(x)
            return x

        return AveragedMap(fn, alpha=alpha)

    key_sets = [list(m.pieces) for m in maps]
    pieces = {keys: make_piece(keys) for keys in itertools.product(*key_sets)}

    def selector(x):
        out: list[tuple] = []

        def chain(k, v, prefix):
            if k == len(maps):
                out.append(prefix)
                return
            for i in maps[k].selector(v):
                chain(k + 1, maps[k].pieces[i](v), prefix + (i,))

        chain(0, as_vector(x), ())
        return out

    return UnionMap(pieces, selector, alpha=alpha, dim=dim, label=label or "compose")


def relax(T: UnionMap, lam: float, label: str = "") -> UnionMap:
    """Relaxation (1 - lam) Id + lam T, for lam in (0, 1/alpha(T)]."""
    lam = float(lam)
    if not (0.0 < lam <= 1.0 / T.alpha + 1e-12):
        raise ValueError(
            f"lambda must lie in (0, {1.0 / T.alpha}] for alpha {T.alpha}, got {lam}"
        )
    alpha = min(1.0, lam * T.alpha)

    def make_piece(p):
        return AveragedMap(
            lambda x, p=p: (1.0 - lam) * x + lam * p(x),
            alpha=min(1.0, lam * p.alpha),
            label=p.label,
        )

    pieces = {i: make_piece(p) for i, p in T.pieces.items()}
    return UnionMap(
        pieces, T.selector, alpha=alpha, dim=T.dim, label=label or f"relax({T.label})"
    )


@dataclass
class AveragednessReport:
    """Worst-case violation of the averagedness inequality over samples."""

    alpha: float
    max_violation: float
    worst_piece: Index | None
    worst_pair: tuple[np.ndarray, np.ndarray] | None
    pairs_checked: int
    per_piece: dict = field(default_factory=dict)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.max_violation <= tol


def averagedness_violation(
    piece: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    x: np.ndarray,
    y: np.ndarray,
) -> float:
    """Signed violation of the alpha-averagedness inequality for one pair.

    Uses the same piece at x and y.  Nonpositive means the inequality holds.
    """
    tx, ty = piece(x), piece(y)
    d2 = float(np.dot(x - y, x - y))
    t2 = float(np.dot(tx - ty, tx - ty))
    if alpha >= 1.0:
        return math.sqrt(t2) - math.sqrt(d2)
    r = (x - tx) - (y - ty)
    return t2 + (1.0 - alpha) / alpha * float(np.dot(r, r)) - d2


def check_averaged(
    T: UnionMap,
    alpha: float,
    pairs: Iterable[tuple[np.ndarray, np.ndarray]],
) -> AveragednessReport:
    """Sample the averagedness inequality piecewise over (x, y) pairs."""
    report = AveragednessReport(
        alpha=alpha, max_violation=-math.inf, worst_piece=None,
        worst_pair=None, pairs_checked=0,
    )
    per_piece: dict[Index, float] = {i: -math.inf for i in T.pieces}
    for x, y in pairs:
        x, y = as_vector(x), as_vector(y)
        report.pairs_checked += 1
        for i, piece in T.pieces.items():
            v = averagedness_violation(piece, alpha, x, y)
            if v > per_piece[i]:
                per_piece[i] = v
            if v > report.max_violation:
                report.max_violation = v
                report.worst_piece = i
                report.worst_pair = (x, y)
    report.per_piece = per_piece
    return report
