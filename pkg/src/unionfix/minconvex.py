"""Min-convex functions: values, Moreau envelopes, set-valued prox, and
fixed-point / local-minimum classification.

A min-convex function is the pointwise minimum of finitely many proper,
lower semicontinuous convex pieces.  Each piece supplies its value and a
closed-form prox; lower semicontinuity of pieces is assumed, not verified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from unionfix import projections
from unionfix.core_ops import (
    DEFAULT_TIE_TOL,
    AveragedMap,
    UnionMap,
    as_vector,
)

INFINITY = math.inf

#: prox probe used by local-minimum tests; any gamma > 0 gives the same
#: answer for convex pieces, so the choice is immaterial.
PROBE_GAMMA = 1.0


@dataclass(frozen=True)
class ConvexPiece:
    """A proper lsc convex function with value and single-valued prox.

    ``value`` may return +inf outside the domain.  ``prox`` takes
    (gamma, x) and must be the exact minimizer of
    y -> value(y) + ||x - y||^2 / (2 gamma).
    """

    value: Callable[[np.ndarray], float]
    prox: Callable[[float, np.ndarray], np.ndarray]
    label: str = ""


class MinConvexFn:
    """Pointwise minimum of a finite list of convex pieces."""

    def __init__(self, pieces: Sequence[ConvexPiece], label: str = ""):
        if not pieces:
            raise ValueError("a min-convex function needs at least one piece")
        self.pieces = list(pieces)
        self.label = label

    def __len__(self) -> int:
        return len(self.pieces)


def value(f: MinConvexFn, x) -> float:
    """f(x) = min over piece values; +inf only if every piece is +inf."""
    x = as_vector(x)
    return min(float(p.value(x)) for p in f.pieces)


def piece_envelope(piece: ConvexPiece, gamma: float, x) -> float:
    """Moreau envelope of one piece, evaluated through its prox."""
    x = as_vector(x)
    p = as_vector(piece.prox(gamma, x))
    return float(piece.value(p)) + float(np.dot(x - p, x - p)) / (2.0 * gamma)


def envelope(f: MinConvexFn, gamma: float, x) -> float:
    """Moreau envelope of f: the minimum of the piece envelopes."""
    _check_gamma(gamma)
    return min(piece_envelope(p, gamma, x) for p in f.pieces)


def active_selector(
    f: MinConvexFn, gamma: float, x, tie_tol: float = DEFAULT_TIE_TOL
) -> list[int]:
    """Indices whose piece envelope attains the envelope, within tie_tol.

    A positive tie_tol can only enlarge the index set, which preserves
    outer semicontinuity of the selector numerically.
    """
    _check_gamma(gamma)
    if tie_tol < 0:
        raise ValueError("tie_tol must be nonnegative")
    envs = [piece_envelope(p, gamma, x) for p in f.pieces]
    best = min(envs)
    return [i for i, e in enumerate(envs) if e <= best + tie_tol]


def prox_union(
    f: MinConvexFn, gamma: float, tie_tol: float = DEFAULT_TIE_TOL
) -> UnionMap:
    """Set-valued prox of f as a union 1/2-averaged nonexpansive map."""
    _check_gamma(gamma)
    pieces = {
        i: AveragedMap(
            lambda x, p=p: as_vector(p.prox(gamma, x)), alpha=0.5, label=p.label
        )
        for i, p in enumerate(f.pieces)
    }
    return UnionMap(
        pieces,
        lambda x: active_selector(f, gamma, x, tie_tol),
        alpha=0.5,
        label=f"prox[{f.label}]",
    )


@dataclass
class PointClassification:
    kind: str  # "not-fixed" | "fixed" | "strong-fixed"
    active: list[int]
    residuals: dict[int, float]
    envelope_gap: float | None  # envelope(x) - f(x) when f(x) finite

    @property
    def is_fixed(self) -> bool:
        return self.kind in ("fixed", "strong-fixed")


def classify_point(
    f: MinConvexFn, gamma: float, x, tol: float = 1e-9,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> PointClassification:
    """Classify x against the prox of f.

    strong-fixed: every active piece prox returns x; fixed: some does;
    not-fixed otherwise.  When f(x) is finite the envelope gap
    envelope(x) - f(x) is reported (zero exactly at fixed points).
    """
    x = as_vector(x)
    active = active_selector(f, gamma, x, tie_tol)
    residuals = {
        i: float(np.linalg.norm(as_vector(f.pieces[i].prox(gamma, x)) - x))
        for i in active
    }
    fixed = any(r <= tol for r in residuals.values())
    strong = all(r <= tol for r in residuals.values())
    kind = "strong-fixed" if (fixed and strong) else "fixed" if fixed else "not-fixed"
    fx = value(f, x)
    gap = envelope(f, gamma, x) - fx if math.isfinite(fx) else None
    return PointClassification(kind=kind, active=active, residuals=residuals,
                               envelope_gap=gap)


def is_local_min(f: MinConvexFn, x, tol: float = 1e-9) -> bool:
    """True iff x minimizes every piece whose value ties with f(x).

    Each piece check uses a prox probe at PROBE_GAMMA; for convex pieces
    the answer does not depend on the probe value.
    """
    x = as_vector(x)
    fx = value(f, x)
    if not math.isfinite(fx):
        raise ValueError("is_local_min requires f(x) finite")
    for p in f.pieces:
        if float(p.value(x)) <= fx + tol:
            if np.linalg.norm(as_vector(p.prox(PROBE_GAMMA, x)) - x) > tol:
                return False
    return True


@dataclass
class OscReport:
    passed: bool
    samples_checked: int
    violations: list = field(default_factory=list)


def osc_probe(
    f: MinConvexFn, x, radius: float, samples: int, seed: int = 0,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> OscReport:
    """Sample the value selector {i : f_i = f} near x and test that it only
    shrinks relative to the selector at x.  Samples with f = +inf are
    skipped (the value selector is only meaningful where f is finite).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = as_vector(x)
    base = _value_selector(f, x, tie_tol)
    rng = np.random.default_rng(seed)
    checked = 0
    violations = []
    for _ in range(samples):
        direction = rng.standard_normal(x.size)
        nrm = np.linalg.norm(direction)
        if nrm == 0.0:
            continue
        r = radius * rng.random() ** (1.0 / x.size)
        xp = x + (r / nrm) * direction
        if not math.isfinite(value(f, xp)):
            continue
        checked += 1
        sel = _value_selector(f, xp, tie_tol)
        if not sel <= base:
            violations.append((xp, sorted(sel - base)))
    return OscReport(passed=not violations, samples_checked=checked,
                     violations=violations)


def _value_selector(f: MinConvexFn, x, tie_tol: float) -> set[int]:
    fx = value(f, x)
    return {i for i, p in enumerate(f.pieces) if float(p.value(x)) <= fx + tie_tol}


def _check_gamma(gamma: float) -> None:
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")


# ---------------------------------------------------------------------------
# Piece catalog
# ---------------------------------------------------------------------------

def quadratic(Q, b, c: float = 0.0, label: str = "quadratic") -> ConvexPiece:
    """Convex quadratic x -> x'Qx/2 + b'x + c, Q symmetric PSD (dense).

    The constant c does not change the prox but does shift value and
    envelope comparisons between pieces.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    b = as_vector(b)
    c = float(c)
    n = b.size

    def val(x):
        return 0.5 * float(x @ Q @ x) + float(b @ x) + c

    def prox(gamma, x):
        return np.linalg.solve(np.eye(n) + gamma * Q, x - gamma * b)

    return ConvexPiece(value=val, prox=prox, label=label)


def scaled_l1(weight: float, label: str = "l1") -> ConvexPiece:
    """weight * ||x||_1 with soft-thresholding prox."""
    w = float(weight)
    if w < 0:
        raise ValueError("weight must be nonnegative")
    return ConvexPiece(
        value=lambda x: w * float(np.sum(np.abs(x))),
        prox=lambda gamma, x: np.sign(x) * np.maximum(np.abs(x) - gamma * w, 0.0),
        label=label,
    )


def scaled_l2(weight: float, label: str = "l2") -> ConvexPiece:
    """weight * ||x||_2 with block soft-thresholding prox."""
    w = float(weight)
    if w < 0:
        raise ValueError("weight must be nonnegative")

    def prox(gamma, x):
        nrm = np.linalg.norm(x)
        if nrm <= gamma * w:
            return np.zeros_like(x)
        return (1.0 - gamma * w / nrm) * x

    return ConvexPiece(
        value=lambda x: w * float(np.linalg.norm(x)), prox=prox, label=label
    )


def indicator(
    project: Callable[[np.ndarray], np.ndarray],
    label: str = "indicator",
    membership_tol: float = 1e-9,
) -> ConvexPiece:
    """Indicator of a closed convex set given by its projection."""

    def val(x):
        p = as_vector(project(x))
        return 0.0 if np.linalg.norm(x - p) <= membership_tol else INFINITY

    return ConvexPiece(value=val, prox=lambda gamma, x: project(x), label=label)


def indicator_singleton(point, label: str = "") -> ConvexPiece:
    c = as_vector(point)
    return indicator(lambda x: np.array(c), label=label or f"ind{tuple(c)}")


def indicator_box(lo, hi, label: str = "ind-box") -> ConvexPiece:
    lo, hi = as_vector(lo), as_vector(hi)
    return indicator(lambda x: projections.project_box(lo, hi, x), label=label)


def indicator_ball(center, radius: float, label: str = "ind-ball") -> ConvexPiece:
    center = as_vector(center)
    radius = float(radius)
    return indicator(
        lambda x: projections.project_ball(center, radius, x), label=label
    )


def indicator_halfspace(a, beta: float, label: str = "ind-halfspace") -> ConvexPiece:
    a = as_vector(a)
    return indicator(
        lambda x: projections.project_halfspace(a, float(beta), x), label=label
    )


def indicator_affine(A, b, label: str = "ind-affine") -> ConvexPiece:
    witness, basis = projections.affine_solution_parts(A, b)
    return indicator(
        lambda x: projections.project_span(basis, x, offset=witness), label=label
    )
