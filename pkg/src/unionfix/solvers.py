"""Fixed-point iteration drivers with relaxation schedules, control
sequences, selection policies, stopping rules, and trace capture.

Every driver is single-threaded and deterministic: replays with identical
inputs and seeds produce bit-identical traces.  Asymptotic schedule
hypotheses are enforced as finite-horizon surrogates with an explicit
epsilon; violations abort before iterating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from unionfix import minconvex, oracle, sets as sets_mod
from unionfix.core_ops import (
    DEFAULT_TIE_TOL,
    AveragedMap,
    Index,
    UnionMap,
    as_vector,
    compose,
    from_map,
    relax,
)
from unionfix.minconvex import MinConvexFn

DIVERGENCE_FACTOR = 1e8
SCHEDULE_EPS = 1e-3


class ScheduleError(ValueError):
    """Relaxation schedule incompatible with the operator's averagedness."""


@dataclass(frozen=True)
class Schedule:
    """Relaxation sequence with a declared range (lo, hi]."""

    lambda_at: Callable[[int], float]
    lo: float
    hi: float
    description: str = ""

    @staticmethod
    def constant(lam: float, description: str = "") -> "Schedule":
        lam = float(lam)
        return Schedule(lambda n: lam, lo=0.0, hi=lam,
                        description=description or f"constant {lam}")


def validate_schedule(
    schedule: Schedule,
    hi_bound: float,
    horizon: int,
    eps: float = SCHEDULE_EPS,
) -> None:
    """Check the declared range and the finite-horizon surrogate of the
    liminf hypothesis: lambda_n * (hi_bound - lambda_n) >= eps for all n.
    """
    if schedule.hi > hi_bound + 1e-12:
        raise ScheduleError(
            f"schedule range (0, {schedule.hi}] exceeds the admissible "
            f"(0, {hi_bound}] for this operator"
        )
    for n in range(horizon):
        lam = schedule.lambda_at(n)
        if not (schedule.lo < lam <= schedule.hi + 1e-12):
            raise ScheduleError(
                f"lambda_{n} = {lam} outside declared range "
                f"({schedule.lo}, {schedule.hi}]"
            )
        if lam * (hi_bound - lam) < eps:
            raise ScheduleError(
                f"lambda_{n} = {lam} violates the surrogate "
                f"lambda*(={hi_bound} - lambda) >= {eps}"
            )


@dataclass(frozen=True)
class ControlSequence:
    """Deterministic index sequence; index_at is a pure function of the step."""

    index_at: Callable[[int], Index]
    kind: str

    @staticmethod
    def cyclic(keys: Sequence[Index]) -> "ControlSequence":
        keys = list(keys)
        return ControlSequence(lambda n: keys[n % len(keys)], kind="cyclic")

    @staticmethod
    def seeded_random(keys: Sequence[Index], seed: int) -> "ControlSequence":
        """Shuffled permutation blocks: admissible with window 2m - 1."""
        keys = list(keys)
        m = len(keys)
        cache: dict[int, np.ndarray] = {}

        def index_at(n):
            block = n // m
            if block not in cache:
                cache[block] = np.random.default_rng([seed, block]).permutation(m)
            return keys[int(cache[block][n % m])]

        return ControlSequence(index_at, kind="seeded-random-admissible")

    @staticmethod
    def user(fn: Callable[[int], Index]) -> "ControlSequence":
        return ControlSequence(fn, kind="user")


def window_coverage(seq: Sequence[Index], indices: Sequence[Index],
                    window: int) -> bool:
    """True iff every index appears in every length-``window`` slice."""
    required = set(indices)
    if len(seq) < window:
        return required <= set(seq)
    return all(
        required <= set(seq[k:k + window]) for k in range(len(seq) - window + 1)
    )


@dataclass(frozen=True)
class SelectionPolicy:
    """Rule for picking one candidate from a multi-valued evaluation."""

    kind: str = "lowest-index"  # lowest-index | seeded-random | round-robin | user-callback
    seed: int = 0
    callback: Callable | None = None


class _Chooser:
    def __init__(self, policy: SelectionPolicy):
        self.policy = policy
        self.rng = np.random.default_rng(policy.seed)

    def choose(self, n: int, candidates: list[tuple[Index, np.ndarray]]):
        kind = self.policy.kind
        if kind == "lowest-index":
            return candidates[0]
        if kind == "round-robin":
            return candidates[n % len(candidates)]
        if kind == "seeded-random":
            return candidates[int(self.rng.integers(len(candidates)))]
        if kind == "user-callback":
            return self.policy.callback(n, candidates)
        raise ValueError(f"unknown selection policy {kind!r}")


@dataclass(frozen=True)
class StopRule:
    step_tol: float = 1e-10
    max_iters: int = 10_000
    residual_fn: Callable[[np.ndarray], float] | None = None
    residual_tol: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class TraceStep:
    n: int
    x: np.ndarray
    index: Index
    lam: float
    step_norm: float
    extras: dict | None = None


@dataclass
class IterationTrace:
    steps: list[TraceStep]
    status: str  # converged | max-iters | diverged-guard
    x_final: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def iterates(self) -> list[np.ndarray]:
        return [s.x for s in self.steps] + [self.x_final]


def _run_loop(update, x0, stop: StopRule, meta: dict) -> IterationTrace:
    x = as_vector(x0)
    guard = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(x)))
    steps: list[TraceStep] = []
    status = "max-iters"
    for n in range(stop.max_iters):
        x_next, index, lam, extras = update(n, x)
        step_norm = float(np.linalg.norm(x_next - x))
        steps.append(TraceStep(n=n, x=x, index=index, lam=lam,
                               step_norm=step_norm, extras=extras))
        x = x_next
        if float(np.linalg.norm(x)) > guard:
            status = "diverged-guard"
            break
        if stop.residual_fn is not None:
            if stop.residual_fn(x) <= stop.residual_tol:
                status = "converged"
                break
        if step_norm <= stop.step_tol:
            status = "converged"
            break
    return IterationTrace(steps=steps, status=status, x_final=x, meta=meta)


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def km_admissible(
    maps: Sequence[AveragedMap],
    control: ControlSequence,
    schedule: Schedule,
    x0,
    stop: StopRule,
    diag_tol: float = 1e-8,
) -> IterationTrace:
    """Relaxed iteration x+ = (1 - lam) x + lam T_i(x) under admissible
    control.  The schedule must satisfy lam_n <= 1/alpha_{i_n} with the
    liminf surrogate at every step; incompatibility aborts before stepping.
    """
    maps = list(maps)
    realized = [control.index_at(n) for n in range(stop.max_iters)]
    for n, i in enumerate(realized):
        lam = schedule.lambda_at(n)
        bound = 1.0 / maps[i].alpha
        if not (schedule.lo < lam <= bound + 1e-12):
            raise ScheduleError(
                f"lambda_{n} = {lam} exceeds 1/alpha = {bound} of map {i}"
            )
        if lam * (bound - lam) < SCHEDULE_EPS:
            raise ScheduleError(
                f"lambda_{n} = {lam} violates the surrogate at map {i}"
            )

    def update(n, x):
        i = realized[n]
        lam = schedule.lambda_at(n)
        return (1.0 - lam) * x + lam * maps[i](x), i, lam, None

    meta = {"algorithm": "km-admissible", "control": control.kind}
    trace = _run_loop(update, x0, stop, meta)
    if trace.status == "converged":
        window = max(2 * len(maps), 1)
        recent = {s.index for s in trace.steps[-window:]}
        residuals = {
            i: float(np.linalg.norm(trace.x_final - maps[i](trace.x_final)))
            for i in sorted(recent)
        }
        meta["recurrent_fixed_residuals"] = residuals
        meta["fixed_by_recurrent"] = all(r <= diag_tol for r in residuals.values())
    return trace


def iterate_union(
    T: UnionMap,
    schedule: Schedule,
    policy: SelectionPolicy,
    x0,
    stop: StopRule,
) -> IterationTrace:
    """Relaxed union-map iteration x+ in (1 - lam) x + lam T(x)."""
    validate_schedule(schedule, 1.0 / T.alpha, stop.max_iters)
    chooser = _Chooser(policy)

    def update(n, x):
        candidates = T.evaluate(x)
        i, v = chooser.choose(n, candidates)
        lam = schedule.lambda_at(n)
        return (1.0 - lam) * x + lam * v, i, lam, None

    meta = {"algorithm": "iterate-union", "operator": T.label}
    trace = _run_loop(update, x0, stop, meta)
    if trace.status == "converged":
        meta["classification"] = oracle.verify_fixed_classification(T, trace.x_final)
    return trace


def cyclic_compose(
    maps: Sequence[UnionMap],
    x0,
    policy: SelectionPolicy = SelectionPolicy(),
    stop: StopRule = StopRule(),
    classify_limit: bool = True,
) -> IterationTrace:
    """x+ in T_{n mod m}(x); records the subsampled sequence x_{mn} and
    classifies the limit against the composition applied maps[0] first.
    """
    maps = list(maps)
    m = len(maps)
    chooser = _Chooser(policy)

    def update(n, x):
        T = maps[n % m]
        i, v = chooser.choose(n, T.evaluate(x))
        return v, (n % m, i), 1.0, None

    meta = {"algorithm": "cyclic-compose", "cycle_length": m}
    trace = _run_loop(update, x0, stop, meta)
    meta["subsampled"] = [s.x for s in trace.steps if s.n % m == 0]
    if trace.status == "converged" and classify_limit:
        composite = compose(maps)
        meta["classification"] = oracle.verify_fixed_classification(
            composite, trace.x_final
        )
    return trace


def cyclic_projections(
    set_list: Sequence[sets_mod.UnionConvexSet],
    x0,
    stop: StopRule = StopRule(),
    policy: SelectionPolicy = SelectionPolicy(),
    tie_tol: float = DEFAULT_TIE_TOL,
    membership_tol: float = 1e-8,
) -> IterationTrace:
    """Method of cyclic projections over union-convex sets."""
    set_list = list(set_list)
    if len(set_list) < 2:
        raise ValueError("cyclic projections needs at least 2 sets")
    projectors = [sets_mod.project_union(s, tie_tol) for s in set_list]
    trace = cyclic_compose(projectors, x0, policy=policy, stop=stop)
    trace.meta["algorithm"] = "cyclic-projections"
    distances = [s.distance(trace.x_final) for s in set_list]
    trace.meta["set_distances"] = distances
    trace.meta["in_intersection"] = all(d <= membership_tol for d in distances)
    return trace


def cyclic_dr(
    set_list: Sequence[sets_mod.UnionConvexSet],
    x0,
    stop: StopRule = StopRule(),
    policy: SelectionPolicy = SelectionPolicy(),
    tie_tol: float = DEFAULT_TIE_TOL,
) -> IterationTrace:
    """Cyclic Douglas-Rachford: the composite of the two-set operators
    T_{C1,C2}, T_{C2,C3}, ..., T_{Cm,C1} applied in that order with
    lambda = 1.  The limit is classified against the composite only; no
    shadow point is emitted (shadow recovery is unresolved for m >= 3).
    """
    set_list = list(set_list)
    if len(set_list) < 2:
        raise ValueError("cyclic DR needs at least 2 sets")
    m = len(set_list)
    ops = [
        sets_mod.dr_operator(set_list[j], set_list[(j + 1) % m], tie_tol)
        for j in range(m)
    ]
    composite = compose(ops)
    schedule = Schedule.constant(1.0)
    trace = iterate_union(composite, schedule, policy, x0, stop)
    trace.meta["algorithm"] = "cyclic-dr"
    return trace


def cadr(
    set_list: Sequence[sets_mod.UnionConvexSet],
    x0,
    stop: StopRule = StopRule(),
    policy: SelectionPolicy = SelectionPolicy(),
    tie_tol: float = DEFAULT_TIE_TOL,
    membership_tol: float = 1e-8,
) -> IterationTrace:
    """Cyclically anchored Douglas-Rachford; set_list[0] is the anchor.

    x+ in T_{C1, C_{i_n}}(x) with i_n cycling through the non-anchor sets.
    When the anchor is a single convex piece, the shadow point P_{C1}(xbar)
    is emitted with its membership residuals in every set.
    """
    set_list = list(set_list)
    if len(set_list) < 2:
        raise ValueError("anchored DR needs at least 2 sets")
    anchor = set_list[0]
    ops = [sets_mod.dr_operator(anchor, s, tie_tol) for s in set_list[1:]]
    m = len(ops)
    chooser = _Chooser(policy)

    def update(n, x):
        T = ops[n % m]
        i, v = chooser.choose(n, T.evaluate(x))
        return v, (n % m, i), 1.0, None

    meta = {"algorithm": "cadr", "cycle_length": m}
    trace = _run_loop(update, x0, stop, meta)
    if trace.status == "converged":
        composite = compose(ops)
        meta["classification"] = oracle.verify_fixed_classification(
            composite, trace.x_final
        )
        if len(anchor.pieces) == 1:
            (piece,) = anchor.pieces.values()
            shadow = piece.project(trace.x_final)
            meta["shadow"] = shadow
            meta["shadow_distances"] = [s.distance(shadow) for s in set_list]
            meta["shadow_feasible"] = all(
                d <= membership_tol for d in meta["shadow_distances"]
            )
    return trace


def ppa(
    f: MinConvexFn,
    gamma: float,
    policy: SelectionPolicy,
    x0,
    stop: StopRule,
    tie_tol: float = DEFAULT_TIE_TOL,
    local_min_tol: float = 1e-8,
) -> IterationTrace:
    """Proximal point algorithm x+ in prox_{gamma f}(x)."""
    T = minconvex.prox_union(f, gamma, tie_tol)
    trace = iterate_union(T, Schedule.constant(1.0), policy, x0, stop)
    trace.meta["algorithm"] = "ppa"
    trace.meta["gamma"] = gamma
    if trace.status == "converged":
        fx = minconvex.value(f, trace.x_final)
        trace.meta["local_min"] = (
            math.isfinite(fx)
            and minconvex.is_local_min(f, trace.x_final, tol=local_min_tol)
        )
    return trace


@dataclass(frozen=True)
class SmoothFn:
    """Convex smooth term: value, gradient, and a Lipschitz constant of
    the gradient."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    label: str = "smooth"


def fb_operator(
    fsmooth: SmoothFn, g: MinConvexFn, gamma: float,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> UnionMap:
    """Forward-backward operator prox_{gamma g} o (Id - gamma grad f),
    built by composition so its averagedness constant is 2/(4 - gamma L).
    """
    L = float(fsmooth.lipschitz)
    _check_fb_gamma(gamma, L)
    prox = minconvex.prox_union(g, gamma, tie_tol)
    if L == 0.0:
        return prox
    step = AveragedMap(
        lambda x: x - gamma * as_vector(fsmooth.grad(x)),
        alpha=gamma * L / 2.0,
        label=f"grad-step[{fsmooth.label}]",
    )
    return compose([from_map(step), prox], label="fb")


def _check_fb_gamma(gamma: float, L: float) -> None:
    if L < 0:
        raise ValueError("Lipschitz constant must be nonnegative")
    if L == 0.0:
        if gamma <= 0:
            raise ValueError("gamma must be positive")
    elif not (0.0 < gamma < 2.0 / L):
        raise ValueError(
            f"gamma must lie in (0, 2/L) = (0, {2.0 / L}), got {gamma}"
        )


def fb_local_min(
    fsmooth: SmoothFn, g: MinConvexFn, x, gamma: float, tol: float = 1e-8
) -> bool:
    """Local-minimum test for f + g at x: every value-active piece of g
    must satisfy the piecewise forward-backward fixed-point equation.
    """
    x = as_vector(x)
    gx = minconvex.value(g, x)
    if not math.isfinite(gx):
        raise ValueError("fb_local_min requires g(x) finite")
    y = x - gamma * as_vector(fsmooth.grad(x))
    for p in g.pieces:
        if float(p.value(x)) <= gx + tol:
            if np.linalg.norm(as_vector(p.prox(gamma, y)) - x) > tol:
                return False
    return True


def forward_backward(
    fsmooth: SmoothFn,
    g: MinConvexFn,
    gamma: float,
    schedule: Schedule,
    policy: SelectionPolicy,
    x0,
    stop: StopRule,
    tie_tol: float = DEFAULT_TIE_TOL,
    local_min_tol: float = 1e-8,
) -> IterationTrace:
    """Relaxed forward-backward splitting for min f + g with g min-convex.

    gamma must lie in (0, 2/L); the schedule range must respect
    (0, (4 - gamma L)/2] with the liminf surrogate.
    """
    T = fb_operator(fsmooth, g, gamma, tie_tol)
    trace = iterate_union(T, schedule, policy, x0, stop)
    trace.meta["algorithm"] = "forward-backward"
    trace.meta["gamma"] = gamma
    cls = trace.meta.get("classification")
    if cls is not None and cls.kind == "strong-fixed":
        trace.meta["local_min"] = fb_local_min(
            fsmooth, g, trace.x_final, gamma, tol=local_min_tol
        )
    return trace


def drs_operator(
    f: MinConvexFn, g: MinConvexFn, gamma: float,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> UnionMap:
    """Douglas-Rachford splitting operator
    (Id + (2 prox_{gamma g} - Id) o (2 prox_{gamma f} - Id)) / 2,
    union 1/2-averaged nonexpansive.
    """
    rf = relax(minconvex.prox_union(f, gamma, tie_tol), 2.0)
    rg = relax(minconvex.prox_union(g, gamma, tie_tol), 2.0)
    return relax(compose([rf, rg]), 0.5, label="drs")


def drs_shadow_local_min(
    f: MinConvexFn, g: MinConvexFn, gamma: float, xbar,
    tol: float = 1e-8,
) -> bool:
    """Local-minimum test for f + g at the shadow y = prox_{gamma f}(xbar)
    of a Douglas-Rachford limit, with f a single convex piece: every
    value-active piece of g must satisfy y = prox_{gamma g_i}(2y - xbar).
    """
    if len(f.pieces) != 1:
        raise ValueError("shadow test requires a single-piece f")
    xbar = as_vector(xbar)
    y = as_vector(f.pieces[0].prox(gamma, xbar))
    gy = minconvex.value(g, y)
    if not math.isfinite(gy):
        raise ValueError("shadow test requires g(y) finite")
    for p in g.pieces:
        if float(p.value(y)) <= gy + tol:
            if np.linalg.norm(as_vector(p.prox(gamma, 2.0 * y - xbar)) - y) > tol:
                return False
    return True


def douglas_rachford(
    f: MinConvexFn,
    g: MinConvexFn,
    gamma: float,
    schedule: Schedule,
    policy: SelectionPolicy,
    x0,
    stop: StopRule,
    tie_tol: float = DEFAULT_TIE_TOL,
    local_min_tol: float = 1e-8,
) -> IterationTrace:
    """Douglas-Rachford splitting x+ = x + lam (z - y) with
    y in prox_{gamma f}(x), z in prox_{gamma g}(2y - x), lam in (0, 2].

    Each step records (y, z).  When f has a single convex piece, the
    shadow ybar = prox_{gamma f}(xbar) is emitted on convergence with its
    local-minimum check.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    validate_schedule(schedule, 2.0, stop.max_iters)
    prox_f = minconvex.prox_union(f, gamma, tie_tol)
    prox_g = minconvex.prox_union(g, gamma, tie_tol)
    chooser = _Chooser(policy)

    def update(n, x):
        candidates = []
        for i in prox_f.selector(x):
            y = prox_f.pieces[i](x)
            for j in prox_g.selector(2.0 * y - x):
                z = prox_g.pieces[j](2.0 * y - x)
                candidates.append(((i, j), (y, z)))
        (i, j), (y, z) = chooser.choose(n, candidates)
        lam = schedule.lambda_at(n)
        return x + lam * (z - y), (i, j), lam, {"y": y, "z": z}

    meta = {"algorithm": "douglas-rachford", "gamma": gamma}
    trace = _run_loop(update, x0, stop, meta)
    if trace.status == "converged":
        T = drs_operator(f, g, gamma, tie_tol)
        meta["classification"] = oracle.verify_fixed_classification(T, trace.x_final)
        if len(f.pieces) == 1:
            shadow = as_vector(f.pieces[0].prox(gamma, trace.x_final))
            meta["shadow"] = shadow
            meta["shadow_local_min"] = drs_shadow_local_min(
                f, g, gamma, trace.x_final, tol=local_min_tol
            )
    return trace
