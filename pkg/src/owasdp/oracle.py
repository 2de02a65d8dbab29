"""Ground-truth optimizers for desk-scale verification.

Independent of the relaxation pipeline: these routines minimize an objective
directly over a semialgebraic region, either by exhaustive grid scanning with
fixed-step coordinate refinement (``grid_search``) or by multistart pattern
search with an exact penalty for constraints (``multistart_descent``).  They
certify upper bounds only; relaxations certify lower bounds, and together the
two bracket the optimum.

A problem is any object with an ``objective_value(point) -> float`` method
and a ``region`` attribute (a ``SemialgebraicSet`` or None for unconstrained
problems); an optional ``objective_values(points) -> array`` method enables
batched grid evaluation.  ``CallableProblem`` adapts bare callables to this
protocol.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .polynomial import Polynomial, SemialgebraicSet

Box = Sequence[Tuple[float, float]]

# Domain errors an objective may raise at an undefined point (for example a
# rational function with a vanishing denominator); treated as +infinity.
_EVAL_ERRORS = (ValueError, ZeroDivisionError, FloatingPointError, OverflowError)


@dataclass(frozen=True)
class OracleResult:
    """Outcome of a ground-truth search.

    ``best_point`` is None when no feasible point was found (the search is
    reported empty).  ``start_values`` records the per-start outcomes of
    multistart runs for convergence diagnostics.
    """

    best_point: Optional[Tuple[float, ...]]
    best_value: float
    method: str  # "grid" | "multistart" | "analytic"
    evaluations: int
    grid_step: Optional[float] = None
    starts: Optional[int] = None
    start_values: Optional[Tuple[float, ...]] = None

    @property
    def empty(self) -> bool:
        return self.best_point is None


def analytic(point: Sequence[float], value: float) -> OracleResult:
    """Wrap a closed-form optimum in the result type."""
    return OracleResult(tuple(float(c) for c in point), float(value), "analytic", 0)


@dataclass(frozen=True, eq=False)
class CallableProblem:
    """Adapter giving a bare objective callable the oracle problem protocol."""

    objective: Callable[[np.ndarray], float]
    region: Optional[SemialgebraicSet] = None
    batch_objective: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def objective_value(self, point: np.ndarray) -> float:
        return float(self.objective(np.asarray(point, dtype=float)))

    def objective_values(self, points: np.ndarray) -> np.ndarray:
        if self.batch_objective is not None:
            return np.asarray(self.batch_objective(points), dtype=float)
        return np.array([self.objective_value(p) for p in points])


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _region_of(problem) -> Optional[SemialgebraicSet]:
    region = getattr(problem, "region", None)
    if callable(region):
        region = region()
    return region


def _safe_value(problem, point: np.ndarray) -> float:
    try:
        value = float(problem.objective_value(point))
    except _EVAL_ERRORS:
        return math.inf
    return value if math.isfinite(value) else math.inf


def _evaluate_block(problem, points: np.ndarray) -> np.ndarray:
    batched = getattr(problem, "objective_values", None)
    if batched is not None:
        try:
            values = np.asarray(batched(points), dtype=float)
            return np.where(np.isfinite(values), values, math.inf)
        except _EVAL_ERRORS:
            pass  # fall back to pointwise evaluation below
    out = np.empty(len(points))
    for i, pt in enumerate(points):
        out[i] = _safe_value(problem, pt)
    return out


def _poly_values(poly: Polynomial, points: np.ndarray) -> np.ndarray:
    """Vectorized polynomial evaluation over rows of ``points``."""
    out = np.zeros(len(points))
    for mono, coef in poly.terms.items():
        term = np.full(len(points), coef)
        for vid, exp in mono.exps:
            term *= points[:, vid] ** exp
        out += term
    return out


def _feasible_mask(
    region: SemialgebraicSet, points: np.ndarray, tol: float = 1e-9
) -> np.ndarray:
    mask = np.ones(len(points), dtype=bool)
    for h in region.equalities:
        values = _poly_values(h, points)
        mask &= np.abs(values) <= tol
    for g in region.inequalities:
        mask &= _poly_values(g, points) >= -tol
    ball = region.ball_polynomial()
    if ball is not None:
        mask &= _poly_values(ball, points) >= -tol
    return mask


def _violation(region: SemialgebraicSet, point: np.ndarray) -> float:
    total = 0.0
    for h in region.equalities:
        total += abs(h.evaluate(point))
    for g in region.inequalities:
        total += max(0.0, -g.evaluate(point))
    ball = region.ball_polynomial()
    if ball is not None:
        total += max(0.0, -ball.evaluate(point))
    return total


def _violation_block(region: SemialgebraicSet, points: np.ndarray) -> np.ndarray:
    """Vectorized counterpart of ``_violation`` over rows of ``points``."""
    total = np.zeros(len(points))
    for h in region.equalities:
        total += np.abs(_poly_values(h, points))
    for g in region.inequalities:
        total += np.maximum(0.0, -_poly_values(g, points))
    ball = region.ball_polynomial()
    if ball is not None:
        total += np.maximum(0.0, -_poly_values(ball, points))
    return total


def ball_box(region: SemialgebraicSet, pad: float = 0.0) -> Tuple[Tuple[float, float], ...]:
    """Per-coordinate box implied by the region's ball bound."""
    if region.ball_bound is None:
        raise ValueError("region has no ball bound")
    radius = math.sqrt(region.ball_bound) + pad
    return tuple((-radius, radius) for _ in range(len(region.universe)))


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


def grid_search(problem, box: Box, step: float) -> OracleResult:
    """Exhaustively scan a box with the given step, then refine locally.

    The box must cover the region of interest (for ball-bounded regions use
    ``ball_box``); dimension is limited to 3.  The best feasible grid point
    is refined by fixed-step coordinate descent at two levels, step/100 and
    step/10000.  Returns an empty result when no grid point is feasible.
    """
    dimension = len(box)
    if dimension == 0 or dimension > 3:
        raise ValueError("grid search supports dimensions 1 to 3")
    if step <= 0.0:
        raise ValueError("step must be positive")
    region = _region_of(problem)
    axes = [np.arange(lo, hi + 0.5 * step, step) for lo, hi in box]

    # Slices along the first axis bound peak memory while keeping batched
    # evaluation; row-major order makes first-hit argmin the lexicographic
    # tie-break.
    if dimension == 1:
        tail = np.zeros((1, 0))
    else:
        mesh = np.meshgrid(*axes[1:], indexing="ij")
        tail = np.stack([m.ravel() for m in mesh], axis=1)

    evaluations = 0
    best_value = math.inf
    best_point: Optional[np.ndarray] = None
    for lead in axes[0]:
        chunk = np.column_stack([np.full(len(tail), lead), tail])
        values = _evaluate_block(problem, chunk)
        evaluations += len(chunk)
        if region is not None:
            values = np.where(_feasible_mask(region, chunk), values, math.inf)
        idx = int(np.argmin(values))
        value = float(values[idx])
        if value < best_value:
            best_value = value
            best_point = chunk[idx].copy()
    if best_point is None or not math.isfinite(best_value):
        return OracleResult(None, math.inf, "grid", evaluations, grid_step=step)

    point, value = best_point, best_value
    for h in (step / 100.0, step / 10000.0):
        point, value, used = _coordinate_refine(problem, region, point, value, h, box)
        evaluations += used
    return OracleResult(
        tuple(float(c) for c in point), float(value), "grid", evaluations, grid_step=step
    )


def _coordinate_refine(
    problem,
    region: Optional[SemialgebraicSet],
    point: np.ndarray,
    value: float,
    h: float,
    box: Box,
    max_rounds: int = 10000,
) -> Tuple[np.ndarray, float, int]:
    """Fixed-step steepest coordinate descent inside the box."""
    dimension = len(point)
    evaluations = 0
    for _ in range(max_rounds):
        best_value = value
        best_move: Optional[np.ndarray] = None
        for axis in range(dimension):
            for sign in (1.0, -1.0):
                candidate = point.copy()
                candidate[axis] += sign * h
                lo, hi = box[axis]
                if candidate[axis] < lo or candidate[axis] > hi:
                    continue
                if region is not None and not region.contains(candidate, 1e-9):
                    continue
                cand_value = _safe_value(problem, candidate)
                evaluations += 1
                if cand_value < best_value:
                    best_value = cand_value
                    best_move = candidate
        if best_move is None:
            break
        point, value = best_move, best_value
    return point, value, evaluations


# ---------------------------------------------------------------------------
# Multistart pattern search
# ---------------------------------------------------------------------------


def multistart_descent(
    problem,
    n_starts: int = 50,
    seed: int = 0,
    box: Optional[Box] = None,
    penalty: float = 1e4,
    min_step: float = 1e-8,
) -> OracleResult:
    """Best of ``n_starts`` pattern-search descents from seeded uniform starts.

    Starts are drawn uniformly from the region's ball (rejection sampling
    inside ``box``, which defaults to the ball's bounding box).  Constraints
    enter through an exact penalty with coefficient ``penalty``; each descent
    polls the full +/-1 direction stencil, expanding the step by 2.0 on
    success and contracting it by 0.5 otherwise, and stops when the step
    falls below ``min_step``.  Trial points that land slightly outside the
    region are additionally projected back onto its boundary so the poll can
    track curved active constraints.  Final candidates are repaired to
    feasibility before reporting; starts that cannot be repaired are
    discarded.  Results merge deterministically by value, then lexicographic
    point.
    """
    region = _region_of(problem)
    if box is None:
        if region is None:
            raise ValueError("without a region ball an explicit box is required")
        box = ball_box(region)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    rng = np.random.default_rng(seed)
    directions = _stencil(len(box))

    evaluations = 0
    best: Optional[Tuple[float, Tuple[float, ...]]] = None
    start_values: List[float] = []
    for _ in range(n_starts):
        start = _draw_start(rng, lo, hi, region)
        point, used = _pattern_search(
            problem, region, start, lo, hi, directions, penalty, min_step
        )
        evaluations += used
        point, value, feasible, used = _repair(problem, region, point, directions)
        evaluations += used
        if not feasible or not math.isfinite(value):
            start_values.append(math.inf)
            continue
        start_values.append(value)
        candidate = (value, tuple(float(c) for c in point))
        if best is None or candidate < best:
            best = candidate
    if best is None:
        return OracleResult(
            None, math.inf, "multistart", evaluations,
            starts=n_starts, start_values=tuple(start_values),
        )
    return OracleResult(
        best[1], best[0], "multistart", evaluations,
        starts=n_starts, start_values=tuple(start_values),
    )


def _stencil(dimension: int) -> List[np.ndarray]:
    """All +/-1/0 directions, normalized; richer than plain coordinate moves
    so searches can follow constraint ridges."""
    directions = []
    for combo in itertools.product((-1.0, 0.0, 1.0), repeat=dimension):
        if any(combo):
            arr = np.array(combo)
            directions.append(arr / np.linalg.norm(arr))
    return directions


def _draw_start(
    rng: np.random.Generator,
    lo: np.ndarray,
    hi: np.ndarray,
    region: Optional[SemialgebraicSet],
    max_tries: int = 200,
) -> np.ndarray:
    point = lo + (hi - lo) * rng.random(len(lo))
    if region is None or region.ball_bound is None:
        return point
    for _ in range(max_tries):
        ss = sum(point[v] ** 2 for v in region.ball_variables)
        if ss <= region.ball_bound:
            return point
        point = lo + (hi - lo) * rng.random(len(lo))
    return point


def _merit(
    problem, region: Optional[SemialgebraicSet], point: np.ndarray, penalty: float
) -> float:
    value = _safe_value(problem, point)
    if not math.isfinite(value):
        return math.inf
    if region is not None:
        value += penalty * _violation(region, point)
    return value


def _poly_gradient(poly: Polynomial, point: np.ndarray) -> np.ndarray:
    """Exact gradient of a polynomial at a point."""
    grad = np.zeros(len(point))
    for mono, coef in poly.terms.items():
        for vid, exp in mono.exps:
            value = coef * exp
            for other_vid, other_exp in mono.exps:
                e = other_exp - 1 if other_vid == vid else other_exp
                if e:
                    value *= point[other_vid] ** e
            grad[vid] += value
    return grad


def _newton_restore(
    region: SemialgebraicSet,
    point: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    sweeps: int = 3,
) -> Optional[np.ndarray]:
    """Project a slightly infeasible point back onto the region boundary.

    Sweeps the violated constraints, moving along each one's exact gradient
    to its nearest root (one Newton step per constraint per sweep).  Returns
    None when a violated constraint has a vanishing gradient.  The result is
    clipped to the box; tiny residual violations are left to the penalty.
    """
    z = np.array(point, dtype=float)
    ball = region.ball_polynomial()
    constraints = list(region.inequalities)
    if ball is not None:
        constraints.append(ball)
    for _ in range(sweeps):
        moved = False
        for g in constraints:
            value = g.evaluate(z)
            if value < 0.0:
                grad = _poly_gradient(g, z)
                norm_sq = float(np.dot(grad, grad))
                if norm_sq <= 1e-18:
                    return None
                z = z - (value / norm_sq) * grad
                moved = True
        for h in region.equalities:
            value = h.evaluate(z)
            if abs(value) > 1e-12:
                grad = _poly_gradient(h, z)
                norm_sq = float(np.dot(grad, grad))
                if norm_sq <= 1e-18:
                    return None
                z = z - (value / norm_sq) * grad
                moved = True
        if not moved:
            break
    return np.clip(z, lo, hi)


def _pattern_search(
    problem,
    region: Optional[SemialgebraicSet],
    start: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    directions: Sequence[np.ndarray],
    penalty: float,
    min_step: float,
    max_iters: int = 100000,
) -> Tuple[np.ndarray, int]:
    point = np.clip(np.asarray(start, dtype=float), lo, hi)
    merit = _merit(problem, region, point, penalty)
    evaluations = 1
    span = float(np.max(hi - lo))
    direction_matrix = np.array(directions)
    h = 0.25 * span
    iterations = 0
    while h >= min_step and iterations < max_iters:
        iterations += 1
        raw = np.clip(point + h * direction_matrix, lo, hi)
        values = _evaluate_block(problem, raw)
        evaluations += len(raw)
        if region is not None:
            violations = _violation_block(region, raw)
            merits = values + penalty * violations
            # Steps that graze a curved constraint pick up an O(h^2) penalty
            # that blocks tangential progress; restoring the most promising
            # violating candidates to the boundary keeps the descent moving
            # along active constraints.
            violated = np.flatnonzero(violations > 0.0)
            restored_points = []
            for i in violated[np.argsort(merits[violated], kind="stable")][:3]:
                restored = _newton_restore(region, raw[i], lo, hi)
                if restored is not None:
                    restored_points.append(restored)
            if restored_points:
                extra = np.array(restored_points)
                extra_merits = _evaluate_block(problem, extra)
                extra_merits += penalty * _violation_block(region, extra)
                evaluations += len(extra)
                raw = np.vstack([raw, extra])
                merits = np.concatenate([merits, extra_merits])
        else:
            merits = values
        idx = int(np.argmin(merits))
        if merits[idx] < merit:
            point, merit = raw[idx], float(merits[idx])
            h = min(h * 2.0, span)  # expansion
        else:
            h *= 0.5  # contraction
    return point, evaluations


def _repair(
    problem,
    region: Optional[SemialgebraicSet],
    point: np.ndarray,
    directions: Sequence[np.ndarray],
) -> Tuple[np.ndarray, float, bool, int]:
    """Pull a near-feasible candidate into the region, then re-evaluate.

    Descends on the constraint violation alone with the same pattern search;
    reports whether the final point is feasible within 1e-9.
    """
    evaluations = 1
    if region is None or region.contains(point, 1e-9):
        return point, _safe_value(problem, point), True, evaluations
    violation = _violation(region, point)
    h = 1e-2
    while h >= 1e-12 and violation > 0.0:
        best_violation = violation
        best_point: Optional[np.ndarray] = None
        for direction in directions:
            candidate = point + h * direction
            cand_violation = _violation(region, candidate)
            evaluations += 1
            if cand_violation < best_violation:
                best_violation = cand_violation
                best_point = candidate
        if best_point is not None:
            point, violation = best_point, best_violation
            h *= 2.0
        else:
            h *= 0.5
    feasible = region.contains(point, 1e-9)
    return point, _safe_value(problem, point), feasible, evaluations
