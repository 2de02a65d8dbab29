"""Ordered-median aggregation of rational functions and its polynomial lifts.

An ordered-median objective applies position-dependent weights to the sorted
values of finitely many rational functions.  This module models such problems
(``OmrfProblem``), evaluates them directly (``evaluate_ordered_median``), and
rewrites them as polynomial optimization problems over an extended variable
set (``LiftedProblem``):

* ``build_general_lift`` introduces one 0/1 assignment variable per
  (function, sorted position) pair and supports arbitrary, even polynomial,
  position weights;
* ``build_kcentrum`` handles weights ``(1,..,1,0,..,0)`` -- the sum of the k
  largest values -- with one epigraph variable and one slack per function;
* ``build_monotone`` handles nonincreasing nonnegative constant weights by
  telescoping over sums-of-largest-values;
* ``build_trimmed`` handles windows ``(0,..,0,1,..,1,0,..,0)`` with 0/1
  selector variables that subtract the discarded largest values.

Every builder emits redundant box and ball constraints so that the lifted
feasible set is compact with a structural certificate: for each variable some
inequality dominates its square (``putinar_structurally_bounded``).  The
clique list of each lift satisfies the running intersection property, which
downstream sparse relaxations rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .polynomial import (
    Monomial,
    Polynomial,
    RationalFunction,
    SemialgebraicSet,
    UniverseMismatchError,
    VariableUniverse,
    VarId,
    interval_enclosure,
)


class LiftBuildError(ValueError):
    """Raised when a reformulation cannot be built from the given problem."""


class EmptyProblemError(LiftBuildError):
    """Raised when a problem with zero functions is constructed."""


class PatternMismatchError(LiftBuildError):
    """Raised when a compact builder is applied to weights of the wrong shape."""


class EmptyWindowError(LiftBuildError):
    """Raised when trimming discards every function value."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaWeights:
    """Position weights applied to sorted function values.

    ``entries[j]`` multiplies the (j+1)-th largest function value.  Entries
    are polynomials in the original variables, so position weights may vary
    over the domain; constant weights unlock the compact reformulations.  The
    telescoping decomposition uses an implicit trailing weight of zero
    (see ``padded_constant_values``).
    """

    entries: Tuple[Polynomial, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise EmptyProblemError("at least one position weight is required")
        universe = self.entries[0].universe
        for entry in self.entries[1:]:
            if entry.universe is not universe:
                raise UniverseMismatchError("weights from different variable universes")

    @staticmethod
    def constants(universe: VariableUniverse, values: Sequence[float]) -> "LambdaWeights":
        return LambdaWeights(tuple(Polynomial.constant(universe, float(v)) for v in values))

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def universe(self) -> VariableUniverse:
        return self.entries[0].universe

    def is_constant(self) -> bool:
        return all(entry.is_constant() for entry in self.entries)

    def constant_values(self) -> Tuple[float, ...]:
        if not self.is_constant():
            raise ValueError("weights are not constant")
        return tuple(entry.constant_value() for entry in self.entries)

    def padded_constant_values(self) -> Tuple[float, ...]:
        """Constant weights with the implicit trailing zero appended."""
        return self.constant_values() + (0.0,)

    def is_all_ones(self) -> bool:
        return self.is_constant() and all(v == 1.0 for v in self.constant_values())

    def top_k(self) -> Optional[int]:
        """The k of a ``(1,..,1,0,..,0)`` pattern, or None."""
        if not self.is_constant():
            return None
        values = self.constant_values()
        k = 0
        while k < len(values) and values[k] == 1.0:
            k += 1
        if k == 0 or any(v != 0.0 for v in values[k:]):
            return None
        return k

    def trimmed_window(self) -> Optional[Tuple[int, int]]:
        """The (k1, k2) of a ``(0^k1, 1^w, 0^k2)`` pattern with w >= 1, or None."""
        if not self.is_constant():
            return None
        values = self.constant_values()
        first = 0
        while first < len(values) and values[first] == 0.0:
            first += 1
        last = len(values)
        while last > first and values[last - 1] == 0.0:
            last -= 1
        if last == first or any(v != 1.0 for v in values[first:last]):
            return None
        return first, len(values) - last

    def is_monotone(self) -> bool:
        """True for constant, nonincreasing, nonnegative-tail weights."""
        if not self.is_constant():
            return False
        values = self.constant_values()
        return values[-1] >= 0.0 and all(a >= b for a, b in zip(values, values[1:]))

    def classify(self) -> str:
        """Most specific recognized pattern: ``all_ones`` > ``top_k`` >
        ``trimmed_window`` > ``monotone`` > ``generic``."""
        if self.is_all_ones():
            return "all_ones"
        if self.top_k() is not None:
            return "top_k"
        if self.trimmed_window() is not None:
            return "trimmed_window"
        if self.is_monotone():
            return "monotone"
        return "generic"

    def evaluate(self, point: np.ndarray) -> np.ndarray:
        return np.array([entry.evaluate(point) for entry in self.entries])


@dataclass(frozen=True)
class OmrfProblem:
    """Minimize an ordered-median aggregation of rational functions over a
    basic closed semialgebraic ground set.

    ``ball_bound`` is a constant M with sum(x_i^2) <= M on the ground set; it
    certifies compactness and sizes the boxes derived by the builders.
    Positivity of the function denominators on the ground set is a caller
    obligation recorded in ``denominators_positive``, not proven here.
    """

    functions: Tuple[RationalFunction, ...]
    weights: LambdaWeights
    ground_set: SemialgebraicSet
    ball_bound: float
    denominators_positive: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise EmptyProblemError("at least one function is required")
        if len(self.functions) != self.weights.m:
            raise ValueError(
                f"{len(self.functions)} functions but {self.weights.m} position weights"
            )
        universe = self.ground_set.universe
        if self.weights.universe is not universe:
            raise UniverseMismatchError("weights and ground set use different universes")
        for f in self.functions:
            if f.universe is not universe:
                raise UniverseMismatchError("function and ground set use different universes")
        if not self.ball_bound > 0.0:
            raise ValueError("ball bound must be positive")
        gs = self.ground_set
        if gs.ball_bound is not None:
            if gs.ball_bound != self.ball_bound:
                raise ValueError("ground-set ball bound disagrees with the problem's")
            if set(gs.ball_variables) != set(range(len(universe))):
                raise ValueError("ground-set ball must cover every variable")

    @property
    def m(self) -> int:
        return len(self.functions)

    @property
    def universe(self) -> VariableUniverse:
        return self.ground_set.universe

    @property
    def region(self) -> SemialgebraicSet:
        """Ground set with the compactness ball attached over all variables."""
        gs = self.ground_set
        if gs.ball_bound is not None:
            return gs
        return SemialgebraicSet(
            gs.universe,
            list(gs.inequalities),
            list(gs.equalities),
            ball_bound=self.ball_bound,
            ball_variables=tuple(range(len(gs.universe))),
        )

    def objective_value(self, point: np.ndarray) -> float:
        return evaluate_ordered_median(self, point)


@dataclass(frozen=True)
class LiftedProblem:
    """Polynomial optimization problem equivalent to an ``OmrfProblem``.

    The objective is the ratio ``objective_num / objective_den`` (denominator
    1 for the compact forms).  ``cliques`` lists variable groups that cover
    every objective term and every inequality constraint; the ordered list
    satisfies the running intersection property.  Equality constraints may
    couple variables across cliques (relaxations impose those only as scalar
    linear conditions).  ``variable_groups`` records auxiliary variables by
    role ("w", "t", "r", "v") in construction order so witnesses and
    diagnostics can address them; ``variable_scales`` carries magnitude hints
    used for numerical conditioning downstream.
    """

    universe: VariableUniverse
    objective_num: Polynomial
    objective_den: Polynomial
    inequality_constraints: Tuple[Polynomial, ...]
    equality_constraints: Tuple[Polynomial, ...]
    cliques: Tuple[Tuple[VarId, ...], ...]
    original_variables: Tuple[VarId, ...]
    form: str
    form_params: Tuple[int, ...] = ()
    variable_groups: Tuple[Tuple[str, Tuple[VarId, ...]], ...] = ()
    variable_scales: Tuple[float, ...] = ()
    denominators_positive: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "inequality_constraints", tuple(self.inequality_constraints)
        )
        object.__setattr__(self, "equality_constraints", tuple(self.equality_constraints))
        object.__setattr__(self, "cliques", tuple(tuple(c) for c in self.cliques))
        object.__setattr__(self, "original_variables", tuple(self.original_variables))
        universe = self.universe
        for poly in (
            self.objective_num,
            self.objective_den,
            *self.inequality_constraints,
            *self.equality_constraints,
        ):
            if poly.universe is not universe:
                raise UniverseMismatchError("lifted polynomial from a different universe")
        if self.objective_den.is_zero():
            raise ValueError("objective denominator is identically zero")
        n_vars = len(universe)
        covered: set = set()
        for clique in self.cliques:
            covered.update(clique)
        if covered != set(range(n_vars)):
            raise ValueError("cliques must cover every variable exactly once or more")
        if not running_intersection_holds(self.cliques):
            raise ValueError("clique list violates the running intersection property")
        clique_sets = [frozenset(c) for c in self.cliques]
        for g in self.inequality_constraints:
            support = set(g.variables())
            if not any(support <= cs for cs in clique_sets):
                raise ValueError("inequality support not contained in any clique")
        for poly in (self.objective_num, self.objective_den):
            for mono in poly.terms:
                support = set(mono.variables())
                if not any(support <= cs for cs in clique_sets):
                    raise ValueError("objective term spans multiple cliques")
        if self.original_variables != tuple(range(len(self.original_variables))):
            raise ValueError("original variables must occupy the leading identifiers")
        if self.variable_scales and len(self.variable_scales) != n_vars:
            raise ValueError("one scale hint per variable is required")


# ---------------------------------------------------------------------------
# Structural checks and bounds
# ---------------------------------------------------------------------------


def running_intersection_holds(cliques: Sequence[Sequence[VarId]]) -> bool:
    """Check the running intersection property of an ordered clique list.

    Each clique's overlap with the union of its predecessors must be
    contained in a single predecessor.
    """
    sets = [set(c) for c in cliques]
    seen: set = set()
    for idx, current in enumerate(sets):
        if idx:
            overlap = current & seen
            if overlap and not any(overlap <= sets[k] for k in range(idx)):
                return False
        seen |= current
    return True


def putinar_structurally_bounded(lifted: LiftedProblem) -> bool:
    """True when every variable's square is dominated by some inequality.

    A structural compactness certificate: for each variable ``v`` some
    inequality constraint contains ``v**2`` with a negative coefficient, so
    the constraint set bounds ``v**2`` explicitly.
    """
    for vid in range(len(lifted.universe)):
        square = Monomial.of(vid, 2)
        if not any(g.coefficient(square) < 0.0 for g in lifted.inequality_constraints):
            return False
    return True


def function_bounds(problem: OmrfProblem) -> Tuple[Tuple[float, float], ...]:
    """Interval enclosures of each function's range over the ball box.

    The box is the per-coordinate interval [-sqrt(M), sqrt(M)] implied by the
    compactness bound; enclosures are conservative supersets of the true
    ranges.  Raises ``LiftBuildError`` when a denominator's enclosure is not
    strictly positive, since the quotient cannot be bounded that way.
    """
    radius = math.sqrt(problem.ball_bound)
    box = {vid: (-radius, radius) for vid in range(len(problem.universe))}
    bounds: List[Tuple[float, float]] = []
    for f in problem.functions:
        num_lo, num_hi = interval_enclosure(f.numerator, box)
        den = f.denominator
        if den.is_constant():
            c = den.constant_value()
            if c <= 0.0:
                raise LiftBuildError("constant denominator must be positive")
            bounds.append((num_lo / c, num_hi / c))
            continue
        den_lo, den_hi = interval_enclosure(den, box)
        if den_lo <= 0.0:
            raise LiftBuildError(
                "cannot certify a positive denominator over the ball box; "
                "tighten the ball bound or use polynomial functions"
            )
        quotients = (num_lo / den_lo, num_lo / den_hi, num_hi / den_lo, num_hi / den_hi)
        bounds.append((min(quotients), max(quotients)))
    return tuple(bounds)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _sort_permutation(values: Sequence[float]) -> List[int]:
    """Indices ordering ``values`` nonincreasingly; ties keep the original
    index order (lower index first)."""
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def evaluate_ordered_median(problem: OmrfProblem, point: np.ndarray) -> float:
    """Weighted sum of sorted function values at ``point``.

    Function values are sorted nonincreasingly (the j-th weight multiplies
    the j-th largest value).  Ties are broken by original function index,
    ascending, which also fixes the witness permutation; the value itself is
    tie-independent for constant weights.  Raises ``ValueError`` when a
    denominator is not positive at ``point``.
    """
    x = np.asarray(point, dtype=float)
    values = [f.evaluate(x) for f in problem.functions]
    order = _sort_permutation(values)
    lam = problem.weights.evaluate(x)
    return float(sum(lam[j] * values[order[j]] for j in range(problem.m)))


# ---------------------------------------------------------------------------
# Shared builder plumbing
# ---------------------------------------------------------------------------


@dataclass
class _Ground:
    """Original problem data transplanted into the extended universe."""

    ext: VariableUniverse
    numerators: List[Polynomial]
    denominators: List[Polynomial]
    lambdas: List[Polynomial]
    inequalities: List[Polynomial]
    equalities: List[Polynomial]
    x_ids: Tuple[VarId, ...]
    x_scale: float


def _rehome(poly: Polynomial, universe: VariableUniverse) -> Polynomial:
    # Variable ids are positional, so a polynomial transplants verbatim into
    # any universe whose leading names match its own.
    return Polynomial(universe, poly.terms)


def _fresh_name(universe: VariableUniverse, base: str) -> str:
    name = base
    while name in universe:
        name += "_"
    return name


def _prepare(problem: OmrfProblem) -> _Ground:
    base = problem.universe
    ext = VariableUniverse(base.names)
    region = problem.region
    inequalities = [_rehome(g, ext) for g in region.inequalities]
    ball = region.ball_polynomial()
    assert ball is not None  # region always carries the problem ball
    inequalities.append(_rehome(ball, ext))
    equalities = [_rehome(h, ext) for h in region.equalities]
    return _Ground(
        ext=ext,
        numerators=[_rehome(f.numerator, ext) for f in problem.functions],
        denominators=[_rehome(f.denominator, ext) for f in problem.functions],
        lambdas=[_rehome(entry, ext) for entry in problem.weights.entries],
        inequalities=inequalities,
        equalities=equalities,
        x_ids=tuple(range(len(base))),
        x_scale=math.sqrt(problem.ball_bound),
    )


def _box_ball(
    universe: VariableUniverse, boxes: Sequence[Tuple[VarId, float, float]]
) -> Polynomial:
    """Redundant quadratic ball implied by per-variable boxes:
    sum of radius^2 minus sum of (v - center)^2."""
    total = Polynomial.constant(
        universe, sum(((hi - lo) / 2.0) ** 2 for _, lo, hi in boxes)
    )
    for vid, lo, hi in boxes:
        center = (hi + lo) / 2.0
        total = total - (Polynomial.variable(universe, vid) - center) ** 2
    return total


def _scale_hint(lo: float, hi: float) -> float:
    magnitude = max(abs(lo), abs(hi))
    return magnitude if magnitude > 0.0 else 1.0


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_general_lift(problem: OmrfProblem) -> LiftedProblem:
    """Rewrite with one 0/1 assignment variable per (function, position) pair.

    Supports arbitrary position weights, including polynomial and sign-mixed
    ones, at the cost of m**2 auxiliary variables.  Feasible assignments are
    exactly the permutation matrices that sort the function values
    nonincreasingly; the objective is the cleared-denominator weighted sum of
    sorted values over the product of all denominators.
    """
    g = _prepare(problem)
    m = problem.m
    ext = g.ext
    w_ids = [
        [ext.add(_fresh_name(ext, f"w_{i + 1}_{j + 1}")) for j in range(m)]
        for i in range(m)
    ]
    w_var = [[Polynomial.variable(ext, w_ids[i][j]) for j in range(m)] for i in range(m)]

    # Products of all denominators but one, via prefix/suffix sweeps.
    prefix = [Polynomial.constant(ext, 1.0)]
    for q in g.denominators:
        prefix.append(prefix[-1] * q)
    suffix = [Polynomial.constant(ext, 1.0)]
    for q in reversed(g.denominators):
        suffix.append(suffix[-1] * q)
    suffix.reverse()  # suffix[i] = product of denominators i..m-1
    den_product = prefix[m]
    cleared = [g.numerators[i] * prefix[i] * suffix[i + 1] for i in range(m)]

    # column[j](x, w) = sum_i w_ij * p_i * prod_{k != i} q_k
    columns: List[Polynomial] = []
    for j in range(m):
        col = Polynomial.zero(ext)
        for i in range(m):
            col = col + w_var[i][j] * cleared[i]
        columns.append(col)

    objective_num = Polynomial.zero(ext)
    for j in range(m):
        objective_num = objective_num + g.lambdas[j] * columns[j]

    equalities = list(g.equalities)
    for i in range(m):  # each function occupies exactly one position
        row = Polynomial.constant(ext, -1.0)
        for j in range(m):
            row = row + w_var[i][j]
        equalities.append(row)
    for j in range(m):  # each position holds exactly one function
        col_sum = Polynomial.constant(ext, -1.0)
        for i in range(m):
            col_sum = col_sum + w_var[i][j]
        equalities.append(col_sum)
    for i in range(m):
        for j in range(m):
            equalities.append(w_var[i][j] ** 2 - w_var[i][j])

    inequalities = list(g.inequalities)
    for j in range(m - 1):  # position j holds a value at least position j+1's
        inequalities.append(columns[j] - columns[j + 1])
    for j in range(m):  # redundant per-column ball keeping the lift compact
        ball_j = Polynomial.constant(ext, float(m))
        for i in range(m):
            ball_j = ball_j - w_var[i][j] ** 2
        inequalities.append(ball_j)

    x = list(g.x_ids)
    if m == 1:
        cliques: Tuple[Tuple[VarId, ...], ...] = (tuple(sorted(x + [w_ids[0][0]])),)
    else:
        cliques = tuple(
            tuple(sorted(x + [w_ids[i][j] for i in range(m)] + [w_ids[i][j + 1] for i in range(m)]))
            for j in range(m - 1)
        )

    flat_w = tuple(w_ids[i][j] for i in range(m) for j in range(m))
    scales = [g.x_scale] * len(x) + [1.0] * (m * m)
    return LiftedProblem(
        universe=ext,
        objective_num=objective_num,
        objective_den=den_product,
        inequality_constraints=tuple(inequalities),
        equality_constraints=tuple(equalities),
        cliques=cliques,
        original_variables=g.x_ids,
        form="general",
        form_params=(),
        variable_groups=(("w", flat_w),),
        variable_scales=tuple(scales),
        denominators_positive=problem.denominators_positive,
    )


def build_kcentrum(problem: OmrfProblem, k: int) -> LiftedProblem:
    """Rewrite minimization of the sum of the k largest function values.

    Requires constant weights of the shape ``(1,..,1,0,..,0)`` with exactly
    ``k`` ones.  Introduces an epigraph variable ``t`` and slacks ``r_j``
    with ``t + r_j >= f_j`` (denominator-cleared), plus box and redundant
    ball constraints derived from interval enclosures of the functions.
    """
    m = problem.m
    pattern = problem.weights.top_k()
    if pattern is None:
        raise PatternMismatchError(
            "weights must be 1 on a leading block and 0 afterwards"
        )
    if not 1 <= k <= m:
        raise LiftBuildError(f"k must be between 1 and {m}, got {k}")
    if pattern != k:
        raise PatternMismatchError(
            f"weights select the {pattern} largest values but k={k} was requested"
        )
    g = _prepare(problem)
    ext = g.ext
    bounds = function_bounds(problem)
    lower = min(lo for lo, _ in bounds)
    upper = max(hi for _, hi in bounds)

    t_id = ext.add(_fresh_name(ext, "t"))
    r_ids = [ext.add(_fresh_name(ext, f"r_{j + 1}")) for j in range(m)]
    t = Polynomial.variable(ext, t_id)
    r = [Polynomial.variable(ext, rid) for rid in r_ids]
    r_boxes = [(0.0, bounds[j][1] - lower) for j in range(m)]

    inequalities = list(g.inequalities)
    for j in range(m):  # t + r_j >= f_j, denominators cleared
        inequalities.append(g.denominators[j] * (t + r[j]) - g.numerators[j])
    for j in range(m):
        inequalities.append(r[j])
    inequalities.append(t - lower)
    inequalities.append(upper - t)
    for j in range(m):
        inequalities.append(r_boxes[j][1] - r[j])
    for j in range(m):  # redundant per-clique ball over the auxiliaries
        inequalities.append(
            _box_ball(ext, [(t_id, lower, upper), (r_ids[j], *r_boxes[j])])
        )

    objective = t * float(k)
    for j in range(m):
        objective = objective + r[j]

    x = list(g.x_ids)
    cliques = tuple(tuple(sorted(x + [t_id, r_ids[j]])) for j in range(m))
    scales = (
        [g.x_scale] * len(x)
        + [_scale_hint(lower, upper)]
        + [_scale_hint(*r_boxes[j]) for j in range(m)]
    )
    return LiftedProblem(
        universe=ext,
        objective_num=objective,
        objective_den=Polynomial.constant(ext, 1.0),
        inequality_constraints=tuple(inequalities),
        equality_constraints=tuple(g.equalities),
        cliques=cliques,
        original_variables=g.x_ids,
        form="kcentrum",
        form_params=(k,),
        variable_groups=(("t", (t_id,)), ("r", tuple(r_ids))),
        variable_scales=tuple(scales),
        denominators_positive=problem.denominators_positive,
    )


def build_monotone(problem: OmrfProblem) -> LiftedProblem:
    """Rewrite for constant nonincreasing nonnegative weights by telescoping.

    The weighted sum of sorted values equals the telescoping combination of
    sums-of-k-largest, so one epigraph variable ``t_k`` and slacks ``r_kj``
    are introduced per level ``k`` and the objective combines the levels with
    the weight differences (the implicit trailing weight is zero).
    """
    m = problem.m
    if not problem.weights.is_monotone():
        raise PatternMismatchError(
            "weights must be constant, nonincreasing, and end nonnegative"
        )
    padded = problem.weights.padded_constant_values()
    g = _prepare(problem)
    ext = g.ext
    bounds = function_bounds(problem)
    lower = min(lo for lo, _ in bounds)
    upper = max(hi for _, hi in bounds)
    r_boxes = [(0.0, bounds[j][1] - lower) for j in range(m)]

    t_ids = [ext.add(_fresh_name(ext, f"t_{k + 1}")) for k in range(m)]
    r_ids = [
        [ext.add(_fresh_name(ext, f"r_{k + 1}_{j + 1}")) for j in range(m)]
        for k in range(m)
    ]
    t = [Polynomial.variable(ext, tid) for tid in t_ids]
    r = [[Polynomial.variable(ext, rid) for rid in row] for row in r_ids]

    inequalities = list(g.inequalities)
    for k in range(m):
        for j in range(m):  # t_k + r_kj >= f_j, denominators cleared
            inequalities.append(g.denominators[j] * (t[k] + r[k][j]) - g.numerators[j])
    for k in range(m):
        for j in range(m):
            inequalities.append(r[k][j])
    for k in range(m):
        inequalities.append(t[k] - lower)
        inequalities.append(upper - t[k])
    for k in range(m):
        for j in range(m):
            inequalities.append(r_boxes[j][1] - r[k][j])
    for k in range(m):
        for j in range(m):  # redundant per-clique ball over the auxiliaries
            inequalities.append(
                _box_ball(ext, [(t_ids[k], lower, upper), (r_ids[k][j], *r_boxes[j])])
            )

    objective = Polynomial.zero(ext)
    for k in range(m):
        coefficient = padded[k] - padded[k + 1]
        level = t[k] * float(k + 1)
        for j in range(m):
            level = level + r[k][j]
        objective = objective + coefficient * level

    x = list(g.x_ids)
    cliques = tuple(
        tuple(sorted(x + [t_ids[k], r_ids[k][j]])) for k in range(m) for j in range(m)
    )
    scales = [g.x_scale] * len(x) + [_scale_hint(lower, upper)] * m
    for k in range(m):
        scales.extend(_scale_hint(*r_boxes[j]) for j in range(m))
    flat_r = tuple(r_ids[k][j] for k in range(m) for j in range(m))
    return LiftedProblem(
        universe=ext,
        objective_num=objective,
        objective_den=Polynomial.constant(ext, 1.0),
        inequality_constraints=tuple(inequalities),
        equality_constraints=tuple(g.equalities),
        cliques=cliques,
        original_variables=g.x_ids,
        form="monotone",
        form_params=(),
        variable_groups=(("t", tuple(t_ids)), ("r", flat_r)),
        variable_scales=tuple(scales),
        denominators_positive=problem.denominators_positive,
    )


def build_trimmed(problem: OmrfProblem, k1: int, k2: int) -> LiftedProblem:
    """Rewrite minimization of the sum of central values (a trimmed mean
    without the averaging constant): the ``k1`` largest and ``k2`` smallest
    values are discarded.

    Requires the matching ``(0^k1, 1^w, 0^k2)`` weight pattern.  The sum of
    the surviving values is the difference of two sums-of-largest; the
    subtracted part is expressed with 0/1 selector variables ``v_j`` marking
    the ``k1`` discarded largest values.  With ``k1 = 0`` the selectors are
    unnecessary and the construction is exactly the k-largest-sum form.
    """
    m = problem.m
    if k1 < 0 or k2 < 0:
        raise LiftBuildError("trim counts must be nonnegative")
    if k1 + k2 >= m:
        raise EmptyWindowError(f"trimming {k1}+{k2} of {m} values leaves nothing")
    window = problem.weights.trimmed_window()
    if window != (k1, k2):
        raise PatternMismatchError(
            f"weights encode the window {window}, but ({k1}, {k2}) was requested"
        )
    if k1 == 0:
        return build_kcentrum(problem, m - k2)

    g = _prepare(problem)
    ext = g.ext
    bounds = function_bounds(problem)
    lower = min(lo for lo, _ in bounds)
    upper = max(hi for _, hi in bounds)
    r_boxes = [(0.0, bounds[j][1] - lower) for j in range(m)]

    t_id = ext.add(_fresh_name(ext, "t"))
    r_ids = [ext.add(_fresh_name(ext, f"r_{j + 1}")) for j in range(m)]
    v_ids = [ext.add(_fresh_name(ext, f"v_{j + 1}")) for j in range(m)]
    t = Polynomial.variable(ext, t_id)
    r = [Polynomial.variable(ext, rid) for rid in r_ids]
    v = [Polynomial.variable(ext, vid) for vid in v_ids]

    equalities = list(g.equalities)
    selector_sum = Polynomial.constant(ext, -float(k1))
    for j in range(m):
        selector_sum = selector_sum + v[j]
    equalities.append(selector_sum)  # exactly k1 values are discarded as largest
    for j in range(m):
        equalities.append(v[j] ** 2 - v[j])

    inequalities = list(g.inequalities)
    for j in range(m):  # t + r_j >= f_j, denominators cleared
        inequalities.append(g.denominators[j] * (t + r[j]) - g.numerators[j])
    for j in range(m):
        inequalities.append(r[j])
    inequalities.append(t - lower)
    inequalities.append(upper - t)
    for j in range(m):
        inequalities.append(r_boxes[j][1] - r[j])
    for j in range(m):  # redundant per-clique ball over the auxiliaries
        inequalities.append(
            _box_ball(
                ext,
                [(t_id, lower, upper), (r_ids[j], *r_boxes[j]), (v_ids[j], 0.0, 1.0)],
            )
        )

    # ((m - k2) t + sum_j r_j) * prod_k q_k  -  sum_j v_j p_j prod_{k != j} q_k
    prefix = [Polynomial.constant(ext, 1.0)]
    for q in g.denominators:
        prefix.append(prefix[-1] * q)
    suffix = [Polynomial.constant(ext, 1.0)]
    for q in reversed(g.denominators):
        suffix.append(suffix[-1] * q)
    suffix.reverse()
    den_product = prefix[m]
    epigraph = t * float(m - k2)
    for j in range(m):
        epigraph = epigraph + r[j]
    objective_num = epigraph * den_product
    for j in range(m):
        objective_num = objective_num - v[j] * (g.numerators[j] * prefix[j] * suffix[j + 1])

    x = list(g.x_ids)
    cliques = tuple(tuple(sorted(x + [t_id, r_ids[j], v_ids[j]])) for j in range(m))
    scales = (
        [g.x_scale] * len(x)
        + [_scale_hint(lower, upper)]
        + [_scale_hint(*r_boxes[j]) for j in range(m)]
        + [1.0] * m
    )
    return LiftedProblem(
        universe=ext,
        objective_num=objective_num,
        objective_den=den_product,
        inequality_constraints=tuple(inequalities),
        equality_constraints=tuple(equalities),
        cliques=cliques,
        original_variables=g.x_ids,
        form="trimmed",
        form_params=(k1, k2),
        variable_groups=(("t", (t_id,)), ("r", tuple(r_ids)), ("v", tuple(v_ids))),
        variable_scales=tuple(scales),
        denominators_positive=problem.denominators_positive,
    )


def build_auto(problem: OmrfProblem) -> LiftedProblem:
    """Build the most compact recognized reformulation for the weights.

    Leading-ones windows (including all-ones) use the k-largest-sum form;
    windows with a leading zero block use the trimmed form; other
    nonincreasing nonnegative constant weights use the telescoping form;
    everything else falls back to the general assignment lift.
    """
    w = problem.weights
    if w.is_constant():
        k = w.top_k()
        if k is not None:
            return build_kcentrum(problem, k)
        window = w.trimmed_window()
        if window is not None:
            return build_trimmed(problem, window[0], window[1])
        if w.is_monotone():
            return build_monotone(problem)
    return build_general_lift(problem)


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


def lifted_witness(
    problem: OmrfProblem, lifted: LiftedProblem, point: np.ndarray
) -> np.ndarray:
    """Feasible point of the lifted problem corresponding to ``point``.

    Builds the auxiliary values implied by the tie-stable sorting of the
    function values at ``point``; the returned vector satisfies every lifted
    constraint, and the lifted objective evaluates to the ordered-median
    value there (the soundness property tests rely on both facts).
    """
    x = np.asarray(point, dtype=float)
    m = problem.m
    values = [f.evaluate(x) for f in problem.functions]
    order = _sort_permutation(values)
    z = np.zeros(len(lifted.universe))
    z[: len(x)] = x
    groups: Dict[str, Tuple[VarId, ...]] = dict(lifted.variable_groups)
    if lifted.form == "general":
        flat_w = groups["w"]
        for position, func_index in enumerate(order):
            z[flat_w[func_index * m + position]] = 1.0
    elif lifted.form == "kcentrum":
        k = lifted.form_params[0]
        t_val = values[order[k - 1]]
        z[groups["t"][0]] = t_val
        for j, rid in enumerate(groups["r"]):
            z[rid] = max(0.0, values[j] - t_val)
    elif lifted.form == "monotone":
        t_ids = groups["t"]
        flat_r = groups["r"]
        for level in range(m):
            t_val = values[order[level]]
            z[t_ids[level]] = t_val
            for j in range(m):
                z[flat_r[level * m + j]] = max(0.0, values[j] - t_val)
    elif lifted.form == "trimmed":
        k1, k2 = lifted.form_params
        t_val = values[order[m - k2 - 1]]
        z[groups["t"][0]] = t_val
        for j, rid in enumerate(groups["r"]):
            z[rid] = max(0.0, values[j] - t_val)
        for position in range(k1):
            z[groups["v"][order[position]]] = 1.0
    else:
        raise ValueError(f"unknown lifted form {lifted.form!r}")
    return z
