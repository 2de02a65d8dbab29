"""Minimizer detection and extraction from solved moment relaxations.

A solved relaxation returns a moment vector, not a point.  When the moment
matrices satisfy the rank (flat-truncation) conditions, the relaxation value
is exact and a minimizer can be read off the first-order moments.  This
module provides the rank diagnostics (`rank_check`), first-moment extraction
with an independent feasibility and objective re-check (`extract_point`), and
the standard relative objective-error measure (`eps_obj`).

Only the single-minimizer case (all ranks one) is extracted; higher finite
ranks are detected and reported but not decomposed into atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .moment import MonomialBasis
from .polynomial import Monomial, VarId
from .relaxation import SdpProblem, dirac_moment_vector
from .solver import verify_vector

__all__ = [
    "BlockRanks",
    "DegenerateMomentError",
    "ExtractedSolution",
    "ExtractionError",
    "FlatnessOrders",
    "RankReport",
    "eps_obj",
    "extract_point",
    "flatness_orders",
    "rank_check",
]

RANK_TOLERANCE = 1e-6
FEASIBILITY_TOLERANCE = 1e-6


class ExtractionError(RuntimeError):
    """Raised when a minimizer cannot be recovered from a moment vector."""


class DegenerateMomentError(ExtractionError):
    """The moment vector carries no usable mass (L_y(1) <= 0)."""


# ---------------------------------------------------------------------------
# Rank conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatnessOrders:
    """Reduction depths for the rank comparison.

    ``clique_reduction`` applies to every clique moment block,
    ``original_reduction`` to the principal submatrix indexed by monomials in
    the original variables only.  Both count hierarchy levels below the full
    relaxation order.
    """

    original_reduction: int = 1
    clique_reduction: int = 1

    def __post_init__(self) -> None:
        if self.original_reduction < 1 or self.clique_reduction < 1:
            raise ValueError("rank reductions must be at least one level")


def flatness_orders(lift) -> FlatnessOrders:
    """Reduction depths implied by a lifted problem's constraint degrees.

    Constraints supported on the original variables drive the original-block
    reduction; every other constraint, together with the objective numerator
    and denominator, drives the clique-block reduction.  Half-degrees are
    rounded up, and each reduction is at least one level.
    """
    original = set(lift.original_variables)
    original_red = 1
    clique_red = max(
        1,
        -(-lift.objective_num.degree // 2),
        -(-lift.objective_den.degree // 2),
    )
    for poly in tuple(lift.inequality_constraints) + tuple(
        lift.equality_constraints
    ):
        half = max(1, -(-poly.degree // 2))
        if set(poly.variables()) <= original:
            original_red = max(original_red, half)
        else:
            clique_red = max(clique_red, half)
    return FlatnessOrders(original_red, clique_red)


@dataclass(frozen=True)
class BlockRanks:
    """Numerical ranks of one moment (sub)matrix at full and reduced order."""

    label: str
    size: int
    reduced_size: int
    rank_full: int
    rank_reduced: int
    reduction: int

    def __post_init__(self) -> None:
        if not (0 <= self.rank_full <= self.size):
            raise ValueError("full rank outside [0, size]")
        if not (0 <= self.rank_reduced <= self.reduced_size):
            raise ValueError("reduced rank outside [0, reduced size]")

    @property
    def flat(self) -> bool:
        return self.rank_full == self.rank_reduced


@dataclass(frozen=True)
class RankReport:
    """Flatness diagnostics of a moment vector.

    ``blocks`` covers every clique moment block, ``original`` the shared
    submatrix over original-variable monomials (absent when no block spans
    all original variables).  ``cross_ranks`` holds the rank of the shared
    submatrix for each pair of overlapping clique blocks; minimizers split
    consistently across cliques only when all of these are one.
    """

    blocks: Tuple[BlockRanks, ...]
    original: Optional[BlockRanks]
    cross_ranks: Tuple[Tuple[str, str, int], ...]
    tolerance: float

    @property
    def cross_rank_one(self) -> bool:
        return all(rank <= 1 for _, _, rank in self.cross_ranks)

    @property
    def global_flat(self) -> bool:
        if not all(block.flat for block in self.blocks):
            return False
        if self.original is not None and not self.original.flat:
            return False
        return self.cross_rank_one

    @property
    def single_atom(self) -> bool:
        """True when the diagnostics certify exactly one minimizer."""
        if not self.global_flat:
            return False
        if any(block.rank_full != 1 for block in self.blocks):
            return False
        return self.original is None or self.original.rank_full == 1

    @property
    def atom_count(self) -> int:
        """Certified minimizer count (max block rank when globally flat)."""
        ranks = [block.rank_full for block in self.blocks]
        if self.original is not None:
            ranks.append(self.original.rank_full)
        return max(ranks, default=0)


def _numerical_rank(matrix: np.ndarray, tol: float) -> int:
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(matrix, compute_uv=False)
    top = float(singular[0])
    if top <= 0.0:
        return 0
    return int(np.sum(singular > tol * top))


def _submatrix_rows(
    basis: Sequence[Monomial], allowed: set, max_degree: Optional[int] = None
) -> np.ndarray:
    rows = [
        i
        for i, mono in enumerate(basis)
        if set(mono.variables()) <= allowed
        and (max_degree is None or mono.degree <= max_degree)
    ]
    return np.asarray(rows, dtype=np.int64)


def rank_check(
    sdp: SdpProblem,
    y: np.ndarray,
    orders: Union[FlatnessOrders, int],
    tol: float = RANK_TOLERANCE,
) -> RankReport:
    """Numerical rank diagnostics of every clique moment block at ``y``.

    ``orders`` fixes how many hierarchy levels the reduced submatrices sit
    below the full order (an integer applies uniformly).  Ranks count
    singular values above ``tol`` times the largest one.
    """
    sdp._require_metadata()
    if isinstance(orders, int):
        orders = FlatnessOrders(orders, orders)
    moment_blocks = [b for b in sdp.psd_blocks if b.kind == "moment"]
    original = set(sdp.original_variables)

    reports = []
    bases = []
    matrices = []
    for block in moment_blocks:
        basis = MonomialBasis.build(block.variables, sdp.order).elements
        if len(basis) != block.size:
            raise ExtractionError(
                f"moment block {block.label} does not match its clique basis"
            )
        matrix = block.assemble(y)
        reduced_degree = max(0, sdp.order - orders.clique_reduction)
        reduced_size = sum(1 for mono in basis if mono.degree <= reduced_degree)
        reports.append(
            BlockRanks(
                label=block.label,
                size=block.size,
                reduced_size=reduced_size,
                rank_full=_numerical_rank(matrix, tol),
                rank_reduced=_numerical_rank(
                    matrix[:reduced_size, :reduced_size], tol
                ),
                reduction=orders.clique_reduction,
            )
        )
        bases.append(basis)
        matrices.append(matrix)

    original_report = None
    for block, basis, matrix in zip(moment_blocks, bases, matrices):
        if not original <= set(block.variables):
            continue
        rows = _submatrix_rows(basis, original)
        reduced_degree = max(0, sdp.order - orders.original_reduction)
        reduced_rows = _submatrix_rows(basis, original, reduced_degree)
        sub = matrix[np.ix_(rows, rows)]
        original_report = BlockRanks(
            label="original",
            size=rows.size,
            reduced_size=reduced_rows.size,
            rank_full=_numerical_rank(sub, tol),
            rank_reduced=_numerical_rank(
                matrix[np.ix_(reduced_rows, reduced_rows)], tol
            ),
            reduction=orders.original_reduction,
        )
        break

    cross = []
    for i in range(len(moment_blocks)):
        for j in range(i + 1, len(moment_blocks)):
            shared = set(moment_blocks[i].variables) & set(
                moment_blocks[j].variables
            )
            if not shared:
                continue
            rows = _submatrix_rows(bases[i], shared)
            sub = matrices[i][np.ix_(rows, rows)]
            cross.append(
                (
                    moment_blocks[i].label,
                    moment_blocks[j].label,
                    _numerical_rank(sub, tol),
                )
            )

    return RankReport(
        blocks=tuple(reports),
        original=original_report,
        cross_ranks=tuple(cross),
        tolerance=tol,
    )


# ---------------------------------------------------------------------------
# Point extraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtractedSolution:
    """A candidate minimizer with its independently recomputed value.

    ``certified_value`` comes from re-evaluating the objective at the point
    (never from the solver), so ``gap = certified_value - sdp_bound`` is the
    sandwich width between the relaxation bound and a feasible evaluation;
    a tiny gap certifies practical exactness.  ``label`` is ``"extracted"``
    for moment-based points and ``"bound-only"`` when rank conditions failed
    and the point came from direct search instead.
    """

    point: Mapping[VarId, float]
    certified_value: float
    sdp_bound: float
    feasibility_residual: float
    feasible: bool
    label: str = "extracted"
    gap: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "gap", self.certified_value - self.sdp_bound
        )

    @staticmethod
    def bound_only(
        point: Mapping[VarId, float],
        certified_value: float,
        sdp_bound: float,
        feasibility_residual: float = 0.0,
        feasible: bool = True,
    ) -> "ExtractedSolution":
        """Package a direct-search point alongside an unextractable bound."""
        return ExtractedSolution(
            point=dict(point),
            certified_value=certified_value,
            sdp_bound=sdp_bound,
            feasibility_residual=feasibility_residual,
            feasible=feasible,
            label="bound-only",
        )


def extract_point(
    sdp: SdpProblem,
    y: np.ndarray,
    objective: Optional[Callable[[np.ndarray], float]] = None,
    include_auxiliary: bool = False,
    tol: float = FEASIBILITY_TOLERANCE,
) -> ExtractedSolution:
    """Read a candidate minimizer off the first-order moments of ``y``.

    Coordinates are L_y(x_l) / L_y(1).  The candidate is re-checked against
    the relaxation's own constraint system, and its value is recomputed at
    the point: through ``objective`` (a callable on the original variables,
    typically an independent evaluator) when given, otherwise through the
    relaxation's rational objective at the full lifted point.  Meaningful
    only when `rank_check` certifies a single atom; on higher-rank moment
    vectors the returned point is the atoms' barycenter.
    """
    sdp._require_metadata()
    mass = sdp.moment_value(Monomial.one(), y)
    if not mass > 0.0:
        raise DegenerateMomentError(
            f"moment vector carries nonpositive mass L_y(1) = {mass!r}"
        )

    universe = sdp.universe
    full_point = np.array(
        [
            sdp.moment_value(Monomial.of(v), y) / mass
            for v in range(len(universe))
        ]
    )

    denominator = sdp.denominator.evaluate(full_point)
    if not denominator > 0.0:
        raise DegenerateMomentError(
            "objective denominator vanishes at the extracted point"
        )
    witness = dirac_moment_vector(sdp, full_point)
    report = verify_vector(sdp, witness, tol)
    residual = max(
        report.max_equality_residual, max(0.0, -report.min_block_eigenvalue)
    )

    if objective is not None:
        original_point = full_point[list(sdp.original_variables)]
        certified = float(objective(original_point))
    else:
        certified = sdp.objective.evaluate(witness)

    keep = (
        range(len(universe)) if include_auxiliary else sdp.original_variables
    )
    return ExtractedSolution(
        point={int(v): float(full_point[v]) for v in keep},
        certified_value=certified,
        sdp_bound=sdp.objective.evaluate(y),
        feasibility_residual=residual,
        feasible=report.within_tolerance,
    )


def eps_obj(sdp_value: float, reference: float) -> float:
    """Relative objective error |sdp_value - reference| / max(1, reference)."""
    if not math.isfinite(reference):
        raise ValueError("reference optimum must be finite")
    return abs(sdp_value - reference) / max(1.0, reference)
