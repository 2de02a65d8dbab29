"""Assembly of truncated moment relaxations in solver-neutral standard form.

Given a lifted problem (polynomial objective ratio, constraints, cliques),
this module produces the order-``r`` semidefinite relaxation: per-clique
moment blocks, localizing blocks for inequalities, expanded linear equality
rows, and a normalized rational objective.  The normalization L_y(q) = 1 is
eliminated by substituting the moment variable of q's graded-lex-smallest
monomial, so the assembled problem has ``y_dim`` free moment variables,
affine PSD blocks and affine equality rows — exactly the data a conic solver
consumes, and exactly the shape whose size statistics are reported.

Truncation conventions (fixed by the reference block structures and size
tables this package reproduces):

- a localizing block for an inequality of degree ``d`` is truncated at order
  ``r - max(1, d // 2)``;
- an equality of degree ``d`` is expanded against all multiplier monomials of
  degree at most ``min(r, 2r - d + (d % 2))`` over its assigned variables;
- a constraint is assigned the variables in the intersection of all cliques
  containing its support; equalities whose support lies in no single clique
  contribute a single scalar row L_y(h) = 0;
- odd-degree constraints may reference moments of degree 2r + 1; the moment
  dictionary extends on demand.

Text format
-----------

``to_sdp_text`` serializes the numeric content of an ``SdpProblem`` (not the
monomial metadata) to a line-oriented, whitespace-separated format for
debugging against external solvers.  Floats are printed with 17 significant
digits, so a round trip is bit-exact.  Layout::

    OWASDP-SDP 1
    ydim <int>
    order <int>
    originals <k> <id>*
    scales <k> <float>*              # k = ydim, or 0 meaning all ones
    objective <constant> <nnz> (<index> <coeff>)*
    pivot <constant> <nnz> (<index> <coeff>)*
    blocks <count>
    block <size> <kind> <label> <nvars> (<id>)* <nentries>
    entry <i> <j> <constant> <nnz> (<index> <coeff>)*
    ...
    equalities <count>
    equality <label> <rhs> <nnz> (<index> <coeff>)*
    ...
    end

``from_sdp_text`` parses this back into an ``SdpProblem`` whose monomial
metadata fields are empty; structural equality ignores metadata, so a round
trip compares equal to the original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .moment import LinearForm as RawForm
from .moment import MomentIndex, MonomialBasis, localizing_matrix, moment_matrix
from .omrf import running_intersection_holds
from .polynomial import Monomial, Polynomial, VariableUniverse, VarId

COEFF_EPS = 1e-14  # threshold below which a coefficient counts as zero


class RelaxationError(ValueError):
    """Base class for relaxation-assembly failures."""


class OrderTooSmallError(RelaxationError):
    """Requested relaxation order is below the problem's minimum order."""


class RelaxationStructureError(RelaxationError):
    """Constraint or objective structure incompatible with the cliques."""


class SdpFormatError(ValueError):
    """Malformed SDP text input."""


# ---------------------------------------------------------------------------
# Orders
# ---------------------------------------------------------------------------


def _half_ceil(degree: int) -> int:
    return (degree + 1) // 2


def localizing_order(r: int, degree: int) -> int:
    """Truncation order of the localizing block for a degree-``degree``
    inequality at relaxation order ``r``."""
    return r - max(1, degree // 2)


def multiplier_degree(r: int, degree: int) -> int:
    """Largest multiplier-monomial degree for a degree-``degree`` equality."""
    return min(r, 2 * r - degree + (degree % 2))


@dataclass(frozen=True)
class RelaxationOrders:
    """Half-degrees of all problem pieces and the resulting minimum order.

    ``inequality_orders`` and ``equality_orders`` hold ceil(deg/2) per lifted
    constraint, in constraint order; ``objective_order`` covers both the
    numerator and the denominator.  Any relaxation order r >= ``r_min`` is
    admissible.
    """

    r_min: int
    objective_order: int
    inequality_orders: Tuple[int, ...]
    equality_orders: Tuple[int, ...]

    def validate(self, r: int) -> None:
        if r < self.r_min:
            raise OrderTooSmallError(
                f"relaxation order {r} is below the minimum order {self.r_min}"
            )


def min_order(lifted) -> RelaxationOrders:
    """Minimum admissible relaxation order of a lifted problem."""
    objective_order = max(
        _half_ceil(lifted.objective_num.degree),
        _half_ceil(lifted.objective_den.degree),
    )
    inequality_orders = tuple(
        _half_ceil(g.degree) for g in lifted.inequality_constraints
    )
    equality_orders = tuple(
        _half_ceil(h.degree) for h in lifted.equality_constraints
    )
    r_min = max(1, objective_order, *inequality_orders, *equality_orders, 0)
    return RelaxationOrders(
        r_min, objective_order, inequality_orders, equality_orders
    )


def check_rip(cliques: Sequence[Iterable[VarId]]) -> bool:
    """Running intersection property of an ordered clique list."""
    return running_intersection_holds(cliques)


# ---------------------------------------------------------------------------
# Standard-form data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffineForm:
    """Sparse affine functional  constant + sum_i coefficients[i] * y[indices[i]]."""

    indices: Tuple[int, ...]
    coefficients: Tuple[float, ...]
    constant: float = 0.0

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.coefficients):
            raise ValueError("index/coefficient length mismatch")

    def evaluate(self, y: np.ndarray) -> float:
        total = self.constant
        for idx, coeff in zip(self.indices, self.coefficients):
            total += coeff * y[idx]
        return float(total)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def is_zero(self) -> bool:
        return not self.indices and self.constant == 0.0


def _affine_from_dict(acc: Dict[int, float], constant: float) -> AffineForm:
    items = sorted((i, c) for i, c in acc.items() if abs(c) > COEFF_EPS)
    return AffineForm(
        tuple(i for i, _ in items), tuple(c for _, c in items), constant
    )


@dataclass(frozen=True)
class PsdBlock:
    """One semidefinite block: an affine symmetric matrix map of the moments.

    ``entries`` holds the upper triangle (i <= j) only; structurally zero
    entries are omitted.  ``variables`` records the basis variable ids the
    block was built over (informational; empty on imported problems).
    """

    size: int
    kind: str  # "moment" | "localizing"
    label: str
    variables: Tuple[VarId, ...]
    entries: Tuple[Tuple[int, int, AffineForm], ...]

    def __post_init__(self) -> None:
        if " " in self.label or not self.label:
            raise ValueError("block labels must be nonempty and whitespace-free")
        for i, j, _ in self.entries:
            if not (0 <= i <= j < self.size):
                raise ValueError("block entry outside the upper triangle")

    def assemble(self, y: np.ndarray) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for i, j, form in self.entries:
            value = form.evaluate(y)
            out[i, j] = value
            out[j, i] = value
        return out

    def nonzero_count(self) -> int:
        """Nonzero coefficients in the full (square) vectorization."""
        total = 0
        for i, j, form in self.entries:
            total += form.nnz if i == j else 2 * form.nnz
        return total

    def referenced_indices(self) -> Tuple[int, ...]:
        seen = set()
        for _, _, form in self.entries:
            seen.update(form.indices)
        return tuple(sorted(seen))


@dataclass(frozen=True)
class EqualityRow:
    """One scalar equality  form(y) = rhs  (the form carries no constant)."""

    label: str
    form: AffineForm
    rhs: float

    def __post_init__(self) -> None:
        if " " in self.label or not self.label:
            raise ValueError("equality labels must be nonempty and whitespace-free")
        if self.form.constant != 0.0:
            raise ValueError("equality forms must carry constants in rhs")

    def residual(self, y: np.ndarray) -> float:
        return self.form.evaluate(y) - self.rhs


@dataclass(frozen=True)
class SizeStats:
    """Standard-form matrix dimensions and fill."""

    cols: int
    rows: int
    nonzero_pct: float


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Order-``order`` moment relaxation in eliminated standard form.

    Minimize ``objective`` over moment vectors y (length ``y_dim``) subject
    to every ``psd_blocks`` map being PSD and every ``equalities`` row
    holding.  The normalization L_y(q) = 1 has been eliminated: the moment of
    the pivot monomial is ``pivot_substitution`` evaluated at y, and constant
    offsets appear inside the affine maps.

    Metadata fields (``moments`` — the monomial of each y index, ``universe``,
    ``pivot_monomial``, ``denominator``) support moment evaluation and point
    extraction; they are None on problems read back from text.  Structural
    equality compares the numeric content only.
    """

    y_dim: int
    order: int
    objective: AffineForm
    psd_blocks: Tuple[PsdBlock, ...]
    equalities: Tuple[EqualityRow, ...]
    pivot_substitution: AffineForm
    moment_scales: Tuple[float, ...]
    original_variables: Tuple[VarId, ...]
    stats: SizeStats = field(init=False)
    moments: Optional[Tuple[Monomial, ...]] = None
    pivot_monomial: Optional[Monomial] = None
    universe: Optional[VariableUniverse] = None
    denominator: Optional[Polynomial] = None

    def __post_init__(self) -> None:
        if self.moment_scales and len(self.moment_scales) != self.y_dim:
            raise ValueError("moment_scales length must equal y_dim")
        for idx in self.objective.indices + self.pivot_substitution.indices:
            if not 0 <= idx < self.y_dim:
                raise ValueError("objective/pivot index out of range")
        for block in self.psd_blocks:
            for _, _, form in block.entries:
                if form.indices and max(form.indices) >= self.y_dim:
                    raise ValueError("block index out of range")
        for row in self.equalities:
            if row.form.indices and max(row.form.indices) >= self.y_dim:
                raise ValueError("equality index out of range")
        object.__setattr__(self, "stats", size_stats_of(self))

    def _key(self):
        return (
            self.y_dim,
            self.order,
            self.objective,
            self.psd_blocks,
            self.equalities,
            self.pivot_substitution,
            self.moment_scales,
            self.original_variables,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SdpProblem):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash((self.y_dim, self.order, self.objective))

    # -- metadata-backed helpers -------------------------------------------

    def _require_metadata(self) -> None:
        if self.moments is None or self.pivot_monomial is None:
            raise RelaxationStructureError(
                "operation requires moment metadata (absent on imported problems)"
            )

    def linear_functional(self, p: Polynomial) -> AffineForm:
        """L_y(p) as an affine form over the free moments."""
        self._require_metadata()
        positions = {mono: i for i, mono in enumerate(self.moments)}
        acc: Dict[int, float] = {}
        constant = 0.0
        for mono, coeff in p.terms.items():
            if mono == self.pivot_monomial:
                constant += coeff * self.pivot_substitution.constant
                for idx, sub_coeff in zip(
                    self.pivot_substitution.indices,
                    self.pivot_substitution.coefficients,
                ):
                    acc[idx] = acc.get(idx, 0.0) + coeff * sub_coeff
            else:
                idx = positions.get(mono)
                if idx is None:
                    raise RelaxationStructureError(
                        f"monomial {mono!r} has no moment variable"
                    )
                acc[idx] = acc.get(idx, 0.0) + coeff
        return _affine_from_dict(acc, constant)

    def moment_value(self, mono: Monomial, y: np.ndarray) -> float:
        """L_y of a single monomial (pivot-aware)."""
        self._require_metadata()
        if mono == self.pivot_monomial:
            return self.pivot_substitution.evaluate(y)
        try:
            idx = self.moments.index(mono)
        except ValueError:
            raise RelaxationStructureError(
                f"monomial {mono!r} has no moment variable"
            ) from None
        return float(y[idx])


def dirac_moment_vector(sdp: SdpProblem, point: np.ndarray) -> np.ndarray:
    """Free-moment vector of the normalized Dirac measure at ``point``.

    ``point`` assigns a value to every lifted variable.  The measure is the
    Dirac delta scaled by 1/q(point) so the normalization L_y(q) = 1 holds;
    by construction it satisfies every relaxation constraint whenever the
    point is feasible for the lifted problem.
    """
    sdp._require_metadata()
    if sdp.denominator is None:
        raise RelaxationStructureError("dirac vector requires the denominator")
    scale = sdp.denominator.evaluate(point)
    if scale <= 0.0:
        raise ValueError("denominator must be positive at the point")
    y = np.empty(len(sdp.moments))
    for i, mono in enumerate(sdp.moments):
        y[i] = mono.evaluate(point) / scale
    return y


# ---------------------------------------------------------------------------
# Size statistics
# ---------------------------------------------------------------------------


def size_stats_of(sdp: "SdpProblem") -> SizeStats:
    """Dimensions and fill of the vectorized standard form.

    Columns: every PSD block contributes its full squared size, plus one
    column per equality row.  Rows: the free moment variables.  Nonzeros:
    coefficients on free moments in block entries (off-diagonal entries count
    twice) and equality rows; constants and right-hand sides do not count.
    """
    cols = sum(b.size * b.size for b in sdp.psd_blocks) + len(sdp.equalities)
    rows = sdp.y_dim
    nnz = sum(b.nonzero_count() for b in sdp.psd_blocks)
    nnz += sum(row.form.nnz for row in sdp.equalities)
    denom = cols * rows
    pct = 100.0 * nnz / denom if denom else 0.0
    return SizeStats(cols, rows, pct)


def size_stats(sdp: SdpProblem) -> SizeStats:
    return sdp.stats


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def _basis_variables(
    support: Tuple[VarId, ...], cliques: Sequence[Tuple[VarId, ...]]
) -> Optional[Tuple[VarId, ...]]:
    """Variables assigned to a constraint: the intersection of all cliques
    containing its support, or None when no clique contains it."""
    containing = [set(c) for c in cliques if set(support) <= set(c)]
    if not containing:
        return None
    shared = set.intersection(*containing)
    return tuple(sorted(shared))


class _Eliminator:
    """Rewrites raw moment-index forms over the free moments, substituting
    the pivot moment via the normalization row."""

    def __init__(self, index: MomentIndex, denominator: Polynomial) -> None:
        self.pivot_monomial = min(
            denominator.terms, key=lambda m: m.grlex_key()
        )
        pivot_coeff = denominator.terms[self.pivot_monomial]
        self.pivot_raw = index.get(self.pivot_monomial)
        n_raw = index.n_moments
        free_of = np.full(n_raw, -1, dtype=int)
        free = 0
        for raw in range(n_raw):
            if raw != self.pivot_raw:
                free_of[raw] = free
                free += 1
        self.free_of = free_of
        self.y_dim = free
        # y_pivot = (1 - sum_{other} q_gamma y_gamma) / q_pivot
        acc: Dict[int, float] = {}
        for mono, coeff in denominator.terms.items():
            if mono == self.pivot_monomial:
                continue
            raw = index.get(mono)
            idx = int(free_of[raw])
            acc[idx] = acc.get(idx, 0.0) - coeff / pivot_coeff
        self.substitution = _affine_from_dict(acc, 1.0 / pivot_coeff)

    def affine(self, raw_form: RawForm) -> AffineForm:
        acc: Dict[int, float] = {}
        constant = 0.0
        for raw, coeff in raw_form.items():
            if raw == self.pivot_raw:
                constant += coeff * self.substitution.constant
                for idx, sub_coeff in zip(
                    self.substitution.indices, self.substitution.coefficients
                ):
                    acc[idx] = acc.get(idx, 0.0) + coeff * sub_coeff
            else:
                idx = int(self.free_of[raw])
                acc[idx] = acc.get(idx, 0.0) + coeff
        return _affine_from_dict(acc, constant)


def _strict_functional(p: Polynomial, index: MomentIndex, what: str) -> RawForm:
    form: RawForm = {}
    for mono, coeff in p.terms.items():
        if mono not in index:
            raise RelaxationStructureError(
                f"{what} references monomial {mono!r} outside every clique range"
            )
        pos = index.get(mono)
        form[pos] = form.get(pos, 0.0) + coeff
    return form


def _build(lifted, r: int, cliques: Sequence[Tuple[VarId, ...]]) -> SdpProblem:
    orders = min_order(lifted)
    orders.validate(r)
    index = MomentIndex(lifted.universe)
    for clique in cliques:
        index.register_range(clique, 2 * r)

    # Raw blocks over the shared moment dictionary.
    raw_blocks: List[Tuple[str, str, Tuple[VarId, ...], object]] = []
    for c_idx, clique in enumerate(cliques):
        basis = MonomialBasis.build(clique, r)
        raw_blocks.append(
            ("moment", f"moment.c{c_idx}", tuple(clique), moment_matrix(basis, index))
        )
    for g_idx, g in enumerate(lifted.inequality_constraints):
        assigned = _basis_variables(g.variables(), cliques)
        if assigned is None:
            raise RelaxationStructureError(
                f"inequality {g_idx} is supported on no single clique"
            )
        basis = MonomialBasis.build(assigned, localizing_order(r, g.degree))
        raw_blocks.append(
            ("localizing", f"loc.g{g_idx}", assigned, localizing_matrix(g, basis, index))
        )

    # Raw equality rows: clique-local equalities against all multipliers,
    # cross-clique equalities as a single scalar row.
    raw_rows: List[Tuple[str, RawForm]] = []
    for h_idx, h in enumerate(lifted.equality_constraints):
        assigned = _basis_variables(h.variables(), cliques)
        if assigned is None:
            raw_rows.append(
                (f"eq{h_idx}.cross", _strict_functional(h, index, f"equality {h_idx}"))
            )
            continue
        degree = multiplier_degree(r, h.degree)
        multipliers = MonomialBasis.build(assigned, degree).elements
        for m_idx, beta in enumerate(multipliers):
            form: RawForm = {}
            for mono, coeff in h.terms.items():
                pos = index.intern(mono * beta)
                form[pos] = form.get(pos, 0.0) + coeff
            raw_rows.append((f"eq{h_idx}.m{m_idx}", form))

    raw_objective = _strict_functional(lifted.objective_num, index, "objective")
    # The denominator support must be indexed before elimination.
    _strict_functional(lifted.objective_den, index, "normalization")

    eliminator = _Eliminator(index, lifted.objective_den)

    blocks: List[PsdBlock] = []
    for kind, label, variables, raw in raw_blocks:
        entries = []
        for (i, j), raw_form in sorted(raw.entries.items()):
            form = eliminator.affine(raw_form)
            if not form.is_zero():
                entries.append((i, j, form))
        blocks.append(PsdBlock(raw.size, kind, label, variables, tuple(entries)))

    equalities: List[EqualityRow] = []
    for label, raw_form in raw_rows:
        form = eliminator.affine(raw_form)
        row = EqualityRow(
            label,
            AffineForm(form.indices, form.coefficients, 0.0),
            -form.constant,
        )
        if not row.form.indices:
            if abs(row.rhs) > 1e-9:
                raise RelaxationStructureError(
                    f"equality row {label} reduces to the contradiction 0 = {row.rhs}"
                )
            continue  # structurally vacuous
        equalities.append(row)

    objective = eliminator.affine(raw_objective)

    if lifted.variable_scales:
        per_var = {
            vid: float(s)
            for vid, s in zip(range(len(lifted.universe)), lifted.variable_scales)
        }
    else:
        per_var = {}
    moments: List[Monomial] = []
    scales: List[float] = []
    for raw, mono in enumerate(index.monomials):
        if raw == eliminator.pivot_raw:
            continue
        moments.append(mono)
        if per_var:
            scale = 1.0
            for vid, exp in mono.exps:
                scale *= per_var.get(vid, 1.0) ** exp
            scales.append(scale)
        else:
            scales.append(1.0)

    return SdpProblem(
        y_dim=eliminator.y_dim,
        order=r,
        objective=objective,
        psd_blocks=tuple(blocks),
        equalities=tuple(equalities),
        pivot_substitution=eliminator.substitution,
        moment_scales=tuple(scales),
        original_variables=tuple(lifted.original_variables),
        moments=tuple(moments),
        pivot_monomial=eliminator.pivot_monomial,
        universe=lifted.universe,
        denominator=lifted.objective_den,
    )


def build_dense(lifted, r: int) -> SdpProblem:
    """Order-``r`` dense relaxation: one moment block over all variables."""
    all_vars = tuple(range(len(lifted.universe)))
    return _build(lifted, r, (all_vars,))


def build_sparse(lifted, r: int) -> SdpProblem:
    """Order-``r`` clique-sparse relaxation over ``lifted.cliques``."""
    cliques = tuple(tuple(c) for c in lifted.cliques)
    if not cliques:
        raise RelaxationStructureError("sparse build requires at least one clique")
    if not check_rip(cliques):
        raise RelaxationStructureError(
            "cliques violate the running intersection property"
        )
    return _build(lifted, r, cliques)


# ---------------------------------------------------------------------------
# Text export / import
# ---------------------------------------------------------------------------

_MAGIC = "OWASDP-SDP 1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _form_tokens(form: AffineForm) -> List[str]:
    tokens = [_fmt(form.constant), str(form.nnz)]
    for idx, coeff in zip(form.indices, form.coefficients):
        tokens.append(str(idx))
        tokens.append(_fmt(coeff))
    return tokens


def to_sdp_text(sdp: SdpProblem) -> str:
    """Serialize the numeric content of a relaxation (see module docstring)."""
    lines = [_MAGIC]
    lines.append(f"ydim {sdp.y_dim}")
    lines.append(f"order {sdp.order}")
    originals = " ".join(str(v) for v in sdp.original_variables)
    lines.append(
        f"originals {len(sdp.original_variables)}"
        + (f" {originals}" if originals else "")
    )
    if all(s == 1.0 for s in sdp.moment_scales):
        lines.append("scales 0")
    else:
        lines.append(
            f"scales {len(sdp.moment_scales)} "
            + " ".join(_fmt(s) for s in sdp.moment_scales)
        )
    lines.append("objective " + " ".join(_form_tokens(sdp.objective)))
    lines.append("pivot " + " ".join(_form_tokens(sdp.pivot_substitution)))
    lines.append(f"blocks {len(sdp.psd_blocks)}")
    for block in sdp.psd_blocks:
        head = [
            "block",
            str(block.size),
            block.kind,
            block.label,
            str(len(block.variables)),
        ]
        head.extend(str(v) for v in block.variables)
        head.append(str(len(block.entries)))
        lines.append(" ".join(head))
        for i, j, form in block.entries:
            lines.append(f"entry {i} {j} " + " ".join(_form_tokens(form)))
    lines.append(f"equalities {len(sdp.equalities)}")
    for row in sdp.equalities:
        lines.append(
            f"equality {row.label} {_fmt(row.rhs)} "
            + " ".join(_form_tokens(row.form)[1:])
        )
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str) -> None:
        self.lines = [ln for ln in text.splitlines() if ln.strip()]
        self.pos = 0

    def next(self, expected: str) -> List[str]:
        if self.pos >= len(self.lines):
            raise SdpFormatError(f"unexpected end of input, wanted {expected!r}")
        tokens = self.lines[self.pos].split()
        self.pos += 1
        if tokens[0] != expected:
            raise SdpFormatError(f"expected {expected!r}, found {tokens[0]!r}")
        return tokens[1:]


def _parse_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise SdpFormatError(f"bad integer for {what}: {token!r}") from None


def _parse_float(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise SdpFormatError(f"bad float for {what}: {token!r}") from None


def _parse_form(tokens: List[str], what: str) -> AffineForm:
    if len(tokens) < 2:
        raise SdpFormatError(f"truncated form for {what}")
    constant = _parse_float(tokens[0], what)
    nnz = _parse_int(tokens[1], what)
    if len(tokens) != 2 + 2 * nnz:
        raise SdpFormatError(f"form for {what} expects {nnz} pairs")
    indices = []
    coefficients = []
    for k in range(nnz):
        indices.append(_parse_int(tokens[2 + 2 * k], what))
        coefficients.append(_parse_float(tokens[3 + 2 * k], what))
    return AffineForm(tuple(indices), tuple(coefficients), constant)


def from_sdp_text(text: str) -> SdpProblem:
    """Parse the text format back into a metadata-free ``SdpProblem``."""
    reader = _Reader(text)
    if reader.pos >= len(reader.lines) or reader.lines[0].strip() != _MAGIC:
        raise SdpFormatError("missing OWASDP-SDP header")
    reader.pos = 1
    y_dim = _parse_int(reader.next("ydim")[0], "ydim")
    order = _parse_int(reader.next("order")[0], "order")
    orig_tokens = reader.next("originals")
    n_orig = _parse_int(orig_tokens[0], "originals")
    if len(orig_tokens) != 1 + n_orig:
        raise SdpFormatError("originals count mismatch")
    originals = tuple(_parse_int(t, "originals") for t in orig_tokens[1:])
    scale_tokens = reader.next("scales")
    n_scales = _parse_int(scale_tokens[0], "scales")
    if n_scales == 0:
        scales = tuple(1.0 for _ in range(y_dim))
    else:
        if n_scales != y_dim or len(scale_tokens) != 1 + n_scales:
            raise SdpFormatError("scales count mismatch")
        scales = tuple(_parse_float(t, "scales") for t in scale_tokens[1:])
    objective = _parse_form(reader.next("objective"), "objective")
    pivot = _parse_form(reader.next("pivot"), "pivot")
    n_blocks = _parse_int(reader.next("blocks")[0], "blocks")
    blocks: List[PsdBlock] = []
    for _ in range(n_blocks):
        head = reader.next("block")
        if len(head) < 4:
            raise SdpFormatError("truncated block header")
        size = _parse_int(head[0], "block size")
        kind, label = head[1], head[2]
        n_vars = _parse_int(head[3], "block nvars")
        if len(head) != 4 + n_vars + 1:
            raise SdpFormatError("block header count mismatch")
        variables = tuple(_parse_int(t, "block var") for t in head[4 : 4 + n_vars])
        n_entries = _parse_int(head[4 + n_vars], "block entries")
        entries = []
        for _ in range(n_entries):
            tok = reader.next("entry")
            i = _parse_int(tok[0], "entry row")
            j = _parse_int(tok[1], "entry col")
            entries.append((i, j, _parse_form(tok[2:], "entry")))
        blocks.append(PsdBlock(size, kind, label, variables, tuple(entries)))
    n_eqs = _parse_int(reader.next("equalities")[0], "equalities")
    rows: List[EqualityRow] = []
    for _ in range(n_eqs):
        tok = reader.next("equality")
        if len(tok) < 3:
            raise SdpFormatError("truncated equality")
        label = tok[0]
        rhs = _parse_float(tok[1], "equality rhs")
        nnz = _parse_int(tok[2], "equality nnz")
        if len(tok) != 3 + 2 * nnz:
            raise SdpFormatError("equality expects matching pairs")
        indices = tuple(_parse_int(tok[3 + 2 * k], "equality") for k in range(nnz))
        coefficients = tuple(
            _parse_float(tok[4 + 2 * k], "equality") for k in range(nnz)
        )
        rows.append(EqualityRow(label, AffineForm(indices, coefficients, 0.0), rhs))
    reader.next("end")
    return SdpProblem(
        y_dim=y_dim,
        order=order,
        objective=objective,
        psd_blocks=tuple(blocks),
        equalities=tuple(rows),
        pivot_substitution=pivot,
        moment_scales=scales,
        original_variables=originals,
    )
