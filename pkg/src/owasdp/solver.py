"""Solution of the assembled semidefinite relaxations.

The standard form produced by :mod:`owasdp.relaxation` is

    minimize    c'y + c0
    subject to  M_k(y) := C_k + sum_i y_i A_{k,i}  PSD   for every block k,
                E y = b,

a linear objective over free moment variables with affine PSD blocks and
affine equality rows.  This module solves it through a pluggable backend
contract with two implementations:

- ``interior-point`` (bundled, default): an infeasible-start primal-dual
  path-following method with Nesterov-Todd scaling and a Mehrotra-style
  adaptive centering parameter.  The Schur complement is formed blockwise and
  inherits the clique sparsity of the relaxation; the symmetric quasidefinite
  KKT system is factored with a sparse LU (dense for small problems).  The
  iteration is deterministic: identical inputs and options produce bitwise
  identical iterates.
- ``cvxopt``: feeds the problem through the text export/import round trip and
  into ``cvxopt.solvers.conelp``, giving an independent cross-check of the
  bundled backend.

Before solving, every PSD block map is normalized to unit Frobenius norm and
every equality row to unit Euclidean norm; the per-moment magnitude hints
carried by the relaxation (``moment_scales``) rescale the variables.  All
reported quantities (``y``, objective) are mapped back to original units.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .relaxation import SdpProblem, from_sdp_text, to_sdp_text


class SolverError(RuntimeError):
    """Backend-level failure unrelated to problem conditioning."""


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    NEAR_OPTIMAL = "near_optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"

    def solved(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.NEAR_OPTIMAL)


@dataclass(frozen=True)
class SolverOptions:
    """Termination controls shared by every backend.

    ``abs_tol`` bounds the (normalized) primal and dual residuals, ``rel_tol``
    the relative duality gap.  ``backend`` names a registered backend.
    """

    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_iters: int = 200
    verbosity: int = 0
    backend: str = "interior-point"

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


# Looser fixed gates for classifying an unconverged but usable iterate.
# Degenerate moment relaxations hit a double-precision floor in the Schur
# system around 1e-6; an iterate within these gates still carries ~5 correct
# digits in the objective, which downstream extraction tolerates.
_NEAR_GAP = 1e-4
_NEAR_RES = 1e-5


@dataclass(frozen=True)
class SolverResult:
    """Outcome of one solve call.

    ``y`` is present exactly when the status is optimal or near-optimal; for
    numerical failures the last iterate travels in ``diagnostics['last_y']``.
    ``objective`` is +inf for infeasible problems, -inf for unbounded ones and
    NaN on numerical failure.
    """

    status: SolveStatus
    y: Optional[np.ndarray]
    objective: float
    iterations: int
    wall_time: float
    diagnostics: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if (self.y is not None) != self.status.solved():
            raise ValueError("y must be present exactly for solved statuses")


@dataclass(frozen=True)
class ResidualReport:
    """Feasibility and objective residuals of a candidate moment vector."""

    max_equality_residual: float
    min_block_eigenvalue: float
    objective_delta: float
    within_tolerance: bool


def verify_result(sdp: SdpProblem, res: SolverResult, tol: float) -> ResidualReport:
    """Recompute residuals of a solved result against the original problem.

    The tolerance check is relative: equality residuals against ``tol``
    directly, block eigenvalues against ``-tol * (1 + block Frobenius norm)``
    and the objective recomputation against ``tol * (1 + |objective|)``.
    """
    if res.y is None:
        raise ValueError("verify_result requires a solved result with y")
    return verify_vector(sdp, res.y, tol, reported_objective=res.objective)


def verify_vector(
    sdp: SdpProblem,
    y: np.ndarray,
    tol: float,
    reported_objective: Optional[float] = None,
) -> ResidualReport:
    """Residual report for an arbitrary moment vector (Dirac checks, tests)."""
    max_eq = 0.0
    for row in sdp.equalities:
        max_eq = max(max_eq, abs(row.residual(y)))
    min_eig = math.inf
    eig_ok = True
    for block in sdp.psd_blocks:
        mat = block.assemble(y)
        smallest = float(np.linalg.eigvalsh(mat)[0]) if block.size else 0.0
        min_eig = min(min_eig, smallest)
        if smallest < -tol * (1.0 + float(np.linalg.norm(mat))):
            eig_ok = False
    if min_eig is math.inf:
        min_eig = 0.0
    value = sdp.objective.evaluate(y)
    if reported_objective is None:
        delta = 0.0
    else:
        delta = abs(value - reported_objective)
    ok = eig_ok and max_eq <= tol and delta <= tol * (1.0 + abs(value))
    return ResidualReport(max_eq, min_eig, delta, ok)


# ---------------------------------------------------------------------------
# Compilation to scaled array form
# ---------------------------------------------------------------------------


class _CompiledBlock:
    """One PSD block as dense arrays over its touched moment indices."""

    __slots__ = ("size", "constant", "indices", "tensor", "norm")

    def __init__(self, block, scales: np.ndarray) -> None:
        n = block.size
        self.size = n
        constant = np.zeros((n, n))
        touched: Dict[int, int] = {}
        coo: List[Tuple[int, int, int, float]] = []  # (local, i, j, coeff)
        for i, j, form in block.entries:
            if form.constant != 0.0:
                constant[i, j] = form.constant
                constant[j, i] = form.constant
            for idx, coeff in zip(form.indices, form.coefficients):
                local = touched.setdefault(idx, len(touched))
                coo.append((local, i, j, coeff * scales[idx]))
        self.indices = np.fromiter(touched.keys(), dtype=np.int64, count=len(touched))
        tensor = np.zeros((len(touched), n, n))
        for local, i, j, coeff in coo:
            tensor[local, i, j] += coeff
            if i != j:
                tensor[local, j, i] += coeff
        norm = math.sqrt(float(np.sum(constant**2)) + float(np.sum(tensor**2)))
        self.norm = norm if norm > 0.0 else 1.0
        self.constant = constant / self.norm
        self.tensor = tensor / self.norm

    def map_value(self, y: np.ndarray) -> np.ndarray:
        """C + sum_i y_i A_i over the scaled data."""
        if len(self.indices) == 0:
            return self.constant.copy()
        return self.constant + np.tensordot(y[self.indices], self.tensor, axes=(0, 0))

    def adjoint_into(self, matrix: np.ndarray, out: np.ndarray, sign: float = 1.0) -> None:
        """out += sign * A^*(matrix) scattered over global indices."""
        if len(self.indices) == 0:
            return
        out[self.indices] += sign * np.einsum("mij,ij->m", self.tensor, matrix)


class _Compiled:
    """Scaled standard form plus the bookkeeping to undo the scaling."""

    def __init__(self, sdp: SdpProblem) -> None:
        self.y_dim = sdp.y_dim
        scales = (
            np.asarray(sdp.moment_scales, dtype=float)
            if sdp.moment_scales
            else np.ones(sdp.y_dim)
        )
        if scales.size != sdp.y_dim:
            scales = np.ones(sdp.y_dim)
        self.y_scales = scales
        self.blocks = [_CompiledBlock(b, scales) for b in sdp.psd_blocks]
        self.cone_dim = sum(b.size for b in self.blocks)

        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []
        rhs: List[float] = []
        for r_idx, row in enumerate(sdp.equalities):
            coeffs = np.asarray(row.form.coefficients) * scales[list(row.form.indices)]
            norm = float(np.linalg.norm(coeffs))
            norm = norm if norm > 0.0 else 1.0
            for idx, coeff in zip(row.form.indices, coeffs):
                rows.append(r_idx)
                cols.append(idx)
                vals.append(coeff / norm)
            rhs.append(row.rhs / norm)
        self.n_eq = len(sdp.equalities)
        self.E = scipy.sparse.csr_matrix(
            (vals, (rows, cols)), shape=(self.n_eq, sdp.y_dim)
        )
        self.b = np.asarray(rhs)

        self.c = np.zeros(sdp.y_dim)
        for idx, coeff in zip(sdp.objective.indices, sdp.objective.coefficients):
            self.c[idx] += coeff * scales[idx]

        self._build_panels()

    def _build_panels(self) -> None:
        """Group blocks whose index sets nest, so the Schur complement is
        accumulated into one dense panel per clique."""
        owners: List[Tuple[set, List[int]]] = []
        ordered = sorted(
            range(len(self.blocks)),
            key=lambda k: -len(self.blocks[k].indices),
        )
        for k in ordered:
            blk = self.blocks[k]
            if len(blk.indices) == 0:
                continue
            blk_set = set(blk.indices.tolist())
            placed = False
            for idx_set, members in owners:
                if blk_set <= idx_set:
                    members.append(k)
                    placed = True
                    break
            if not placed:
                owners.append((blk_set, [k]))
        self.panels = []
        for idx_set, members in owners:
            panel_idx = np.fromiter(sorted(idx_set), dtype=np.int64)
            lookup = {int(g): p for p, g in enumerate(panel_idx)}
            resolved = [
                (
                    k,
                    np.array(
                        [lookup[int(g)] for g in self.blocks[k].indices],
                        dtype=np.int64,
                    ),
                )
                for k in members
            ]
            grid_r = np.repeat(panel_idx, panel_idx.size)
            grid_c = np.tile(panel_idx, panel_idx.size)
            self.panels.append((panel_idx, resolved, grid_r, grid_c))


# ---------------------------------------------------------------------------
# Bundled interior-point backend
# ---------------------------------------------------------------------------


def _symmetrize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _nt_scaling_inverse(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Inverse of the Nesterov-Todd point W (the W with W Z W = X):
    W^{-1} = X^{-1/2} (X^{1/2} Z X^{1/2})^{1/2} X^{-1/2}."""
    ex, Px = np.linalg.eigh(X)
    ex = np.maximum(ex, 1e-300)
    sqrt_x = (Px * np.sqrt(ex)) @ Px.T
    isqrt_x = (Px / np.sqrt(ex)) @ Px.T
    es, Ps = np.linalg.eigh(_symmetrize(sqrt_x @ Z @ sqrt_x))
    es = np.maximum(es, 1e-300)
    half = isqrt_x @ ((Ps * np.sqrt(np.sqrt(es))) @ Ps.T)
    return _symmetrize(half @ half.T)


def _max_cone_step(current: np.ndarray, direction: np.ndarray) -> float:
    """sup {a : current + a*direction is PSD}, given current PD."""
    if current.size == 0:
        return math.inf
    smallest = float(
        scipy.linalg.eigh(direction, current, eigvals_only=True)[0]
    )
    if smallest >= 0.0:
        return math.inf
    return -1.0 / smallest


def _is_pd(mat: np.ndarray) -> bool:
    if mat.size == 0:
        return True
    try:
        np.linalg.cholesky(mat)
        return True
    except np.linalg.LinAlgError:
        return False


class _Kkt:
    """Factorization of [[H + dI, E'], [E, -dI]] with iterative refinement."""

    def __init__(self, comp: _Compiled, h_data: List[np.ndarray], delta: float) -> None:
        y_dim, n_eq = comp.y_dim, comp.n_eq
        dim = y_dim + n_eq
        rows = [np.arange(dim)]
        cols = [np.arange(dim)]
        data = [np.concatenate([np.full(y_dim, delta), np.full(n_eq, -delta)])]
        for (panel_idx, _, grid_r, grid_c), panel in zip(comp.panels, h_data):
            rows.append(grid_r)
            cols.append(grid_c)
            data.append(panel.ravel())
        if n_eq:
            e_coo = comp.E.tocoo()
            rows.append(e_coo.row + y_dim)
            cols.append(e_coo.col)
            data.append(e_coo.data)
            rows.append(e_coo.col)
            cols.append(e_coo.row + y_dim)
            data.append(e_coo.data)
        matrix = scipy.sparse.csc_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        self.matrix = matrix
        self.y_dim = y_dim
        if dim <= 500:
            self._dense = scipy.linalg.lu_factor(matrix.toarray())
            self._sparse = None
        else:
            self._dense = None
            self._sparse = scipy.sparse.linalg.splu(matrix)

    def _solve_once(self, rhs: np.ndarray) -> np.ndarray:
        if self._dense is not None:
            return scipy.linalg.lu_solve(self._dense, rhs)
        return self._sparse.solve(rhs)

    def solve(self, top: np.ndarray, bottom: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rhs = np.concatenate([top, bottom])
        scale = 1.0 + float(np.linalg.norm(rhs))
        sol = self._solve_once(rhs)
        for _ in range(3):
            residual = rhs - self.matrix @ sol
            if float(np.linalg.norm(residual)) <= 1e-13 * scale:
                break
            sol = sol + self._solve_once(residual)
        return sol[: self.y_dim], sol[self.y_dim :]


def _solve_interior_point(sdp: SdpProblem, opts: SolverOptions) -> SolverResult:
    start = time.perf_counter()
    comp = _Compiled(sdp)
    y_dim = comp.y_dim

    if y_dim == 0:
        value = sdp.objective.evaluate(np.zeros(0))
        return SolverResult(
            SolveStatus.OPTIMAL, np.zeros(0), value, 0, time.perf_counter() - start
        )

    blocks = comp.blocks
    total_cone = max(comp.cone_dim, 1)
    y = np.zeros(y_dim)
    nu = np.zeros(comp.n_eq)
    X = [np.eye(b.size) * (1.0 + np.linalg.norm(b.constant)) for b in blocks]
    Z = [np.eye(b.size) * (1.0 + np.linalg.norm(b.constant)) for b in blocks]
    c_ref = 1.0 + float(np.max(np.abs(comp.c))) if y_dim else 1.0

    status = SolveStatus.NUMERICAL_FAILURE
    stall_ref = math.inf
    stall = 0
    iterations = 0
    relgap = pres = dres = math.inf
    note = "iteration limit reached"
    # Best iterate seen so far: Schur-based steps eventually hit a numerical
    # floor where the gap keeps shrinking while dual feasibility drifts; the
    # reported solution is the iterate with the smallest worst-case merit.
    best_merit = math.inf
    best_y = y
    best_triple = (relgap, pres, dres)
    best_iteration = 0

    for iteration in range(1, opts.max_iters + 1):
        iterations = iteration
        maps = [b.map_value(y) for b in blocks]
        residual_blocks = [m - x for m, x in zip(maps, X)]
        r_p = comp.b - comp.E @ y if comp.n_eq else np.zeros(0)
        r_d = comp.c.copy()
        if comp.n_eq:
            r_d -= comp.E.T @ nu
        for b, z in zip(blocks, Z):
            b.adjoint_into(z, r_d, sign=-1.0)

        gap = sum(float(np.tensordot(x, z)) for x, z in zip(X, Z))
        mu = gap / total_cone
        pobj = float(comp.c @ y)
        dobj = float(comp.b @ nu) if comp.n_eq else 0.0
        dobj -= sum(float(np.tensordot(b.constant, z)) for b, z in zip(blocks, Z))
        relgap = gap / (1.0 + abs(pobj) + abs(dobj))
        pres_blocks = max(
            (
                float(np.linalg.norm(rb)) / (1.0 + np.linalg.norm(b.constant))
                for rb, b in zip(residual_blocks, blocks)
            ),
            default=0.0,
        )
        pres = max(
            float(np.max(np.abs(r_p))) if comp.n_eq else 0.0, pres_blocks
        )
        dres = float(np.max(np.abs(r_d))) / c_ref

        if opts.verbosity > 0:
            print(
                f"iter {iteration:3d} gap {relgap:9.2e} "
                f"pres {pres:9.2e} dres {dres:9.2e}"
            )

        merit = max(relgap, pres, dres)
        if merit < best_merit:
            best_merit = merit
            best_y = y.copy()
            best_triple = (relgap, pres, dres)
            best_iteration = iteration

        if relgap <= opts.rel_tol and pres <= opts.abs_tol and dres <= opts.abs_tol:
            status = SolveStatus.OPTIMAL
            note = "converged"
            break
        if dobj > 1e12 and dres <= 1e-7:
            return SolverResult(
                SolveStatus.INFEASIBLE,
                None,
                math.inf,
                iteration,
                time.perf_counter() - start,
                {"note": "dual objective diverging"},
            )
        if pobj < -1e12 and pres <= 1e-7:
            return SolverResult(
                SolveStatus.UNBOUNDED,
                None,
                -math.inf,
                iteration,
                time.perf_counter() - start,
                {"note": "primal objective diverging"},
            )

        if merit < 0.9 * stall_ref:
            stall_ref = merit
            stall = 0
        else:
            stall += 1
        near_best = (
            best_triple[0] <= _NEAR_GAP
            and best_triple[1] <= _NEAR_RES
            and best_triple[2] <= _NEAR_RES
        )
        if stall >= 3 and near_best:
            note = "numerical floor reached"
            break
        if stall >= 10:
            note = "progress stalled"
            break

        # Per-block NT scaling: G = W^{-1}, its PD square root S (lambda =
        # S X S = S^{-1} Z S^{-1} is the shared scaled point), and lambda's
        # eigenbasis for the Jordan-product solves below.
        scal = []
        roots = []
        root_invs = []
        lam_d = []
        lam_q = []
        for x, z in zip(X, Z):
            g = _nt_scaling_inverse(x, z)
            gw, gv = np.linalg.eigh(g)
            gw = np.clip(gw, 1e-300, None)
            sqrt_gw = np.sqrt(gw)
            s = (gv * sqrt_gw) @ gv.T
            s_inv = (gv / sqrt_gw) @ gv.T
            d, q = np.linalg.eigh(_symmetrize(s @ x @ s))
            scal.append(g)
            roots.append(s)
            root_invs.append(s_inv)
            lam_d.append(np.clip(d, 1e-300, None))
            lam_q.append(q)

        h_data = []
        for (panel_idx, members, _, _) in comp.panels:
            panel = np.zeros((panel_idx.size, panel_idx.size))
            for k, pos in members:
                blk = blocks[k]
                g = scal[k]
                tmp = np.matmul(blk.tensor, g)
                scaled = np.matmul(g, tmp)
                m = blk.tensor.shape[0]
                local = blk.tensor.reshape(m, -1) @ scaled.reshape(m, -1).T
                local = 0.5 * (local + local.T)
                panel[pos[:, None], pos[None, :]] += local
            h_data.append(panel)

        delta = 1e-12 * (1.0 + mu)
        try:
            kkt = _Kkt(comp, h_data, delta)
        except RuntimeError:
            note = "KKT factorization failed"
            break

        def directions(targets: List[np.ndarray]):
            top = -r_d.copy()
            for blk, g, target, residual in zip(
                blocks, scal, targets, residual_blocks
            ):
                inner = _symmetrize(g @ (target - residual) @ g)
                blk.adjoint_into(inner, top)
            dy, neg_dnu = kkt.solve(top, r_p)
            dnu = -neg_dnu
            dX = [
                blk.map_value(y + dy) - blk.map_value(y) + residual
                for blk, residual in zip(blocks, residual_blocks)
            ]
            dZ = [
                _symmetrize(g @ (target - dx) @ g)
                for g, target, dx in zip(scal, targets, dX)
            ]
            return dy, dnu, dX, dZ

        # Predictor: pure Newton step toward the boundary.
        aff = directions([-x for x in X])
        alpha_p_aff = min(
            1.0, min((_max_cone_step(x, dx) for x, dx in zip(X, aff[2])), default=math.inf)
        )
        alpha_d_aff = min(
            1.0, min((_max_cone_step(z, dz) for z, dz in zip(Z, aff[3])), default=math.inf)
        )
        gap_aff = sum(
            float(np.tensordot(x + alpha_p_aff * dx, z + alpha_d_aff * dz))
            for x, dx, z, dz in zip(X, aff[2], Z, aff[3])
        )
        sigma = min(0.999, max(1e-8, (max(gap_aff, 0.0) / gap) ** 3))

        # Mehrotra corrector: in the scaled space the combined step solves
        # lambda o (dx~ + dz~) = sigma*mu*I - lambda^2 - sym(dx~_aff dz~_aff),
        # done exactly in lambda's eigenbasis, then mapped back through S.
        targets = []
        for k in range(len(blocks)):
            s, s_inv, d, q = roots[k], root_invs[k], lam_d[k], lam_q[k]
            cross = _symmetrize(s @ aff[2][k] @ aff[3][k] @ s_inv)
            rhs = -(q.T @ cross @ q)
            rhs[np.diag_indices_from(rhs)] += sigma * mu - d * d
            jordan = 2.0 * rhs / (d[:, None] + d[None, :])
            target = s_inv @ (q @ jordan @ q.T) @ s_inv
            if not np.all(np.isfinite(target)):
                centered = (q * (sigma * mu / d - d)) @ q.T
                target = s_inv @ centered @ s_inv
            targets.append(_symmetrize(target))

        dy, dnu, dX, dZ = directions(targets)
        alpha_p = min(
            1.0,
            0.98
            * min((_max_cone_step(x, dx) for x, dx in zip(X, dX)), default=math.inf),
        )
        alpha_d = min(
            1.0,
            0.98
            * min((_max_cone_step(z, dz) for z, dz in zip(Z, dZ)), default=math.inf),
        )

        accepted = False
        for _ in range(6):
            new_x = [x + alpha_p * dx for x, dx in zip(X, dX)]
            new_z = [z + alpha_d * dz for z, dz in zip(Z, dZ)]
            if all(_is_pd(m) for m in new_x) and all(_is_pd(m) for m in new_z):
                accepted = True
                break
            alpha_p *= 0.5
            alpha_d *= 0.5
        if not accepted or not np.all(np.isfinite(dy)):
            note = "step rejected"
            break

        y = y + alpha_p * dy
        nu = nu + alpha_d * dnu
        X = new_x
        Z = new_z

    wall = time.perf_counter() - start
    relgap, pres, dres = best_triple
    y_orig = comp.y_scales * best_y
    value = sdp.objective.evaluate(y_orig)
    diagnostics = {
        "note": note,
        "relative_gap": relgap,
        "primal_residual": pres,
        "dual_residual": dres,
        "best_iteration": best_iteration,
    }
    if status is SolveStatus.OPTIMAL:
        return SolverResult(status, y_orig, value, iterations, wall, diagnostics)
    if relgap <= _NEAR_GAP and pres <= _NEAR_RES and dres <= _NEAR_RES:
        return SolverResult(
            SolveStatus.NEAR_OPTIMAL, y_orig, value, iterations, wall, diagnostics
        )
    diagnostics["last_y"] = y_orig
    return SolverResult(
        SolveStatus.NUMERICAL_FAILURE,
        None,
        math.nan,
        iterations,
        wall,
        diagnostics,
    )


# ---------------------------------------------------------------------------
# cvxopt backend (through the text export, as an independent path)
# ---------------------------------------------------------------------------


def _solve_cvxopt(sdp: SdpProblem, opts: SolverOptions) -> SolverResult:
    try:
        import cvxopt
        import cvxopt.solvers
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise SolverError("the cvxopt backend requires the cvxopt package") from exc

    start = time.perf_counter()
    prob = from_sdp_text(to_sdp_text(sdp))
    y_dim = prob.y_dim
    if y_dim == 0:
        value = sdp.objective.evaluate(np.zeros(0))
        return SolverResult(
            SolveStatus.OPTIMAL, np.zeros(0), value, 0, time.perf_counter() - start
        )

    g_rows: List[int] = []
    g_cols: List[int] = []
    g_vals: List[float] = []
    h_parts: List[np.ndarray] = []
    offset = 0
    sizes = []
    for block in prob.psd_blocks:
        n = block.size
        sizes.append(n)
        constant = np.zeros((n, n))
        for i, j, form in block.entries:
            constant[i, j] = form.constant
            constant[j, i] = form.constant
            for idx, coeff in zip(form.indices, form.coefficients):
                g_rows.append(offset + j * n + i)
                g_cols.append(idx)
                g_vals.append(-coeff)
                if i != j:
                    g_rows.append(offset + i * n + j)
                    g_cols.append(idx)
                    g_vals.append(-coeff)
        h_parts.append(constant.ravel(order="F"))
        offset += n * n
    G = cvxopt.spmatrix(g_vals, g_rows, g_cols, (offset, y_dim))
    h = cvxopt.matrix(np.concatenate(h_parts) if h_parts else np.zeros(0))
    c = np.zeros(y_dim)
    for idx, coeff in zip(prob.objective.indices, prob.objective.coefficients):
        c[idx] += coeff

    A = b = None
    if prob.equalities:
        dense_e = np.zeros((len(prob.equalities), y_dim))
        rhs = np.zeros(len(prob.equalities))
        for r, row in enumerate(prob.equalities):
            for idx, coeff in zip(row.form.indices, row.form.coefficients):
                dense_e[r, idx] += coeff
            rhs[r] = row.rhs
        keep = _independent_rows(dense_e)
        a_rows, a_cols = np.nonzero(dense_e[keep])
        A = cvxopt.spmatrix(
            dense_e[keep][a_rows, a_cols], a_rows, a_cols, (len(keep), y_dim)
        )
        b = cvxopt.matrix(rhs[keep])

    saved = dict(cvxopt.solvers.options)
    cvxopt.solvers.options.update(
        {
            "show_progress": opts.verbosity > 1,
            "maxiters": opts.max_iters,
            "abstol": opts.abs_tol,
            "reltol": opts.rel_tol,
            "feastol": max(opts.abs_tol, 1e-9),
        }
    )
    try:
        sol = cvxopt.solvers.conelp(
            cvxopt.matrix(c), G, h, dims={"l": 0, "q": [], "s": sizes}, A=A, b=b
        )
    finally:
        cvxopt.solvers.options.clear()
        cvxopt.solvers.options.update(saved)

    wall = time.perf_counter() - start
    iterations = int(sol.get("iterations", 0))
    raw_status = sol["status"]
    x = sol["x"]
    y = np.asarray(x).ravel() if x is not None else None
    diagnostics = {"cvxopt_status": raw_status}

    if raw_status == "primal infeasible":
        return SolverResult(
            SolveStatus.INFEASIBLE, None, math.inf, iterations, wall, diagnostics
        )
    if raw_status == "dual infeasible":
        return SolverResult(
            SolveStatus.UNBOUNDED, None, -math.inf, iterations, wall, diagnostics
        )
    if y is None:
        return SolverResult(
            SolveStatus.NUMERICAL_FAILURE, None, math.nan, iterations, wall, diagnostics
        )
    value = sdp.objective.evaluate(y)
    if raw_status == "optimal":
        report = verify_vector(sdp, y, 10.0 * max(opts.abs_tol, 1e-8))
        status = SolveStatus.OPTIMAL if report.within_tolerance else SolveStatus.NEAR_OPTIMAL
        return SolverResult(status, y, value, iterations, wall, diagnostics)
    # 'unknown': keep the iterate when it is usable, else report failure.
    report = verify_vector(sdp, y, 1e-5)
    if report.within_tolerance:
        return SolverResult(
            SolveStatus.NEAR_OPTIMAL, y, value, iterations, wall, diagnostics
        )
    diagnostics["last_y"] = y
    return SolverResult(
        SolveStatus.NUMERICAL_FAILURE, None, math.nan, iterations, wall, diagnostics
    )


# ---------------------------------------------------------------------------
# clarabel backend (external sparse interior-point, same standard form)
# ---------------------------------------------------------------------------


def _solve_clarabel(sdp: SdpProblem, opts: SolverOptions) -> SolverResult:
    try:
        import clarabel
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise SolverError("the clarabel backend requires the clarabel package") from exc
    import scipy.sparse as sparse

    start = time.perf_counter()
    prob = from_sdp_text(to_sdp_text(sdp))
    y_dim = prob.y_dim
    if y_dim == 0:
        value = sdp.objective.evaluate(np.zeros(0))
        return SolverResult(
            SolveStatus.OPTIMAL, np.zeros(0), value, 0, time.perf_counter() - start
        )

    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    b_parts: List[np.ndarray] = []
    cones = []
    offset = 0

    if prob.equalities:
        for r, row in enumerate(prob.equalities):
            for idx, coeff in zip(row.form.indices, row.form.coefficients):
                rows.append(offset + r)
                cols.append(idx)
                vals.append(coeff)
        b_parts.append(np.array([row.rhs for row in prob.equalities]))
        cones.append(clarabel.ZeroConeT(len(prob.equalities)))
        offset += len(prob.equalities)

    sqrt2 = math.sqrt(2.0)
    for block in prob.psd_blocks:
        n = block.size
        tri = n * (n + 1) // 2
        constant = np.zeros(tri)
        for i, j, form in block.entries:
            lo, hi = (i, j) if i <= j else (j, i)
            pos = hi * (hi + 1) // 2 + lo
            scale = 1.0 if lo == hi else sqrt2
            constant[pos] = form.constant * scale
            for idx, coeff in zip(form.indices, form.coefficients):
                rows.append(offset + pos)
                cols.append(idx)
                vals.append(-coeff * scale)
        b_parts.append(constant)
        cones.append(clarabel.PSDTriangleConeT(n))
        offset += tri

    a_mat = sparse.csc_matrix(
        (vals, (rows, cols)), shape=(offset, y_dim), dtype=float
    )
    b = np.concatenate(b_parts) if b_parts else np.zeros(0)
    q = np.zeros(y_dim)
    for idx, coeff in zip(prob.objective.indices, prob.objective.coefficients):
        q[idx] += coeff
    p_mat = sparse.csc_matrix((y_dim, y_dim), dtype=float)

    settings = clarabel.DefaultSettings()
    settings.verbose = opts.verbosity > 1
    settings.max_iter = opts.max_iters
    settings.tol_gap_abs = min(opts.abs_tol, 1e-9)
    settings.tol_gap_rel = min(opts.rel_tol, 1e-9)
    settings.tol_feas = min(max(opts.abs_tol, 1e-10), 1e-9)

    solver = clarabel.DefaultSolver(p_mat, q, a_mat, b, cones, settings)
    sol = solver.solve()
    wall = time.perf_counter() - start
    iterations = int(sol.iterations)
    status_name = str(sol.status)
    diagnostics: Dict[str, object] = {"clarabel_status": status_name}
    y = np.asarray(sol.x, dtype=float) if sol.x is not None else None

    if "PrimalInfeasible" in status_name:
        return SolverResult(
            SolveStatus.INFEASIBLE, None, math.inf, iterations, wall, diagnostics
        )
    if "DualInfeasible" in status_name:
        return SolverResult(
            SolveStatus.UNBOUNDED, None, -math.inf, iterations, wall, diagnostics
        )
    if y is None:
        return SolverResult(
            SolveStatus.NUMERICAL_FAILURE, None, math.nan, iterations, wall, diagnostics
        )
    value = sdp.objective.evaluate(y)
    if status_name == "SolverStatus.Solved" or status_name == "Solved":
        # static KKT regularization floors the attainable block interiority
        # near 1e-7 regardless of the requested gap, so the optimality gate
        # sits two decades above the gap tolerance
        report = verify_vector(sdp, y, 100.0 * max(opts.abs_tol, 1e-8))
        status = (
            SolveStatus.OPTIMAL if report.within_tolerance else SolveStatus.NEAR_OPTIMAL
        )
        return SolverResult(status, y, value, iterations, wall, diagnostics)
    report = verify_vector(sdp, y, 1e-5)
    if report.within_tolerance:
        return SolverResult(
            SolveStatus.NEAR_OPTIMAL, y, value, iterations, wall, diagnostics
        )
    diagnostics["last_y"] = y
    return SolverResult(
        SolveStatus.NUMERICAL_FAILURE, None, math.nan, iterations, wall, diagnostics
    )


def _independent_rows(matrix: np.ndarray) -> np.ndarray:
    """Indices of a maximal linearly independent row subset (QR pivoting)."""
    if matrix.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    _, r, piv = scipy.linalg.qr(matrix.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(0, dtype=np.int64)
    rank = int(np.sum(diag > diag[0] * max(matrix.shape) * np.finfo(float).eps))
    return np.sort(piv[:rank])


# ---------------------------------------------------------------------------
# Backend registry and entry point
# ---------------------------------------------------------------------------

Backend = Callable[[SdpProblem, SolverOptions], SolverResult]

_BACKENDS: Dict[str, Backend] = {
    "interior-point": _solve_interior_point,
    "cvxopt": _solve_cvxopt,
    "clarabel": _solve_clarabel,
}


def register_backend(name: str, backend: Backend) -> None:
    _BACKENDS[name] = backend


def available_backends() -> Tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def solve(sdp: SdpProblem, opts: Optional[SolverOptions] = None) -> SolverResult:
    """Solve a relaxation with the backend named in the options."""
    options = opts if opts is not None else SolverOptions()
    try:
        backend = _BACKENDS[options.backend]
    except KeyError:
        raise ValueError(
            f"unknown backend {options.backend!r}; available: {available_backends()}"
        ) from None
    return backend(sdp, options)
