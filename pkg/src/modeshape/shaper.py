"""Constrained pulse synthesis.

The solver nulls the first-order Magnus integrals of all non-target modes
(and, for stabilization moment K >= 1, the first K frequency derivatives for
every mode), then maximizes the target-mode response inside the remaining
null space.  Everything reduces to one SVD plus a rank-1 eigenproblem whose
top eigenvector is explicit.

Optionally, ordered second-order integrals of selected off-diagonal mode
pairs are nulled as well by intersecting the first-order null space with the
near-null subspaces of the per-pair kernel matrices.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleBasisError, NoSignalError, ValidationError
from .magnus import MagnusReport, _ordered_kernel, magnus_report, phase_integral
from .modes import ModeSpec
from .pulses import DEFAULT_WINDOW, BasisGrid, Pulse, build_basis

# Relative singular-value threshold separating rank from null space.  Rows
# are rescaled to O(1) first, so rank separates cleanly at double precision.
NULL_SPACE_TOL = 1e-12

# Eigenvalue threshold (relative, on the conjugate-transpose product) below
# which a direction counts as nulling a second-order kernel.
SECOND_ORDER_EIG_TOL = 1e-10

# Extra null-space dimensions demanded beyond the constraint count, so the
# signal maximization has room to converge.
_MIN_SLACK = 4


@dataclass(frozen=True)
class ShapeRequest:
    """Solver input.

    ``alpha`` is the requested value of |theta1| on the target mode;
    ``moment`` the stabilization order K (how many frequency derivatives are
    nulled); ``second_order_pairs`` an optional list of ordered off-diagonal
    mode pairs whose second-order integrals are nulled too.
    """

    spec: ModeSpec
    target: int
    tau: float
    alpha: float = 1.0
    moment: int = 0
    window: float = DEFAULT_WINDOW
    second_order_pairs: tuple = ()

    def __post_init__(self):
        if not 0 <= self.target < self.spec.n_modes:
            raise ValidationError(
                f"target mode {self.target} out of range [0, {self.spec.n_modes})"
            )
        if self.tau <= 0:
            raise ValidationError("tau must be positive")
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        if self.moment < 0:
            raise ValidationError("moment must be >= 0")
        object.__setattr__(
            self,
            "second_order_pairs",
            tuple((int(p), int(q)) for p, q in self.second_order_pairs),
        )

    @property
    def n_constraints(self) -> int:
        return (self.spec.n_modes - 1) + self.moment * self.spec.n_modes


@dataclass(frozen=True)
class PulseSolution:
    """Solver output: the pulse plus solve diagnostics."""

    pulse: Pulse
    alpha: float
    moment: int
    target: int
    null_space_dim: int
    lambda_max: float
    diagnostics: MagnusReport
    cmc_residual: float = 0.0
    deriv_residual: float = 0.0


def build_constraint_matrix(
    spec: ModeSpec, grid: BasisGrid, target: int, moment: int
) -> np.ndarray:
    """Scaled constraint matrix whose null space holds admissible pulses.

    Rows: one zeroth-order row per non-target mode, then K rows per mode for
    the derivative orders 1..K.  Rows of order kappa are divided by
    tau^(kappa+1) so every row is O(1); the null space is unchanged.
    """
    tau = grid.tau
    freqs = grid.frequencies
    offsets = spec.omega[:, None] - freqs[None, :]
    off_target = offsets[[p for p in range(spec.n_modes) if p != target], :]
    blocks = [phase_integral(off_target, 0, tau) / tau]
    for kappa in range(1, moment + 1):
        blocks.append(phase_integral(offsets, kappa, tau) / tau ** (kappa + 1))
    return np.vstack(blocks).astype(complex)


def target_row(spec: ModeSpec, grid: BasisGrid, target: int) -> np.ndarray:
    """Unscaled zeroth-order row of the target mode: theta1 = row @ coeffs."""
    return phase_integral(spec.omega[target] - grid.frequencies, 0, grid.tau)


def null_space(matrix: np.ndarray, tol: float = NULL_SPACE_TOL):
    """Orthonormal right-null-space basis via SVD.

    Returns ``(basis, rank)``; callers that know the expected rank can check
    for row-rank deficiency.
    """
    if matrix.size == 0:
        n = matrix.shape[1]
        return np.eye(n, dtype=complex), 0
    _, s, vh = np.linalg.svd(matrix)
    rank = int(np.sum(s > tol * s[0]))
    basis = vh[rank:].conj().T
    if basis.shape[1] == 0:
        raise InfeasibleBasisError(
            "constraint matrix has an empty null space; "
            "increase tau or widen the basis window"
        )
    return basis, rank


def maximize_signal(null_basis: np.ndarray, v: np.ndarray, alpha: float) -> np.ndarray:
    """Coefficients maximizing |v . A| at fixed power inside span(null_basis).

    With an orthonormal basis N the matrix N^H v v^H N is rank one, so its
    top eigenvector is N^H v itself; the solution is
    ``A = (alpha / sqrt(lambda_max)) N xi`` with ``lambda_max = |N^H v|^2``.
    """
    proj = null_basis.conj().T @ v.conj()
    lam = float(np.real(proj.conj() @ proj))
    if lam <= (1e-12 * np.linalg.norm(v)) ** 2:
        raise NoSignalError(
            "target row is orthogonal to the constraint null space; "
            "no signal can be produced under these constraints"
        )
    xi = proj / np.sqrt(lam)
    coeffs = (alpha / np.sqrt(lam)) * (null_basis @ xi)
    # Global-phase convention for reproducible output files: first
    # significant coefficient made real-positive.
    mags = np.abs(coeffs)
    j = int(np.argmax(mags > 1e-12 * mags.max()))
    coeffs = coeffs * (coeffs[j].conjugate() / mags[j])
    return coeffs


def intersect_subspaces(s1: np.ndarray, s2: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of span(s1) & span(s2).

    Stacks the bases into ``U = (S1 | -S2)``: each null vector of U encodes
    one intersection vector through its S1 block.  Returns an (n, 0) array
    when the spans meet only at the origin.
    """
    if s1.size == 0 or s2.size == 0:
        return np.zeros((s1.shape[0], 0), dtype=complex)
    if s1.shape[0] != s2.shape[0]:
        raise ValidationError("subspace bases must share their row dimension")
    q1, _ = np.linalg.qr(s1)
    q2, _ = np.linalg.qr(s2)
    u = np.hstack([q1, -q2])
    _, s, vh = np.linalg.svd(u)
    # A combined vector with sigma ~ 0 means the two blocks agree; count by
    # rank so the implicit zeros of a wide U are included.
    rank = int(np.sum(s > tol * s[0]))
    if rank == vh.shape[0]:
        return np.zeros((s1.shape[0], 0), dtype=complex)
    nv = vh[rank:].conj().T
    vecs = q1 @ nv[: q1.shape[1], :]
    q, _ = np.linalg.qr(vecs)
    return q


def _pair_null_space(
    spec: ModeSpec, grid: BasisGrid, pair, eig_tol: float
) -> np.ndarray:
    """Near-null directions of the second-order kernel for one ordered pair.

    The quadratic form is ``sum_{n,n'} A_n K[n,n'] conj(A_n')``; directions
    annihilating its matrix ``B = K^T`` (eigenvalue of B^H B below
    ``eig_tol`` relative, computed via SVD of B) null both the form and its
    conjugate.
    """
    p, q = pair
    a = spec.omega[p] - grid.frequencies
    b = spec.omega[q] - grid.frequencies
    kernel = _ordered_kernel(a, b, grid.tau)
    bmat = kernel.T
    _, s, vh = np.linalg.svd(bmat)
    keep = (s**2) <= eig_tol * (s[0] ** 2)
    return vh[keep].conj().T


def null_second_order(
    spec: ModeSpec,
    grid: BasisGrid,
    target: int,
    pairs,
    moment: int = 0,
    eig_tol: float = SECOND_ORDER_EIG_TOL,
) -> np.ndarray:
    """Subspace nulling first-order constraints plus selected theta2 pairs.

    Diagonal pairs are rejected: their kernels are positive definite and have
    no small singular values, so no linear subspace can null them.
    """
    pairs = [(int(p), int(q)) for p, q in pairs]
    if not pairs:
        raise ValidationError("no mode pairs requested")
    for p, q in pairs:
        if not (0 <= p < spec.n_modes and 0 <= q < spec.n_modes):
            raise ValidationError(f"mode pair ({p}, {q}) out of range")
        if p == q:
            raise ValidationError(
                f"diagonal pair ({p}, {q}) rejected: its kernel is positive "
                "definite and admits no nulling directions"
            )

    basis, _ = null_space(build_constraint_matrix(spec, grid, target, moment))
    for pair in pairs:
        pair_basis = _pair_null_space(spec, grid, pair, eig_tol)
        if pair_basis.shape[1] == 0:
            raise InfeasibleBasisError(
                f"second-order kernel for pair {pair} has no directions below "
                "the nulling threshold"
            )
        basis = intersect_subspaces(basis, pair_basis)
        if basis.shape[1] == 0:
            raise InfeasibleBasisError(
                f"second-order nulling subspaces have empty intersection "
                f"(ran out at pair {pair}); drop pairs or relax the request"
            )
    return basis


def solve_pulse(request: ShapeRequest, second_order_report: bool = False) -> PulseSolution:
    """Solve for a shaped pulse satisfying the request.

    The pipeline is basis enumeration, constraint assembly, null-space
    extraction, optional second-order intersection, and signal maximization.
    Diagnostics carry the achieved Magnus integrals at zero detuning; the
    full second-order block is computed only on demand since it costs
    O(n_modes^2 basis^2).
    """
    spec, tau = request.spec, request.tau
    grid = build_basis(
        tau, spec, request.window, min_size=request.n_constraints + _MIN_SLACK
    )

    if request.second_order_pairs:
        basis = null_second_order(
            spec, grid, request.target, request.second_order_pairs, request.moment
        )
        if basis.shape[1] < 2:
            raise InfeasibleBasisError(
                "second-order intersection leaves no room for signal maximization"
            )
        rank = grid.size - basis.shape[1]
    else:
        matrix = build_constraint_matrix(spec, grid, request.target, request.moment)
        basis, rank = null_space(matrix)
        if rank < matrix.shape[0]:
            warnings.warn(
                f"constraint matrix is row-rank deficient "
                f"(rank {rank} < {matrix.shape[0]} rows)",
                stacklevel=2,
            )

    v = target_row(spec, grid, request.target)
    proj = basis.conj().T @ v.conj()
    lam = float(np.real(proj.conj() @ proj))
    coeffs = maximize_signal(basis, v, request.alpha)
    pulse = Pulse(tau=tau, coeffs=coeffs, indices=grid.indices)

    nominal = ModeSpec(
        n_ions=spec.n_ions, n_modes=spec.n_modes, omega=spec.omega, eta=spec.eta
    )
    report = magnus_report(
        pulse, nominal, k_report=request.moment, second_order=second_order_report
    )
    cmc = [abs(report.theta1[p]) for p in range(spec.n_modes) if p != request.target]
    derivs = [
        abs(report.theta1_derivs[p, k]) / tau ** (k + 1)
        for p in range(spec.n_modes)
        for k in range(request.moment)
    ]
    return PulseSolution(
        pulse=pulse,
        alpha=abs(report.theta1[request.target]),
        moment=request.moment,
        target=request.target,
        null_space_dim=basis.shape[1],
        lambda_max=lam,
        diagnostics=report,
        cmc_residual=max(cmc) if cmc else 0.0,
        deriv_residual=max(derivs) if derivs else 0.0,
    )


def save_solution(solution: PulseSolution, path) -> None:
    """Write the pulse-solution JSON file."""
    pulse = solution.pulse
    doc = {
        "pulse": {
            "tau_us": pulse.tau * 1e6,
            "indices": [int(n) for n in pulse.indices],
            "coeffs": [[c.real, c.imag] for c in pulse.coeffs],
        },
        "alpha": solution.alpha,
        "moment": solution.moment,
        "target": solution.target,
        "null_space_dim": solution.null_space_dim,
        "lambda_max": solution.lambda_max,
        "residuals": {
            "cmc_max": solution.cmc_residual,
            "deriv_max": solution.deriv_residual,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
