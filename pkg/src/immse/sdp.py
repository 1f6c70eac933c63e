"""Semidefinite representation of the information/MMSE trade-off.

The stationary trade-off value at distortion budget D is

    minimize   Tr(A) + Tr(Q)/2
    over       symmetric P (n x n), Q (m x m)
    subject to A P + P A^T + B B^T  >= 0
               [[Q, B^T], [B, P]]  >= 0
               Tr(P) <= D

solved here by a bespoke log-det barrier method: the problem has at most
a few hundred unknowns at desk scale, so a dense Newton iteration on the
central path beats pulling in a general conic solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleError,
    InputValidationError,
    NonConvergenceError,
    NumericError,
)
from .linalg import chol, symmetrize
from .model import (
    DEFAULT_TOLERANCES,
    SystemModel,
    Tolerances,
    check_controllable,
)
from .riccati import _newton_polish

__all__ = ["SdpProblem", "SdpSolution", "build_sdp", "find_feasible_start", "solve"]

_T_GROWTH = 5.0
_INNER_TOL = 1e-10
_MIN_STEP = 1e-14
_MAX_STAGES = 80
_MAX_INNER = 200
_GAMMA_CAP = 2.0**60


@dataclass(frozen=True)
class SdpProblem:
    """Constraint data for one distortion budget."""

    model: SystemModel
    D: float

    def block1(self, P: np.ndarray) -> np.ndarray:
        """A P + P A^T + B B^T, required PSD."""
        A = self.model.A
        AP = A @ P
        return symmetrize(AP + AP.T + self.model.B @ self.model.B.T)

    def block2(self, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
        """[[Q, B^T], [B, P]], required PSD; encodes Q >= B^T P^{-1} B."""
        B = self.model.B
        return np.block([[Q, B.T], [B, P]])

    def block3(self, P: np.ndarray) -> float:
        """D - Tr(P), required nonnegative."""
        return self.D - float(np.trace(P))


@dataclass(frozen=True)
class SdpSolution:
    """Central-path terminal point with its certificate numbers.

    ``lmi_residuals`` holds the minimum eigenvalue of each PSD block and
    the trace slack, in constraint order.
    """

    P: np.ndarray
    Q: np.ndarray
    objective: float
    duality_gap: float
    lmi_residuals: tuple[float, float, float]
    iterations: int


def build_sdp(model: SystemModel, D: float) -> SdpProblem:
    """Validate the budget and assemble the constraint data."""
    if isinstance(D, bool) or not isinstance(D, (int, float)):
        raise InputValidationError(f"D must be a number, got {D!r}")
    D = float(D)
    if not (np.isfinite(D) and D > 0):
        raise InputValidationError(f"D must be finite and > 0, got {D}")
    return SdpProblem(model=model, D=D)


def _stationary_gamma(A: np.ndarray, BBt: np.ndarray, gamma: float) -> np.ndarray:
    """Stationary covariance for the probe sensor C = gamma I.

    Solved by the Kleinman iteration from the stabilizing diagonal seed
    X0 = ((alpha + 1) / gamma^2) I with alpha the spectral abscissa of A:
    A - gamma^2 X0 = A - (alpha + 1) I is Hurwitz by construction, and
    the seed stays well scaled however large gamma grows.
    """
    n = A.shape[0]
    alpha = float(np.linalg.eigvals(A).real.max())
    X0 = ((max(alpha, 0.0) + 1.0) / gamma**2) * np.eye(n)
    CtC = gamma**2 * np.eye(n)
    target = 1e-11 * (1.0 + float(np.linalg.norm(BBt, "fro")))
    X, residual = _newton_polish(A, BBt, CtC, X0, target, max_iter=80)
    if residual > 100.0 * target:
        raise NonConvergenceError(
            f"probe-sensor covariance did not converge (residual {residual:.3e})",
            last_iterate=X,
        )
    return X


def find_feasible_start(problem: SdpProblem) -> tuple[np.ndarray, np.ndarray]:
    """Strictly feasible (P0, Q0) for the barrier method.

    The probe sensor C = gamma I gives a stationary covariance with
    A P + P A^T + B B^T = gamma^2 P^2 > 0, and its trace shrinks to zero
    as gamma grows; doubling gamma until the trace fits strictly under D
    always terminates for D > 0.  Q0 = B^T P0^{-1} B + I then makes the
    second block strictly definite.
    """
    model, D = problem.model, problem.D
    report = check_controllable(model)
    if not report:
        raise InputValidationError(
            f"(A, B) must be a controllable pair, rank {report.rank} of {report.dim}"
        )
    A = model.A
    BBt = model.B @ model.B.T
    gamma = 1.0
    trace_reached = np.inf
    while gamma <= _GAMMA_CAP:
        P0 = _stationary_gamma(A, BBt, gamma)
        trace = float(np.trace(P0))
        trace_reached = min(trace_reached, trace)
        if (
            trace < D * (1.0 - 1e-6)
            and float(np.linalg.eigvalsh(P0).min()) > 0.0
            and chol(problem.block1(P0)) is not None
        ):
            Q0 = symmetrize(
                model.B.T @ np.linalg.solve(P0, model.B) + np.eye(model.m)
            )
            if chol(problem.block2(P0, Q0)) is not None:
                return P0, Q0
        gamma *= 2.0
    raise InfeasibleError(
        f"no strictly feasible point found for D = {D}: smallest trace reached "
        f"was {trace_reached:.6e}",
        trace_reached=trace_reached,
    )


def _sym_basis(k: int) -> np.ndarray:
    """Basis of symmetric k x k matrices: unit diagonals first, then
    unit-pair off-diagonals in row-major order."""
    count = k * (k + 1) // 2
    basis = np.zeros((count, k, k))
    for i in range(k):
        basis[i, i, i] = 1.0
    idx = k
    for i in range(k):
        for j in range(i + 1, k):
            basis[idx, i, j] = basis[idx, j, i] = 1.0
            idx += 1
    return basis


def _pack(M: np.ndarray) -> np.ndarray:
    """Coordinates of a symmetric matrix in the _sym_basis ordering."""
    k = M.shape[0]
    iu = np.triu_indices(k, 1)
    return np.concatenate([np.diag(M), M[iu]])


def _unpack(x: np.ndarray, k: int) -> np.ndarray:
    M = np.diag(x[:k]).astype(float)
    iu = np.triu_indices(k, 1)
    M[iu] = x[k:]
    return symmetrize(M + np.triu(M, 1).T)


def _logdet(L: np.ndarray) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def solve(problem: SdpProblem, tol: Tolerances = DEFAULT_TOLERANCES) -> SdpSolution:
    """Minimize Tr(A) + Tr(Q)/2 over the three-block feasible set.

    Follows the central path of the log-det barrier: Newton steps on the
    packed (P, Q) coordinates, damped by an Armijo backtracking search
    that never leaves the strict interior; the barrier parameter grows
    geometrically until the certificate nu/t drops below gap_tol.  The
    run is deterministic.
    """
    model, D = problem.model, problem.D
    n, m = model.n, model.m
    A = model.A
    B = model.B

    P0, Q0 = find_feasible_start(problem)

    basis_P = _sym_basis(n)
    basis_Q = _sym_basis(m)
    NP = basis_P.shape[0]
    NQ = basis_Q.shape[0]
    N = NP + NQ

    # Constant derivative tensors of each block in packed coordinates.
    T1 = np.zeros((N, n, n))
    T2 = np.zeros((N, m + n, m + n))
    tr_S = np.zeros(N)
    c_obj = np.zeros(N)
    for a in range(NP):
        S = basis_P[a]
        T1[a] = A @ S + S @ A.T
        T2[a, m:, m:] = S
        tr_S[a] = np.trace(S)
    for b in range(NQ):
        F = basis_Q[b]
        T2[NP + b, :m, :m] = F
        c_obj[NP + b] = 0.5 * np.trace(F)

    def point(x: np.ndarray):
        P = _unpack(x[:NP], n)
        Q = _unpack(x[NP:], m)
        G1 = problem.block1(P)
        G2 = problem.block2(P, Q)
        g3 = problem.block3(P)
        L1 = chol(G1)
        L2 = chol(G2)
        if L1 is None or L2 is None or g3 <= 0.0:
            return None
        return P, Q, G1, G2, g3, L1, L2

    def barrier_value(state, t: float) -> float:
        # Objective plus barrier scaled by 1/t: same minimizer and Newton
        # direction as t*objective + barrier, but the value stays O(1) as
        # t grows, so the 1e-10 decrement target stays resolvable in
        # double precision.
        _, Q, _, _, g3, L1, L2 = state
        return 0.5 * float(np.trace(Q)) + (
            -_logdet(L1) - _logdet(L2) - float(np.log(g3))
        ) / t

    x = np.concatenate([_pack(P0), _pack(Q0)])
    state = point(x)
    if state is None:
        raise NumericError("feasible start failed the strict interior check")

    nu = float(n + (m + n) + 1)
    eye1 = np.eye(n)
    eye2 = np.eye(m + n)
    t = 1.0
    newton_steps = 0

    for _ in range(_MAX_STAGES):
        for _ in range(_MAX_INNER):
            _, _, G1, G2, g3, _, _ = state
            G1inv = symmetrize(np.linalg.solve(G1, eye1))
            G2inv = symmetrize(np.linalg.solve(G2, eye2))
            M1 = np.einsum("ab,kbc->kac", G1inv, T1)
            M2 = np.einsum("ab,kbc->kac", G2inv, T2)
            grad = c_obj + (
                -np.einsum("kaa->k", M1) - np.einsum("kaa->k", M2) + tr_S / g3
            ) / t
            H = (
                np.einsum("kab,lba->kl", M1, M1, optimize=True)
                + np.einsum("kab,lba->kl", M2, M2, optimize=True)
                + np.outer(tr_S, tr_S) / g3**2
            ) / t
            try:
                delta = np.linalg.solve(symmetrize(H), -grad)
            except np.linalg.LinAlgError as exc:
                raise NonConvergenceError(
                    f"Newton system became singular at t = {t:.3e}",
                    last_iterate=(state[0], state[1]),
                ) from exc
            decrement2 = float(-grad @ delta)
            # Negative values are round-off at the centering floor.
            if decrement2 <= 2.0 * _INNER_TOL:
                break

            f0 = barrier_value(state, t)
            slope = float(grad @ delta)
            step = 1.0
            while step >= _MIN_STEP:
                trial = point(x + step * delta)
                if trial is not None and barrier_value(trial, t) <= f0 + 0.25 * step * slope:
                    break
                step *= 0.5
            else:
                raise NonConvergenceError(
                    f"Newton line search stalled at t = {t:.3e}",
                    last_iterate=(state[0], state[1]),
                )
            x = x + step * delta
            state = trial
            newton_steps += 1
        else:
            raise NonConvergenceError(
                f"Newton iteration cap reached at t = {t:.3e}",
                last_iterate=(state[0], state[1]),
            )
        if nu / t <= tol.gap_tol:
            break
        t *= _T_GROWTH
    else:
        raise NonConvergenceError(
            "barrier stage cap reached before the gap target",
            last_iterate=(state[0], state[1]),
        )

    P, Q, G1, G2, g3, _, _ = state
    gap = nu / t
    lam_P = float(np.linalg.eigvalsh(P).min())
    if lam_P <= tol.psd_tol:
        raise NumericError(
            f"optimal covariance is numerically singular: lambda_min = {lam_P:.3e}"
        )
    # Final polish: at the last barrier parameter the information block
    # retains slack that float64 centering cannot remove, so Q exceeds
    # the Schur-exact value B^T P^{-1} B by more than the certificate
    # suggests.  Tightening Q to that value keeps the block feasible
    # (the inequality becomes active), can only lower the objective, and
    # makes the reported rate agree with the rate implied by P itself,
    # so downstream cross-checks measure real defects rather than
    # leftover barrier slack.
    Q = symmetrize(B.T @ np.linalg.solve(P, B))
    G2 = problem.block2(P, Q)
    objective = float(np.trace(A)) + 0.5 * float(np.trace(Q))
    residuals = (
        float(np.linalg.eigvalsh(G1).min()),
        float(np.linalg.eigvalsh(G2).min()),
        float(g3),
    )
    return SdpSolution(
        P=P,
        Q=Q,
        objective=objective,
        duality_gap=gap,
        lmi_residuals=residuals,
        iterations=newton_steps,
    )
