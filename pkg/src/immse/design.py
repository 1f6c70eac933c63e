"""Sensor synthesis: optimal covariance -> observation gain -> certificate.

Given a distortion budget D, the pipeline solves the trade-off program
for the stationary covariance P, reconstructs a sensor gain C realizing
it, and certifies the pair by an independent stationary solve.  Curve
sweeps repeat the pipeline over a budget grid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    CrossCheckError,
    ImmseError,
    InputValidationError,
    NumericError,
    ReconstructionError,
)
from .linalg import psd_sqrt, symmetrize
from .model import (
    DEFAULT_TOLERANCES,
    SensorGain,
    SystemModel,
    Tolerances,
    check_detectable,
)
from .riccati import care_residual, rates_from_P, solve_care
from .sdp import build_sdp, solve

__all__ = [
    "TradeoffPoint",
    "TradeoffCurve",
    "recover_gain",
    "design_sensor",
    "sweep_curve",
]


@dataclass(frozen=True)
class TradeoffPoint:
    """One certified point: budget D, rate R in nats/time, and the
    covariance/gain pair realizing it."""

    D: float
    R: float
    P: np.ndarray
    Q: np.ndarray
    C: SensorGain
    are_residual: float
    detectable: bool
    gap: float


@dataclass(frozen=True)
class TradeoffCurve:
    """Points ordered by ascending D; construction re-checks that the
    rate is nonincreasing and convex in D within 10x the gap target."""

    points: tuple[TradeoffPoint, ...]
    gap_tol: float = DEFAULT_TOLERANCES.gap_tol

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        D = [p.D for p in pts]
        R = [p.R for p in pts]
        if any(b <= a for a, b in zip(D, D[1:])):
            raise InputValidationError("curve budgets must be strictly ascending")
        slack = 10.0 * self.gap_tol
        for i in range(1, len(pts)):
            if R[i] > R[i - 1] + slack:
                raise CrossCheckError(
                    f"rate increased along the curve at D = {D[i]:g}: "
                    f"{R[i - 1]:.12g} -> {R[i]:.12g}"
                )
        for i in range(1, len(pts) - 1):
            lam = (D[i + 1] - D[i]) / (D[i + 1] - D[i - 1])
            chord = lam * R[i - 1] + (1.0 - lam) * R[i + 1]
            if R[i] > chord + slack:
                raise CrossCheckError(
                    f"rate is not convex at D = {D[i]:g}: value {R[i]:.12g} "
                    f"exceeds chord {chord:.12g}"
                )

    def __iter__(self):
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)


def recover_gain(
    model: SystemModel,
    P: np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> SensorGain:
    """Reconstruct C from a covariance P with A P + P A^T + B B^T >= 0.

    C is the symmetric PSD square root of M = P^{-1}(A P + P A^T +
    B B^T) P^{-1}, the canonical representative of the orthogonal family
    U C sharing one C^T C.  The returned gain is certified: the
    stationary equation residual at P must be within tolerance and
    (A, C) must be detectable.
    """
    P = symmetrize(np.asarray(P, dtype=float))
    lam_min = float(np.linalg.eigvalsh(P).min())
    if lam_min <= tol.psd_tol:
        raise InputValidationError(
            f"P is numerically singular: lambda_min = {lam_min:.3e} "
            f"<= psd_tol = {tol.psd_tol:.1e}"
        )
    A = model.A
    BBt = model.B @ model.B.T
    AP = A @ P
    G = symmetrize(AP + AP.T + BBt)
    Pinv = np.linalg.solve(P, np.eye(model.n))
    M = symmetrize(Pinv @ G @ Pinv)
    C = psd_sqrt(M, tol.psd_tol)
    gain = SensorGain(C)

    residual = care_residual(model, gain, P)
    bound = tol.residual_tol * (1.0 + float(np.linalg.norm(BBt, "fro")))
    if residual > bound:
        raise ReconstructionError(
            f"reconstructed gain misses the stationary equation: residual "
            f"{residual:.3e} > {bound:.3e} (lambda_min(P) = {lam_min:.3e})"
        )
    if not check_detectable(model, gain, tol.eig_tol):
        raise ReconstructionError(
            "reconstructed gain failed the detectability certificate"
        )
    return gain


def design_sensor(
    model: SystemModel, D: float, tol: Tolerances = DEFAULT_TOLERANCES
) -> TradeoffPoint:
    """Solve, reconstruct, and cross-certify one budget.

    The stationary covariance of the reconstructed gain is recomputed by
    the differential-equation route and must agree with the optimizer
    output; disagreement is a bug trap, not a tolerance knob.
    """
    problem = build_sdp(model, D)
    sol = solve(problem, tol)
    gain = recover_gain(model, sol.P, tol)
    care = solve_care(model, gain, tol)

    trace_sdp = float(np.trace(sol.P))
    trace_care = float(np.trace(care.P))
    if abs(trace_care - trace_sdp) > 1e-5:
        raise CrossCheckError(
            f"stationary traces disagree at D = {D:g}: optimizer "
            f"{trace_sdp:.12g} vs differential {trace_care:.12g}"
        )
    info_care, _ = rates_from_P(care.P, gain)
    if abs(info_care - sol.objective) > 1e-5:
        raise CrossCheckError(
            f"rates disagree at D = {D:g}: optimizer {sol.objective:.12g} "
            f"vs differential {info_care:.12g}"
        )
    if sol.objective < -tol.gap_tol:
        raise NumericError(
            f"negative rate {sol.objective:.3e} at D = {D:g} exceeds gap slack"
        )
    return TradeoffPoint(
        D=float(D),
        R=sol.objective,
        P=sol.P,
        Q=sol.Q,
        C=gain,
        are_residual=care_residual(model, gain, sol.P),
        detectable=True,
        gap=sol.duality_gap,
    )


def sweep_curve(
    model: SystemModel,
    D_grid,
    tol: Tolerances = DEFAULT_TOLERANCES,
    max_workers: int | None = None,
) -> TradeoffCurve:
    """One certified point per budget, ordered by grid index.

    Points are independent, so they may be evaluated concurrently;
    ``max_workers`` > 1 enables a thread pool.  Any point failure aborts
    the sweep, naming the offending budget.
    """
    grid = [float(d) for d in D_grid]
    if not grid:
        raise InputValidationError("budget grid must be non-empty")
    if any(not (np.isfinite(d) and d > 0) for d in grid):
        raise InputValidationError("budget grid entries must be finite and > 0")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputValidationError("budget grid must be strictly ascending")

    def point(D: float) -> TradeoffPoint:
        try:
            return design_sensor(model, D, tol)
        except ImmseError as exc:
            raise ImmseError(f"sweep aborted at D = {D:g}: {exc}") from exc

    if max_workers is not None and max_workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            points = tuple(pool.map(point, grid))
    else:
        points = tuple(point(D) for D in grid)
    return TradeoffCurve(points=points, gap_tol=tol.gap_tol)
