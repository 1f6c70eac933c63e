"""Transient and stationary error covariances of the filtering loop.

Integrates dP/dt = A P + P A^T - P C^T C P + B B^T from P_0 = 0 and solves
the fixed-point equation A P + P A^T - P C^T C P + B B^T = 0.  This route
never touches the convex-optimization module, so the two can cross-check
each other as independent implementations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BlowupError,
    DegenerateSpectrumError,
    InputValidationError,
    NonConvergenceError,
    NotPsdError,
    NumericError,
)
from .linalg import solve_lyapunov, symmetrize
from .model import (
    DEFAULT_TOLERANCES,
    SensorGain,
    SystemModel,
    Tolerances,
    check_controllable,
    check_detectable,
)

__all__ = [
    "RiccatiTrajectory",
    "AreSolution",
    "integrate_rde",
    "solve_care",
    "rates_from_P",
    "care_residual",
]

_NORM_GUARD = 1e12
_TIME_CAP = 1e4


@dataclass(frozen=True)
class RiccatiTrajectory:
    """Covariance path P_t on a uniform grid starting at P_0 = 0.

    ``converged`` records whether the relative residual on dP/dt dropped
    below tolerance somewhere on the grid; ``limit`` is the final iterate
    when it did, else None.
    """

    times: np.ndarray
    values: np.ndarray
    converged: bool
    limit: np.ndarray | None


@dataclass(frozen=True)
class AreSolution:
    """Stationary covariance with its residual and stability certificate."""

    P: np.ndarray
    residual: float
    closed_loop_spectrum: np.ndarray


def care_residual(model: SystemModel, gain: SensorGain, P: np.ndarray) -> float:
    """Frobenius norm of A P + P A^T - P C^T C P + B B^T."""
    A = model.A
    P = np.asarray(P, dtype=float)
    CtC = gain.C.T @ gain.C
    AP = A @ P
    return float(
        np.linalg.norm(AP + AP.T - P @ CtC @ P + model.B @ model.B.T, "fro")
    )


def _rhs(P: np.ndarray, A: np.ndarray, BBt: np.ndarray, CtC: np.ndarray) -> np.ndarray:
    AP = A @ P
    return AP + AP.T - P @ CtC @ P + BBt


def _rk4_step(
    P: np.ndarray, dt: float, A: np.ndarray, BBt: np.ndarray, CtC: np.ndarray
) -> np.ndarray:
    k1 = _rhs(P, A, BBt, CtC)
    k2 = _rhs(P + 0.5 * dt * k1, A, BBt, CtC)
    k3 = _rhs(P + 0.5 * dt * k2, A, BBt, CtC)
    k4 = _rhs(P + dt * k3, A, BBt, CtC)
    return symmetrize(P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


def _check_gain_shape(model: SystemModel, gain: SensorGain) -> None:
    if gain.C.shape[1] != model.n:
        raise InputValidationError(
            f"C must have {model.n} columns to match A, got shape {gain.C.shape}"
        )


def integrate_rde(
    model: SystemModel,
    gain: SensorGain,
    dt: float | None = None,
    t_max: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> RiccatiTrajectory:
    """Classical 4th-order one-step integration of the covariance flow.

    The iterate is symmetrized after every step.  With an explicit
    ``t_max`` the full uniform grid [0, t_max] is returned, which is what
    the simulator and the identity checks consume; with ``t_max=None``
    integration stops at the first grid node where
    ``||dP/dt||_F <= residual_tol * (1 + ||P||_F)``, capped at 1e4 time
    units.  Detectability is not required to integrate; a genuinely
    divergent path trips the norm guard instead.
    """
    _check_gain_shape(model, gain)
    A = model.A
    BBt = model.B @ model.B.T
    CtC = gain.C.T @ gain.C
    if dt is None:
        dt = 1e-3 / max(1.0, float(np.linalg.norm(A, "fro")))
    dt = float(dt)
    stop_early = t_max is None
    horizon = _TIME_CAP if t_max is None else float(t_max)
    if not (np.isfinite(dt) and dt > 0):
        raise InputValidationError(f"dt must be finite and > 0, got {dt}")
    if not (np.isfinite(horizon) and horizon >= dt):
        raise InputValidationError(f"t_max must satisfy t_max >= dt, got {horizon}")

    steps = max(1, int(round(horizon / dt)))
    n = model.n
    values = np.empty((steps + 1, n, n))
    P = np.zeros((n, n))
    values[0] = P
    converged = False
    last = steps
    for k in range(steps):
        deriv = _rhs(P, A, BBt, CtC)
        if np.linalg.norm(deriv, "fro") <= tol.residual_tol * (
            1.0 + np.linalg.norm(P, "fro")
        ):
            converged = True
            if stop_early:
                last = k
                break
        P = _rk4_step(P, dt, A, BBt, CtC)
        if not np.all(np.isfinite(P)) or np.linalg.norm(P, "fro") > _NORM_GUARD:
            raise BlowupError(
                f"covariance flow exceeded the norm guard at t = {(k + 1) * dt:.6g}; "
                "the pair (A, C) is likely not detectable"
            )
        values[k + 1] = P
    else:
        deriv = _rhs(P, A, BBt, CtC)
        if np.linalg.norm(deriv, "fro") <= tol.residual_tol * (
            1.0 + np.linalg.norm(P, "fro")
        ):
            converged = True

    values = values[: last + 1]
    times = np.arange(last + 1, dtype=float) * dt
    lam_min = float(np.linalg.eigvalsh(values).min())
    if lam_min < -tol.psd_tol:
        raise NotPsdError(lam_min, tol.psd_tol)
    return RiccatiTrajectory(
        times=times,
        values=values,
        converged=converged,
        limit=values[-1].copy() if converged else None,
    )


def _integrate_limit(
    A: np.ndarray,
    BBt: np.ndarray,
    CtC: np.ndarray,
    rough_tol: float,
) -> np.ndarray:
    """Rough fixed-point estimate used only to seed the Newton polish.

    The step size starts at the stability margin suggested by A plus the
    sensor stiffness scale sqrt(|BB^T| |C^T C|) and is halved whenever the
    explicit integrator either blows up or locks onto a spurious discrete
    equilibrium (residual frozen while the iterate stops moving, which is
    how an explicit scheme fails just inside its stability boundary).  No
    path is stored.
    """
    n = A.shape[0]
    stiffness = float(np.linalg.norm(A, 2)) + float(
        np.sqrt(np.linalg.norm(BBt, 2) * np.linalg.norm(CtC, 2))
    )
    dt = 0.5 / max(1.0, stiffness)
    window = 200
    for _ in range(20):
        P = np.zeros((n, n))
        retry = False
        res_mark = np.inf
        P_mark = P
        max_steps = int(min(_TIME_CAP / dt, 2_000_000))
        for step_index in range(max_steps):
            deriv = _rhs(P, A, BBt, CtC)
            rel = np.linalg.norm(deriv, "fro") / (1.0 + np.linalg.norm(P, "fro"))
            if rel <= rough_tol:
                return P
            if step_index % window == 0:
                stuck = (
                    rel > (1.0 - 1e-6) * res_mark
                    and np.linalg.norm(P - P_mark, "fro")
                    <= 1e-9 * (1.0 + np.linalg.norm(P, "fro"))
                )
                if stuck:
                    retry = True
                    break
                res_mark, P_mark = rel, P
            P = _rk4_step(P, dt, A, BBt, CtC)
            if not np.all(np.isfinite(P)) or np.linalg.norm(P, "fro") > _NORM_GUARD:
                retry = True
                break
        if not retry:
            raise NonConvergenceError(
                "covariance flow did not settle before the time cap",
                last_iterate=P,
            )
        dt *= 0.5
    raise NonConvergenceError(
        "covariance flow failed at every step size tried", last_iterate=None
    )


def _newton_polish(
    A: np.ndarray,
    BBt: np.ndarray,
    CtC: np.ndarray,
    X0: np.ndarray,
    residual_tol: float,
    max_iter: int = 50,
) -> tuple[np.ndarray, float]:
    """Kleinman iteration: each step solves the closed-loop Lyapunov
    equation, converging quadratically from a stabilizing seed."""

    def res(X: np.ndarray) -> float:
        AX = A @ X
        return float(np.linalg.norm(AX + AX.T - X @ CtC @ X + BBt, "fro"))

    X = symmetrize(X0)
    r = res(X)
    best_X, best_r = X, r
    for _ in range(max_iter):
        if best_r <= 0.01 * residual_tol:
            break
        F = A - X @ CtC
        W = symmetrize(X @ CtC @ X + BBt)
        try:
            X_next = solve_lyapunov(F, W)
        except DegenerateSpectrumError as exc:
            raise NonConvergenceError(
                f"polish step lost closed-loop stability: {exc}", last_iterate=X
            ) from exc
        r_next = res(X_next)
        if not np.isfinite(r_next):
            raise NonConvergenceError("polish step diverged", last_iterate=X)
        if r_next < best_r:
            best_X, best_r = X_next, r_next
        elif best_r <= residual_tol:
            break  # at the round-off floor already
        X, r = X_next, r_next
    return best_X, best_r


def solve_care(
    model: SystemModel,
    gain: SensorGain,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> AreSolution:
    """Stationary covariance: A P + P A^T - P C^T C P + B B^T = 0, P > 0.

    Seeds from the settled covariance flow, then Newton-polishes to the
    residual target.  Controllability of (A, B) and detectability of
    (A, C) are demanded up front; they are what make the positive definite
    solution exist, be unique, and leave A - P C^T C stable.
    """
    _check_gain_shape(model, gain)
    report = check_controllable(model, tol.eig_tol)
    if not report:
        raise InputValidationError(
            f"(A, B) must be a controllable pair, rank {report.rank} of {report.dim}"
        )
    if not check_detectable(model, gain, tol.eig_tol):
        raise InputValidationError(
            "(A, C) must be a detectable pair: an unstable mode is invisible to the sensor"
        )
    A = model.A
    BBt = model.B @ model.B.T
    CtC = gain.C.T @ gain.C

    seed = _integrate_limit(A, BBt, CtC, rough_tol=1e-3)
    P, residual = _newton_polish(A, BBt, CtC, seed, tol.residual_tol)
    if residual > tol.residual_tol:
        raise NonConvergenceError(
            f"stationary residual {residual:.3e} exceeds target {tol.residual_tol:.1e}",
            last_iterate=P,
        )
    lam_min = float(np.linalg.eigvalsh(P).min())
    if lam_min <= 0.0:
        raise NumericError(
            f"stationary covariance is not positive definite: lambda_min = {lam_min:.3e}"
        )
    spectrum = np.linalg.eigvals(A - P @ CtC)
    if float(spectrum.real.max()) >= tol.eig_tol:
        raise NumericError(
            "closed loop failed the stability certificate: max Re(lambda) = "
            f"{float(spectrum.real.max()):.3e}"
        )
    return AreSolution(P=P, residual=residual, closed_loop_spectrum=spectrum)


def rates_from_P(P: np.ndarray, gain: SensorGain) -> tuple[float, float]:
    """Stationary rates for a settled covariance P.

    Returns ``(info_rate, mmse_rate)`` with info_rate = Tr(C P C^T)/2 in
    nats/time and mmse_rate = Tr(P).  Tiny negative round-off is clipped
    to zero; the caller is responsible for P being PSD.
    """
    P = np.asarray(P, dtype=float)
    C = gain.C
    info_rate = 0.5 * float(np.trace(C @ P @ C.T))
    mmse_rate = float(np.trace(P))
    return max(info_rate, 0.0), max(mmse_rate, 0.0)
