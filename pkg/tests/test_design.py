"""Gain recovery from covariances and certified trade-off points."""

from __future__ import annotations

import numpy as np
import pytest

from immse.design import (
    TradeoffCurve,
    TradeoffPoint,
    design_sensor,
    recover_gain,
    sweep_curve,
)
from immse.errors import (
    CrossCheckError,
    ImmseError,
    InputValidationError,
)
from immse.linalg import solve_lyapunov
from immse.model import DEFAULT_TOLERANCES, SensorGain, SystemModel
from immse.riccati import care_residual, solve_care

CANONICAL = SystemModel(A=np.array([[-1.0]]), B=np.array([[1.0]]))


def test_recover_gain_scalar_oracle():
    # P = 0.25: M = (2 a P + b^2)/P^2 = 8, so C = 2 sqrt(2).
    gain = recover_gain(CANONICAL, np.array([[0.25]]))
    assert gain.C[0, 0] == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-12)


def test_recover_gain_open_loop_gives_zero():
    P_ol = solve_lyapunov(CANONICAL.A, CANONICAL.B @ CANONICAL.B.T)
    gain = recover_gain(CANONICAL, P_ol)
    assert np.allclose(gain.C, 0.0, atol=1e-7)


def test_recover_gain_decoupled_two_state():
    model = SystemModel(A=-np.eye(2), B=np.eye(2))
    gain = recover_gain(model, 0.25 * np.eye(2))
    assert np.allclose(gain.C, 2.0 * np.sqrt(2.0) * np.eye(2), atol=1e-12)


def test_recover_gain_rejects_singular_P():
    with pytest.raises(InputValidationError):
        recover_gain(CANONICAL, np.array([[0.0]]))


def test_recover_gain_round_trip_random():
    # Solve the stationary equation at a random gain, then recover the
    # canonical gain from its covariance: C^T C must be preserved and the
    # stationary residual certified.
    rng = np.random.default_rng(91)
    done = 0
    while done < 40:
        n = int(rng.integers(1, 5))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, n))
        C0 = rng.normal(size=(n, n)) + 0.5 * np.eye(n)
        model = SystemModel(A=A, B=B)
        try:
            sol = solve_care(model, SensorGain(C=C0))
        except ImmseError:
            continue
        gain = recover_gain(model, sol.P)
        assert np.allclose(gain.C, gain.C.T)
        assert np.allclose(gain.C.T @ gain.C, C0.T @ C0, atol=1e-5 * (1 + np.linalg.norm(C0) ** 2))
        assert care_residual(model, gain, sol.P) <= 1e-6 * (
            1.0 + np.linalg.norm(B @ B.T)
        )
        done += 1


def test_recover_gain_invariant_under_orthogonal_mixing():
    # U C and C share C^T C, hence the same covariance and the same
    # canonical representative.
    theta = 0.7
    U = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    model = SystemModel(A=np.array([[-0.5, 0.2], [0.0, -1.5]]), B=np.eye(2))
    C0 = np.array([[1.2, 0.1], [0.0, 0.8]])
    P1 = solve_care(model, SensorGain(C=C0)).P
    P2 = solve_care(model, SensorGain(C=U @ C0)).P
    assert np.allclose(P1, P2, atol=1e-9)
    g1 = recover_gain(model, P1)
    g2 = recover_gain(model, P2)
    assert np.allclose(g1.C, g2.C, atol=1e-7)


def test_design_sensor_canonical_point():
    point = design_sensor(CANONICAL, 0.25)
    assert point.R == pytest.approx(1.0, abs=1e-6)
    assert point.C.C[0, 0] == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-3)
    assert point.detectable
    assert point.gap <= DEFAULT_TOLERANCES.gap_tol
    assert point.are_residual <= DEFAULT_TOLERANCES.residual_tol
    assert np.trace(point.P) == pytest.approx(0.25, abs=1e-6)


def test_design_sensor_effort_grows_as_budget_shrinks():
    grid = [1.0, 0.5, 0.25, 0.1]
    effort = []
    for D in grid:
        point = design_sensor(CANONICAL, D)
        effort.append(float(np.linalg.eigvalsh(point.C.C.T @ point.C.C).max()))
    assert all(e2 >= e1 - 1e-6 for e1, e2 in zip(effort, effort[1:]))


def test_sweep_curve_canonical_grid():
    curve = sweep_curve(CANONICAL, (0.1, 0.25, 0.5, 1.0))
    assert len(curve) == 4
    rates = [p.R for p in curve]
    assert rates[0] == pytest.approx(4.0, abs=1e-6)
    assert rates[1] == pytest.approx(1.0, abs=1e-6)
    assert rates[2] == pytest.approx(0.0, abs=1e-6)
    assert rates[3] == pytest.approx(0.0, abs=1e-6)


def test_sweep_curve_parallel_matches_serial():
    serial = sweep_curve(CANONICAL, (0.2, 0.4))
    parallel = sweep_curve(CANONICAL, (0.2, 0.4), max_workers=2)
    for p1, p2 in zip(serial, parallel):
        assert p1.R == pytest.approx(p2.R, abs=1e-12)


def test_sweep_curve_grid_validation():
    with pytest.raises(InputValidationError):
        sweep_curve(CANONICAL, (0.5, 0.25))
    with pytest.raises(InputValidationError):
        sweep_curve(CANONICAL, ())
    with pytest.raises(InputValidationError):
        sweep_curve(CANONICAL, (-0.5, 0.25))
    assert len(sweep_curve(CANONICAL, (0.3,))) == 1


def test_sweep_curve_wraps_point_failures_with_budget():
    uncontrollable = SystemModel(A=np.eye(2), B=np.array([[1.0], [0.0]]))
    with pytest.raises(ImmseError, match="sweep aborted at D = 0.5"):
        sweep_curve(uncontrollable, (0.5,))


def _fake_point(D: float, R: float) -> TradeoffPoint:
    return TradeoffPoint(
        D=D,
        R=R,
        P=np.eye(1),
        Q=np.eye(1),
        C=SensorGain(C=np.eye(1)),
        are_residual=0.0,
        detectable=True,
        gap=0.0,
    )


def test_curve_container_enforces_shape():
    with pytest.raises(InputValidationError):
        TradeoffCurve(points=(_fake_point(0.5, 1.0), _fake_point(0.25, 2.0)))
    with pytest.raises(CrossCheckError):
        TradeoffCurve(points=(_fake_point(0.1, 3.0), _fake_point(0.2, 4.0)))
    with pytest.raises(CrossCheckError):
        # Rising chord violation: middle point above the segment ends.
        TradeoffCurve(
            points=(
                _fake_point(0.1, 3.0),
                _fake_point(0.2, 2.9),
                _fake_point(0.3, 0.0),
            )
        )
    curve = TradeoffCurve(points=(_fake_point(0.1, 2.0), _fake_point(0.2, 1.0)))
    assert [p.D for p in curve] == [0.1, 0.2]
