"""Quantize-and-hold coding harness: encoder, entropy estimate, decoder."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from immse.errors import InputValidationError
from immse.model import SystemModel
from immse.validate import SimConfig
from immse.zdsc import ZdscScheme, decode_and_measure, encode, estimate_rate

CANONICAL = SystemModel(A=np.array([[-1.0]]), B=np.array([[1.0]]))


def test_scheme_validation():
    with pytest.raises(InputValidationError):
        ZdscScheme(tau=0.0, delta=(1.0,), K=1)
    with pytest.raises(InputValidationError):
        ZdscScheme(tau=0.1, delta=(0.0,), K=1)
    with pytest.raises(InputValidationError):
        ZdscScheme(tau=0.1, delta=(1.0,), K=0)
    scheme = ZdscScheme(tau=0.1, delta=(1.0, 2.0), K=3)
    assert scheme.n == 2


def test_encode_floor_hand_case():
    scheme = ZdscScheme(tau=0.5, delta=(2.0, 2.0), K=1)
    out = encode(np.array([[0.7, -0.3]]), scheme)
    assert out.dtype == np.int64
    assert np.array_equal(out, [[1, -1]])


def test_encode_zero_state_and_gain_proportionality():
    scheme = ZdscScheme(tau=0.5, delta=(4.0,), K=2)
    assert np.array_equal(encode(np.zeros((2, 1)), scheme), np.zeros((2, 1)))
    x = np.array([[0.26], [0.51]])
    coarse = encode(x, ZdscScheme(tau=0.5, delta=(4.0,), K=2))
    fine = encode(x, ZdscScheme(tau=0.5, delta=(400.0,), K=2))
    assert np.array_equal(coarse.ravel(), [1, 2])
    assert np.array_equal(fine.ravel(), [104, 204])


def test_encode_shape_check():
    scheme = ZdscScheme(tau=0.5, delta=(2.0,), K=3)
    with pytest.raises(InputValidationError):
        encode(np.zeros((2, 1)), scheme)


def test_entropy_constant_codeword_is_zero():
    scheme = ZdscScheme(tau=1.0, delta=(1.0,), K=2)
    words = np.tile(np.array([[3], [-1]], dtype=np.int64), (16, 1, 1))
    assert estimate_rate(words, scheme) == 0.0


def test_entropy_binary_and_uniform():
    scheme = ZdscScheme(tau=1.0, delta=(1.0,), K=1)
    two = np.array([[[0]], [[1]], [[0]], [[1]]], dtype=np.int64)
    assert estimate_rate(two, scheme) == pytest.approx(np.log(2.0), rel=1e-12)
    # Uniform c-ary with equal counts: plug-in entropy equals log c.
    for c in (2, 3, 4, 5):
        words = np.array([[[i]] for i in range(c) for _ in range(6)], dtype=np.int64)
        assert estimate_rate(words, scheme) == pytest.approx(np.log(c), rel=1e-12)


def test_entropy_rate_normalizes_by_horizon():
    # Two equiprobable symbols at one sample, deterministic elsewhere:
    # total entropy log 2 spread over K tau time units.
    scheme = ZdscScheme(tau=0.5, delta=(1.0,), K=2)
    words = np.zeros((8, 2, 1), dtype=np.int64)
    words[::2, 1, 0] = 1
    assert estimate_rate(words, scheme) == pytest.approx(np.log(2.0), rel=1e-12)


def test_entropy_single_trial_warns():
    scheme = ZdscScheme(tau=1.0, delta=(1.0,), K=1)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        value = estimate_rate(np.zeros((1, 1, 1), dtype=np.int64), scheme)
    assert value == 0.0
    assert len(rec) == 1


def test_entropy_shape_check():
    scheme = ZdscScheme(tau=1.0, delta=(1.0,), K=2)
    with pytest.raises(InputValidationError):
        estimate_rate(np.zeros((4, 3, 1), dtype=np.int64), scheme)


def test_decode_and_measure_scalar_smoke():
    cfg = SimConfig(dt=1e-3, horizon=2.0, trials=128, seed=2)
    scheme = ZdscScheme(tau=0.1, delta=(4.0,), K=20, seed=2)
    result = decode_and_measure(CANONICAL, scheme, cfg)
    assert result.rate_hat > 0.0
    assert result.distortion_hat > 0.0
    assert np.isfinite(result.rate_hat) and np.isfinite(result.distortion_hat)
    assert "kalman" in result.decoder_kind


def test_decode_and_measure_single_sample():
    cfg = SimConfig(dt=1e-2, horizon=0.2, trials=16, seed=0)
    result = decode_and_measure(CANONICAL, ZdscScheme(tau=0.2, delta=(2.0,), K=1, seed=0), cfg)
    assert np.isfinite(result.distortion_hat)


def test_decode_and_measure_deterministic():
    cfg = SimConfig(dt=1e-3, horizon=1.0, trials=32, seed=4)
    scheme = ZdscScheme(tau=0.1, delta=(4.0,), K=10, seed=4)
    a = decode_and_measure(CANONICAL, scheme, cfg)
    b = decode_and_measure(CANONICAL, scheme, cfg)
    assert a == b


def test_finer_quantizer_lowers_distortion_on_ladder():
    # Doubling ladder with common random numbers: distortion must trend
    # down as the quantizer refines (rate trends up).
    cfg = SimConfig(dt=1e-3, horizon=2.0, trials=256, seed=11)
    distortion = []
    rate = []
    for delta in (2.0, 4.0, 8.0, 16.0):
        res = decode_and_measure(
            CANONICAL, ZdscScheme(tau=0.1, delta=(delta,), K=20, seed=11), cfg
        )
        distortion.append(res.distortion_hat)
        rate.append(res.rate_hat)
    assert all(d2 < d1 for d1, d2 in zip(distortion, distortion[1:]))
    assert all(r2 > r1 for r1, r2 in zip(rate, rate[1:]))


def test_decode_and_measure_two_state():
    model = SystemModel(A=-np.eye(2), B=np.eye(2))
    cfg = SimConfig(dt=1e-3, horizon=1.0, trials=64, seed=6)
    scheme = ZdscScheme(tau=0.2, delta=(3.0, 5.0), K=5, seed=6)
    result = decode_and_measure(model, scheme, cfg)
    assert result.rate_hat > 0.0 and result.distortion_hat > 0.0


def test_decode_and_measure_dimension_mismatch():
    cfg = SimConfig(dt=1e-3, horizon=1.0, trials=4, seed=0)
    with pytest.raises(InputValidationError):
        decode_and_measure(CANONICAL, ZdscScheme(tau=0.1, delta=(1.0, 1.0), K=10), cfg)
