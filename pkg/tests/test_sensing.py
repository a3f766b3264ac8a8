import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tesla_actuator.errors import ConfigError, InsufficientDataError
from tesla_actuator.sensing import (
    EncoderConfig, EncoderState, VelocityEstimator, estimate_velocity, sample_encoder,
)

CFG = EncoderConfig(pulses_per_rev=360, quadrature=True)
Q = 2 * math.pi / 360


def run(angles, cfg=CFG, hint=1):
    state = EncoderState(last_angle=angles[0])
    out = []
    for a in angles[1:]:
        state, m = sample_encoder(a, cfg, state, direction_hint=hint)
        out.append((state, m))
    return out


def test_exact_grid_point():
    state, m = sample_encoder(math.pi / 2, CFG, EncoderState())
    assert state.count == 90
    assert m == 90 * (2 * math.pi / 360)


def test_one_rev_per_second_at_1khz():
    angles = [2 * math.pi * k / 1000 for k in range(1001)]
    # pulse-count oracle: direct quantization of the final angle
    assert run(angles)[-1][0].count == math.floor(360 * angles[-1] / (2 * math.pi) + 1e-9) == 360
    back = run([-a for a in angles])
    assert back[-1][0].count == -360


def test_reversal_cancels():
    assert run([0.0, 0.1, 0.0])[-1][0].count == 0


def test_single_channel_counts_edges_with_hint():
    angles = [0.0, 0.1, 0.0]
    edges = math.floor(0.1 / Q)
    assert run(angles, EncoderConfig(quadrature=False))[-1][0].count == 2 * edges
    assert run([0.0, -0.1], EncoderConfig(quadrature=False), hint=-1)[-1][0].count == -(edges + 1)


def test_aliasing_flag():
    states = run([0.0, 0.5, 0.5 + math.pi + 0.01])
    assert not states[0][0].aliasing
    assert states[1][0].aliasing


@given(st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=60), st.floats(-100.0, 100.0))
@settings(max_examples=200)
def test_quantization_bound_holds_for_any_path(steps, start):
    state = EncoderState(count=math.floor(start / Q + 1e-9), last_angle=start)
    angle = start
    for d in steps:
        angle += d
        state, m = sample_encoder(angle, CFG, state)
        assert abs(m - angle) <= Q + 1e-9


def test_stationary_velocity_is_zero():
    samples = [(k * 1e-3, 0.5) for k in range(30)]
    assert estimate_velocity(samples, 0.02) == 0.0


def _sampled(omega, dt, n, phase=0.0, cfg=CFG):
    state = EncoderState(count=math.floor(phase / cfg.quantum + 1e-9), last_angle=phase)
    out = []
    for k in range(n):
        state, m = sample_encoder(phase + omega * k * dt, cfg, state)
        out.append((k * dt, m))
    return out


def test_200_rpm_output_shaft():
    omega = 200 * 2 * math.pi / 60
    est = estimate_velocity(_sampled(omega, 1e-3, 100), 0.02)
    assert abs(est - 20.94) <= Q / 0.02 + 0.01
    assert abs(est - omega) <= Q / 0.02


@given(omega=st.floats(-500.0, 500.0), phase=st.floats(0.0, 2 * math.pi))
@settings(max_examples=200)
def test_velocity_error_bound(omega, phase):
    est = estimate_velocity(_sampled(omega, 5e-4, 60, phase), 0.02)
    assert abs(est - omega) <= Q / 0.02 + 1e-9


def test_streaming_estimator_agrees_with_function():
    samples = _sampled(13.0, 5e-4, 200, 0.3)
    ve = VelocityEstimator(0.02, 5e-4)
    for k, (_, m) in enumerate(samples):
        v = ve(m)
        if k >= 40:
            assert v == pytest.approx(estimate_velocity(samples[:k + 1], 0.02), rel=1e-12)


def test_empty_window():
    with pytest.raises(InsufficientDataError):
        estimate_velocity([(0.0, 0.0)], 0.02)
    with pytest.raises(InsufficientDataError):
        estimate_velocity([], 0.02)


def test_config_validation():
    with pytest.raises(ConfigError, match="pulses_per_rev"):
        EncoderConfig(pulses_per_rev=0).validate()
