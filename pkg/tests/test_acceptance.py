"""Acceptance criteria, one test each; a pass/fail line per criterion is
printed in the terminal summary."""

import functools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from tesla_actuator.control import PidGains
from tesla_actuator.drivetrain import (
    LoadModel, RotorState, calibrate_force_chain, gearbox_out, stall_force, step_dynamics,
)
from tesla_actuator.harness.experiments import PositioningSpec, positioning_experiment, peak_overshoot
from tesla_actuator.harness.runner import run_scenario
from tesla_actuator.harness.scenario import build_motor, load_mapping
from tesla_actuator.harness.trace import trace_to_csv
from tesla_actuator.mri.image import GrayImage, Roi, decode_pgm, encode_pgm
from tesla_actuator.mri.metrics import homogeneity, piu, snr, subtract
from tesla_actuator.mri.phantom import PhantomArtifact, synth_phantom
from tesla_actuator.params import MotorParams
from tesla_actuator.sensing import EncoderConfig, EncoderState, estimate_velocity, sample_encoder
from tesla_actuator.turbine_model import calibrate_torque_map, steady_state_speed

from conftest import ACCEPTANCE_LINES


def criterion(number, title, budget=None):
    """Record PASS/FAIL and wall time; fail if the runtime budget is exceeded."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            t0 = time.perf_counter()
            status = "FAIL"
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - t0
                if budget is not None:
                    assert elapsed < budget, f"took {elapsed:.2f} s, budget {budget} s"
                status = "PASS"
            finally:
                elapsed = time.perf_counter() - t0
                limit = f" (budget {budget:g} s)" if budget else ""
                ACCEPTANCE_LINES.append(f"{status} criterion {number:>2}: {title} [{elapsed:.2f} s{limit}]")
        return inner
    return wrap


def uncalibrated_motor():
    return build_motor(load_mapping("builtin:prototype")["motor"])


@criterion(1, "calibration anchors (13000 RPM at 4 Bar, stalled at 0.3 Bar)", budget=1.0)
def test_calibration_anchor_reproduction():
    base = uncalibrated_motor()
    cal = calibrate_torque_map([(0.5, 0.0), (4.0, 13000.0)], base)
    motor = replace(base, fluid=cal.fluid)
    assert 12350.0 <= steady_state_speed(4.0, motor) <= 13650.0
    assert steady_state_speed(0.3, motor) == 0.0


@criterion(2, "stalled force at 2.0 / 2.5 Bar within 15%", budget=1.0)
def test_table_prediction():
    base = uncalibrated_motor()
    motor = replace(base, fluid=calibrate_torque_map([(0.5, 0.0), (4.0, 13000.0)], base).fluid)
    fc = calibrate_force_chain([(1.5, 11.49), (3.0, 36.01)], motor)
    motor = replace(motor, screw_efficiency=fc.screw_efficiency,
                    screw_friction_force=fc.screw_friction_force)
    for p, measured in ((2.0, 22.05), (2.5, 29.38)):
        assert abs(stall_force(p, motor) - measured) <= 0.15 * measured


@criterion(3, "gear ratio 1:60 exact over 1e6 inputs")
def test_gear_ratio_exactness():
    x = np.random.default_rng(3).uniform(-2e4, 2e4, 1_000_000)
    out = gearbox_out(x, 60.0)
    assert np.array_equal(out, x / 60.0)
    assert round(gearbox_out(13000.0), 2) == 216.67


@criterion(4, "integrator vs analytic spin-up, first order", budget=5.0)
def test_integrator_correctness():
    motor = replace(MotorParams(), c=0.0)
    tau, J, b = 5e-4, motor.J, motor.b

    def max_rel_error(dt):
        n = int(round(1.0 / dt))
        s = RotorState(0.0, 0.0)
        w = np.empty(n)
        for k in range(n):
            s = step_dynamics(s, tau, 0.0, motor, dt)
            w[k] = s.q_dot
        t = dt * np.arange(1, n + 1)
        exact = tau / b * (1.0 - np.exp(-b * t / J))
        return np.max(np.abs(w - exact) / exact)

    e1, e2 = max_rel_error(1e-4), max_rel_error(5e-5)
    assert e1 < 1e-3
    assert 1.8 < e1 / e2 < 2.2


@criterion(5, "stiction holds for 1000 random draws", budget=5.0)
def test_stiction_property():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        c = rng.uniform(1e-6, 1e-3)
        motor = replace(MotorParams(), J=rng.uniform(1e-7, 1e-4), b=rng.uniform(0.0, 1e-5), c=c)
        net = rng.uniform(-c, c)
        split = rng.uniform(-1e-3, 1e-3)
        s0 = RotorState(rng.uniform(-100, 100), 0.0)
        s = s0
        for _ in range(5):
            s = step_dynamics(s, net - split, split, motor, rng.uniform(1e-5, 1e-2))
        assert s == s0
    # boundary: exactly c still holds
    m = MotorParams()
    assert step_dynamics(RotorState(0.0, 0.0), m.c, 0.0, m, 1e-3) == RotorState(0.0, 0.0)


@criterion(6, "positioning: settles, phantom slower, 60 mm step overshoots more", budget=30.0)
def test_positioning_behaviour(fixture_scenario):
    s = replace(fixture_scenario, duration=60.0, targets=((0.0, 32.0),))
    phantom_load = LoadModel(mode="phantom", entry_depth=0.0, resistive_force=2.0)
    free = run_scenario(s)
    loaded = run_scenario(replace(s, load=phantom_load))

    # (a)
    for trace in (free, loaded):
        assert abs(trace[-1].error) < 0.5

    # (b) every 1 mm threshold on the way to 32 mm
    def crossing(trace, level):
        return next(r.t for r in trace if r.x >= level)

    for level in np.arange(1.0, 32.5, 1.0):
        assert crossing(loaded, level) > crossing(free, level), level

    # (c)
    gains = fixture_scenario.gains
    single = positioning_experiment(s.motor, gains, PositioningSpec.single_step(60.0, 60.0), s)
    steps = positioning_experiment(s.motor, gains, PositioningSpec.incremental(10.0, 6, 15.0), s)
    assert peak_overshoot(single) > peak_overshoot(steps)


@criterion(7, "self-locking: 4 N push, zero command, 10 s, zero displacement")
def test_self_locking(fixture_scenario):
    s = replace(fixture_scenario, gains=PidGains(kp=0.0, ki=0.0, kd=0.0), targets=((0.0, 0.0),),
                duration=10.0, load=LoadModel(external_force=4.0))
    trace = run_scenario(s)
    assert all(r.u == 0.0 for r in trace)
    assert trace[-1].x - trace[0].x == 0.0
    assert all(r.x == 0.0 for r in trace)


@criterion(8, "encoder velocity error within (2 pi/PPR)/window at 100 speeds")
def test_encoder_bound():
    cfg = EncoderConfig(pulses_per_rev=360)
    dt, window = 5e-4, 0.02
    bound = cfg.quantum / window
    rng = np.random.default_rng(8)
    for _ in range(100):
        omega = rng.uniform(-0.99 * math.pi / dt, 0.99 * math.pi / dt)
        phase = rng.uniform(0.0, 2 * math.pi)
        state = EncoderState(count=math.floor(phase / cfg.quantum + 1e-9), last_angle=phase)
        samples = []
        for k in range(80):
            state, m = sample_encoder(phase + omega * k * dt, cfg, state)
            samples.append((k * dt, m))
        assert not state.aliasing
        assert abs(estimate_velocity(samples, window) - omega) <= bound + 1e-9


@criterion(9, "image metric identities and synthetic ordering", budget=10.0)
def test_metrics_identities():
    rng = np.random.default_rng(9)
    uniform = GrayImage(np.full((32, 32), 777, dtype=np.uint16))
    roi = Roi.rect(4, 4, 24, 24)
    assert piu(uniform, roi) == 100.0
    for d in ("peak_to_peak_ppm", "fractional_range"):
        assert homogeneity(uniform, roi, d) == 0.0
    for _ in range(100):
        px = rng.integers(1, 600, (24, 24))
        k = int(rng.integers(2, 100))
        r = Roi.rect(0, 0, 24, 24)
        assert piu(GrayImage(px * k), r) == pytest.approx(piu(GrayImage(px), r), rel=1e-12)
    img = synth_phantom(9, 64, 64, 1000.0, 8.0)
    assert not subtract(img, img).pixels.any()
    px = img.pixels.astype(np.int64)
    sig, noi = Roi.rect(24, 24, 16, 16), Roi.rect(0, 0, 12, 12)
    gained = px.copy()
    gained[24:40, 24:40] *= 3
    assert snr(GrayImage(gained), sig, noi) == pytest.approx(3 * snr(img, sig, noi), rel=1e-12)

    kw = dict(width=128, height=128, signal_level=2000.0, noise_std=4.0)
    u_roi = Roi.rect(44, 44, 40, 40)
    base = homogeneity(synth_phantom(1, artifact=PhantomArtifact(gradient=0.03), **kw), u_roi)
    tesla = homogeneity(synth_phantom(2, artifact=PhantomArtifact(shift_x=0.5, gradient=0.03), **kw), u_roi)
    piezo = homogeneity(synth_phantom(3, artifact=PhantomArtifact(gradient=0.075), **kw), u_roi)
    assert abs(tesla - base) / base < 0.15
    assert piezo > 2 * base and piezo > 2 * tesla


@criterion(10, "determinism: identical CSV reruns, bit-exact PGM round trip")
def test_determinism(fixture_scenario):
    s = replace(fixture_scenario, duration=3.0, pressure_noise=0.05, seed=123)
    assert trace_to_csv(run_scenario(s)) == trace_to_csv(run_scenario(s))
    img = synth_phantom(10, 40, 30, 5000.0, 50.0)
    data = encode_pgm(img)
    assert decode_pgm(data) == img
    assert encode_pgm(decode_pgm(data)) == data
