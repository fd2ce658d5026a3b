"""Closed-loop dynamics: plant integration, controller, metrics."""

import math

import numpy as np
import pytest
import scipy.optimize

from exoneck.errors import ChannelConflictError, SimulationFault, \
    ZeroVarianceError
from exoneck.geometry import BodyParams, HeadPose, SuitConfig, rotation
from exoneck.simulation import (BASELINE_PRESSURE_KPA,
                                DEFAULT_GAINS_KPA_PER_DEG,
                                AntagonisticController, ControllerAxis,
                                ControllerConfig, PlantParams, SimState,
                                TrajectorySpec, antagonistic_controller,
                                axis_angle, default_controller, metrics,
                                pose_from_axis_angle,
                                pose_from_working_angles, quat_from_matrix,
                                quat_from_pose, quat_to_matrix, step, track)

MGD = 4.6 * 9.81 * 0.17


def _pendulum(hanging=True):
    z = -0.17 if hanging else 0.17
    return SuitConfig(name="pendulum",
                      body=BodyParams(com_offset=(0.0, 0.0, z)),
                      actuators=())


def _simulate(suit, params, state, seconds, pressures=None):
    p = np.zeros(5) if pressures is None else pressures
    n = int(round(seconds / params.timestep))
    for _ in range(n):
        state = step(state, p, params, suit)
    return state


# ---------------------------------------------------------------------------
# Working-direction conventions.

@pytest.mark.parametrize("axis", ["FE", "LD", "AR"])
def test_axis_angle_round_trip(axis):
    pose = pose_from_axis_angle(axis, 12.5)
    assert math.isclose(axis_angle(axis, pose), 12.5, rel_tol=1e-12)


def test_working_angle_signs():
    pose = pose_from_working_angles(10.0, 20.0, 30.0)
    assert pose == HeadPose(theta_x=-10.0, theta_y=20.0, theta_z=-30.0)
    assert axis_angle("FE", pose) == 10.0
    assert axis_angle("LD", pose) == 20.0
    assert axis_angle("AR", pose) == 30.0


def test_quaternion_round_trips():
    for pose in [HeadPose(30.0, -40.0, 55.0), HeadPose(-170.0, 80.0, 5.0)]:
        R = rotation(pose)
        assert np.allclose(quat_to_matrix(quat_from_matrix(R)), R,
                           atol=1e-12)
        assert np.allclose(quat_to_matrix(quat_from_pose(pose)), R,
                           atol=1e-12)


# ---------------------------------------------------------------------------
# Plant physics against independent oracles.

def test_unstable_equilibrium_preserved(suit):
    # balanced upright head, zero angular velocity: nothing may move
    zeroed = SuitConfig(
        name="zeroed", body=suit.body,
        actuators=tuple(
            type(a)(path=a.path,
                    fpam=type(a.fpam)(r0=a.fpam.r0, alpha0=a.fpam.alpha0,
                                      p=(0.0, 0.0, 0.0, 0.0), L0=a.fpam.L0))
            for a in suit.actuators))
    state = _simulate(zeroed, PlantParams(), SimState.at_pose(
        HeadPose.neutral()), seconds=1.0)
    assert np.allclose(state.euler_deg(), (0.0, 0.0, 0.0), atol=1e-9)
    assert np.allclose(state.angular_velocity, 0.0, atol=1e-9)


def test_free_pendulum_conserves_energy():
    pend = _pendulum(hanging=True)
    params = PlantParams(damping=0.0)

    def energy(state):
        w = state.angular_velocity
        com = quat_to_matrix(state.orientation) \
            @ np.asarray(pend.body.com_offset)
        return (0.5 * w @ params.inertia @ w
                + pend.body.mass * pend.body.gravity * com[2])

    state = SimState.at_pose(HeadPose(theta_x=8.0))
    e0 = energy(state)
    ref = abs(e0 - (-pend.body.mass * pend.body.gravity * 0.17))
    state = _simulate(pend, params, state, seconds=10.0)
    # oscillation energy above the hanging minimum drifts < 0.1%
    drift = abs(energy(state) - e0)
    assert drift < 1e-3 * ref


def test_quaternion_norm_drift_bounded():
    pend = _pendulum(hanging=True)
    state = _simulate(pend, PlantParams(damping=0.0),
                      SimState.at_pose(HeadPose(theta_x=25.0)), 100.0)
    assert abs(np.linalg.norm(state.orientation) - 1.0) < 1e-8


def test_large_damping_reaches_static_balance():
    # hanging pendulum, constant torque: creep to the angle solved by
    # root finding on the plain trig torque balance
    pend = _pendulum(hanging=True)
    c = 2.0
    params = PlantParams(damping=50.0, external_torque=(c, 0.0, 0.0))
    theta_star = scipy.optimize.brentq(
        lambda th: c - MGD * math.sin(th), 0.0, math.pi / 2)
    state = _simulate(pend, params, SimState.at_pose(HeadPose.neutral()),
                      seconds=80.0)
    assert math.isclose(state.euler_deg()[0], math.degrees(theta_star),
                        abs_tol=0.01)
    assert np.allclose(state.angular_velocity, 0.0, atol=1e-6)


def test_pneumatic_lag_first_order():
    # pressure responds to a command step as 1 - exp(-t / tau)
    pend = _pendulum()
    params = PlantParams(pneumatic_time_constant=0.3)
    state = SimState.at_pose(HeadPose.neutral())
    cmd = np.full(5, 60.0)
    state = _simulate(pend, params, state, seconds=0.3, pressures=cmd)
    want = 60.0 * (1.0 - math.exp(-1.0))
    assert np.allclose(state.pressures, want, atol=1e-3)


def test_simulation_fault_carries_partial(suit):
    params = PlantParams(external_torque=(1e308, 0.0, 0.0))
    spec = TrajectorySpec(axis="FE", cycles=1, period_s=2.0)
    with pytest.raises(SimulationFault) as err:
        track(suit, params, default_controller("FE"), spec)
    assert err.value.partial is not None


# ---------------------------------------------------------------------------
# Antagonistic controller.

def test_zero_error_holds_baseline(suit):
    config = default_controller("FE")
    pose = pose_from_axis_angle("FE", 5.0)
    p = antagonistic_controller(pose, pose, config)
    assert p.values == (BASELINE_PRESSURE_KPA,) * 5


def test_positive_fe_error_splits_front_back():
    kp = 2.0
    config = ControllerConfig(axes=(
        ControllerAxis("FE", kp, (1, 2), (3, 4, 5)),))
    ref = pose_from_axis_angle("FE", 10.0)
    meas = pose_from_axis_angle("FE", 4.0)
    p = antagonistic_controller(ref, meas, config)
    u = kp * 6.0
    assert p.values[0] == pytest.approx(34.5 + u)
    assert p.values[1] == pytest.approx(34.5 + u)
    for ch in (2, 3, 4):
        assert p.values[ch] == pytest.approx(34.5 - u)


def test_clamp_saturates_but_stays_in_bounds():
    config = ControllerConfig(axes=(
        ControllerAxis("FE", 100.0, (1, 2), (3, 4, 5)),))
    ref = pose_from_axis_angle("FE", 20.0)
    p = antagonistic_controller(ref, HeadPose.neutral(), config)
    assert p.values[0] == 138.0 and p.values[1] == 138.0
    assert p.values[2] == 0.0 and p.values[3] == 0.0 and p.values[4] == 0.0


def test_integral_action_accumulates():
    config = ControllerConfig(axes=(
        ControllerAxis("FE", 0.0, (1, 2), (3, 4, 5), ki=1.0),))
    ctl = AntagonisticController(config)
    ref = pose_from_axis_angle("FE", 3.0)
    p1 = ctl.update(ref, HeadPose.neutral(), dt=0.5)
    p2 = ctl.update(ref, HeadPose.neutral(), dt=0.5)
    assert p1.values[0] == pytest.approx(34.5 + 1.5)
    assert p2.values[0] == pytest.approx(34.5 + 3.0)
    ctl.reset()
    p3 = ctl.update(ref, HeadPose.neutral(), dt=0.5)
    assert p3.values == p1.values


def test_channel_conflict_rejected():
    with pytest.raises(ChannelConflictError):
        ControllerConfig(axes=(
            ControllerAxis("FE", 1.0, (1, 2), (3,)),
            ControllerAxis("AR", 1.0, (3,), (4,))))
    with pytest.raises(ChannelConflictError):
        ControllerAxis("FE", 1.0, (1, 2), (2, 3))


def test_default_controller_layout():
    fe = default_controller("FE")
    assert [(a.axis, a.agonist, a.antagonist) for a in fe.axes] == \
        [("FE", (1, 2), (3, 4, 5))]
    ar = default_controller("AR")
    assert [(a.axis, a.agonist, a.antagonist) for a in ar.axes] == \
        [("AR", (5,), (4,)), ("FE", (1, 2), (3,))]
    assert ar.axes[1].kp == DEFAULT_GAINS_KPA_PER_DEG["FE_HOLD"]
    with pytest.raises(ValueError):
        default_controller("YAW")


# ---------------------------------------------------------------------------
# Metrics.

def test_metrics_identical_series():
    t = np.arange(0.0, 10.0, 0.01)
    x = 20.0 * np.sin(2.0 * np.pi * t / 5.0)
    assert metrics(x, x, dt=0.01) == (0.0, 0.0)


def test_metrics_recovers_constructed_shift():
    dt, period, shift = 0.01, 25.0, 2.0
    t = np.arange(0.0, 100.0, dt)
    ref = 20.0 * np.sin(2.0 * np.pi * t / period)
    meas = 20.0 * np.sin(2.0 * np.pi * (t - shift) / period)
    delay, rmse = metrics(ref, meas, dt=dt, max_lag_s=period)
    assert abs(delay - shift) <= dt + 1e-12
    assert rmse <= 1e-6


def test_metrics_constant_offset():
    t = np.arange(0.0, 50.0, 0.01)
    ref = 20.0 * np.sin(2.0 * np.pi * t / 25.0)
    delay, rmse = metrics(ref, ref + 3.0, dt=0.01, max_lag_s=25.0)
    assert delay == 0.0
    assert math.isclose(rmse, 3.0, rel_tol=1e-12)


def test_metrics_zero_variance():
    with pytest.raises(ZeroVarianceError):
        metrics(np.ones(100), np.arange(100.0), dt=0.01)


def test_metrics_validation():
    with pytest.raises(ValueError):
        metrics(np.ones(3), np.ones(2), dt=0.01)
    with pytest.raises(ValueError):
        metrics(np.ones(3), np.ones(3), dt=0.0)


# ---------------------------------------------------------------------------
# Trajectory runs.

def test_trajectory_spec_validation():
    with pytest.raises(ValueError):
        TrajectorySpec(axis="YAW")
    with pytest.raises(ValueError):
        TrajectorySpec(axis="FE", period_s=0.0)
    with pytest.raises(ValueError):
        TrajectorySpec(axis="FE", cycles=0)
    with pytest.raises(ValueError):
        TrajectorySpec(axis="FE", control_rate_hz=0.0)
    spec = TrajectorySpec(axis="FE", amplitude_deg=20.0, period_s=25.0)
    assert spec.duration_s == 100.0
    assert spec.reference(25.0 / 4.0) == pytest.approx(20.0)


def test_track_is_deterministic(suit):
    spec = TrajectorySpec(axis="FE", cycles=1)
    a = track(suit, PlantParams(), default_controller("FE"), spec)
    b = track(suit, PlantParams(), default_controller("FE"), spec)
    assert np.array_equal(a.euler_deg, b.euler_deg)
    assert np.array_equal(a.pressures_kpa, b.pressures_kpa)
    assert a.delay_s == b.delay_s and a.rmse_deg == b.rmse_deg


def test_track_records_full_series(suit):
    spec = TrajectorySpec(axis="FE", cycles=1)
    res = track(suit, PlantParams(), default_controller("FE"), spec)
    n = int(round(spec.duration_s / 0.005)) + 1
    assert res.t_s.shape == (n,)
    assert res.reference_deg.shape == (n,)
    assert res.measured_deg.shape == (n,)
    assert res.euler_deg.shape == (n, 3)
    assert res.pressures_kpa.shape == (n, 5)
    assert np.all(res.pressures_kpa >= 0.0)
    assert np.all(res.pressures_kpa <= 138.0)
    assert res.t_s[0] == 0.0 and res.t_s[-1] == pytest.approx(25.0)


def test_ld_mirror_negation(suit):
    spec_p = TrajectorySpec(axis="LD", cycles=1)
    spec_n = TrajectorySpec(axis="LD", cycles=1, amplitude_deg=-20.0)
    res_p = track(suit, PlantParams(), default_controller("LD"), spec_p)
    res_n = track(suit, PlantParams(), default_controller("LD"), spec_n)
    assert np.max(np.abs(res_p.measured_deg + res_n.measured_deg)) < 1e-6
    mirrored = res_n.pressures_kpa[:, [1, 0, 2, 4, 3]]
    assert np.max(np.abs(res_p.pressures_kpa - mirrored)) < 1e-6
