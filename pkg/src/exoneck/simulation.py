"""Closed-loop dynamics: rigid head on fPAM torques with feedback.

The head is a rigid body on a spherical neck joint, driven by the net
actuator torque from the statics model plus gravity, with viscous joint
damping.  Channel pressures follow commanded values through a
first-order pneumatic lag.  Orientation integrates as a unit quaternion
(body to torso frame) with body-frame angular velocity, fixed-step
fourth-order Runge-Kutta, renormalizing the quaternion every step.

Feedback is antagonistic, one controller per tracked axis: the axis
error (in the working-direction convention below) scales a pressure
term that is added to the axis's agonist channels and subtracted from
its antagonists, on top of a shared baseline pressure, clamped to the
regulator range.  Each channel may belong to at most one active axis.

Working-direction conventions for references, errors and recorded
series (chosen so a positive command drives the agonist set):

* FE: flexion positive, angle = -theta_x (front channels 1, 2 agonist)
* LD: rightward positive, angle = +theta_y (right channel 2 agonist)
* AR: rightward positive, angle = -theta_z (right crossed channel 5
  agonist, left crossed channel 4 antagonist)

None of the dynamics constants (inertia, damping, pneumatic lag) follow
from the quasi-static model; the defaults are plausibility choices
(point head mass at the CoM distance for the x/y inertia) and every one
of them is overridable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChannelConflictError, SimulationFault, ZeroVarianceError
from .geometry import (HeadPose, N_CHANNELS, SuitConfig, euler_from_matrix,
                       rotation, suit_arrays)
from .statics import PressureVector, torque_from_arrays

DEFAULT_INERTIA_KG_M2 = (0.133, 0.133, 0.02)
DEFAULT_DAMPING_NM_S = 0.5
DEFAULT_PNEUMATIC_TAU_S = 0.3
DEFAULT_TIMESTEP_S = 0.005

BASELINE_PRESSURE_KPA = 34.5
PRESSURE_MAX_KPA = 138.0

# Proportional gains, kPa per degree of axis error, tuned once against
# the default suit (see README); integral action is available but off.
# FE sits at ~65% of its empirically mapped instability onset (0.30-0.35
# with the 0.3 s pneumatic lag); AR at ~75% of its Routh bound with the
# FE hold loop co-active; LD is best-effort (no tracking criterion).
DEFAULT_GAINS_KPA_PER_DEG = {"FE": 0.2, "LD": 0.4, "AR": 0.7,
                             "FE_HOLD": 0.2}

TRACKING_AXES = ("FE", "LD", "AR")


def axis_angle_from_euler(axis: str, euler_deg) -> float:
    """Working-direction angle of one axis from an Euler triple."""
    tx, ty, tz = euler_deg
    if axis == "FE":
        return -float(tx)
    if axis == "LD":
        return float(ty)
    if axis == "AR":
        return -float(tz)
    raise ValueError(f"unknown axis {axis!r}")


def axis_angle(axis: str, pose: HeadPose) -> float:
    return axis_angle_from_euler(axis, pose.angles())


def pose_from_axis_angle(axis: str, angle: float) -> HeadPose:
    """Pose with one working-direction angle set, other axes neutral."""
    if axis == "FE":
        return HeadPose(theta_x=-angle)
    if axis == "LD":
        return HeadPose(theta_y=angle)
    if axis == "AR":
        return HeadPose(theta_z=-angle)
    raise ValueError(f"unknown axis {axis!r}")


def pose_from_working_angles(fe: float, ld: float, ar: float) -> HeadPose:
    """Pose from the three working-direction angles, degrees.

    Flexion, rightward lateral bend and rightward axial rotation are
    positive; the Euler composition order is the HeadPose convention.
    """
    return HeadPose(theta_x=-fe, theta_y=ld, theta_z=-ar)


# ---------------------------------------------------------------------------
# Quaternions, scalar-first (w, x, y, z), body-to-torso.

def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q)


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(R: np.ndarray) -> np.ndarray:
    """Unit quaternion of a rotation matrix (largest-pivot branch)."""
    t = np.trace(R)
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(1.0 + R[i, i] - R[j, j] - R[k, k], 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    return quat_normalize(q)


def quat_from_pose(pose: HeadPose) -> np.ndarray:
    return quat_from_matrix(rotation(pose))


# ---------------------------------------------------------------------------
# Plant.

@dataclass(frozen=True)
class PlantParams:
    """Dynamics constants of the simulated head."""

    inertia: np.ndarray = DEFAULT_INERTIA_KG_M2      # 3x3 or 3 diagonal
    damping: np.ndarray = DEFAULT_DAMPING_NM_S       # per body axis
    pneumatic_time_constant: float = DEFAULT_PNEUMATIC_TAU_S
    timestep: float = DEFAULT_TIMESTEP_S
    external_torque: np.ndarray = (0.0, 0.0, 0.0)    # torso frame, N*m

    def __post_init__(self):
        inertia = np.asarray(self.inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        if inertia.shape != (3, 3):
            raise ValueError("inertia must be a 3-vector diagonal or 3x3")
        try:
            np.linalg.cholesky(inertia)
        except np.linalg.LinAlgError as exc:
            raise ValueError("inertia must be positive definite") from exc
        damping = np.broadcast_to(
            np.asarray(self.damping, dtype=float), (3,)).copy()
        if np.any(damping < 0.0):
            raise ValueError("damping must be nonnegative")
        if not self.pneumatic_time_constant > 0.0:
            raise ValueError("pneumatic time constant must be positive")
        if not self.timestep > 0.0:
            raise ValueError("timestep must be positive")
        ext = np.asarray(self.external_torque, dtype=float)
        if ext.shape != (3,):
            raise ValueError("external torque must be a 3-vector")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "damping", damping)
        object.__setattr__(self, "external_torque", ext)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))


@dataclass(frozen=True)
class SimState:
    """Instantaneous plant state."""

    orientation: np.ndarray        # unit quaternion, body to torso
    angular_velocity: np.ndarray   # rad/s, body frame
    pressures: np.ndarray          # actual channel pressures, kPa

    def __post_init__(self):
        q = np.asarray(self.orientation, dtype=float)
        w = np.asarray(self.angular_velocity, dtype=float)
        p = np.asarray(self.pressures, dtype=float)
        if q.shape != (4,) or w.shape != (3,) or p.shape != (N_CHANNELS,):
            raise ValueError("state shapes must be (4,), (3,), (5,)")
        if abs(float(np.linalg.norm(q)) - 1.0) > 1e-6:
            raise ValueError("orientation quaternion must be unit norm")
        object.__setattr__(self, "orientation", q)
        object.__setattr__(self, "angular_velocity", w)
        object.__setattr__(self, "pressures", p)

    @classmethod
    def at_pose(cls, pose: HeadPose, pressures_kpa: float = 0.0
                ) -> "SimState":
        return cls(orientation=quat_from_pose(pose),
                   angular_velocity=np.zeros(3),
                   pressures=np.full(N_CHANNELS, float(pressures_kpa)))

    def euler_deg(self) -> tuple[float, float, float]:
        return euler_from_matrix(quat_to_matrix(self.orientation))


def _pack(q, w, p) -> np.ndarray:
    return np.concatenate([q, w, p])


def _derivative(y: np.ndarray, p_cmd: np.ndarray, params: PlantParams,
                arrays, body) -> np.ndarray:
    q = y[0:4]
    w = y[4:7]
    p = y[7:]
    R = quat_to_matrix(quat_normalize(q))
    tau_world = torque_from_arrays(arrays, body, R, p) \
        + params.external_torque
    tau_body = R.T @ tau_world
    iw = params.inertia @ w
    wdot = params._inertia_inv @ (tau_body - params.damping * w
                                  - np.cross(w, iw))
    qdot = 0.5 * quat_multiply(q, np.array([0.0, w[0], w[1], w[2]]))
    pdot = (p_cmd - p) / params.pneumatic_time_constant
    return np.concatenate([qdot, wdot, pdot])


def _rk4(y: np.ndarray, p_cmd: np.ndarray, params: PlantParams, arrays,
         body) -> np.ndarray:
    dt = params.timestep
    # callers turn a non-finite result into SimulationFault, so the
    # transient overflow warnings on the faulting step carry no signal
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = _derivative(y, p_cmd, params, arrays, body)
        k2 = _derivative(y + 0.5 * dt * k1, p_cmd, params, arrays, body)
        k3 = _derivative(y + 0.5 * dt * k2, p_cmd, params, arrays, body)
        k4 = _derivative(y + dt * k3, p_cmd, params, arrays, body)
        y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y_next[0:4] = quat_normalize(y_next[0:4])
    return y_next


def step(state: SimState, pressures_commanded: PressureVector | np.ndarray,
         params: PlantParams, suit: SuitConfig) -> SimState:
    """Advance one plant timestep toward the commanded pressures."""
    if isinstance(pressures_commanded, PressureVector):
        p_cmd = pressures_commanded.as_array()
    else:
        p_cmd = np.asarray(pressures_commanded, dtype=float)
    y = _pack(state.orientation, state.angular_velocity, state.pressures)
    y_next = _rk4(y, p_cmd, params, suit_arrays(suit), suit.body)
    if not np.all(np.isfinite(y_next)):
        raise SimulationFault("integration produced a non-finite state")
    return SimState(orientation=y_next[0:4], angular_velocity=y_next[4:7],
                    pressures=y_next[7:])


# ---------------------------------------------------------------------------
# Antagonistic feedback.

@dataclass(frozen=True)
class ControllerAxis:
    """Feedback on one axis: error scales agonist-vs-antagonist pressure."""

    axis: str
    kp: float                          # kPa per degree
    agonist: tuple[int, ...]           # channel numbers, 1-based
    antagonist: tuple[int, ...]
    ki: float = 0.0                    # kPa per degree-second

    def __post_init__(self):
        if self.axis not in TRACKING_AXES:
            raise ChannelConflictError(
                f"unknown controller axis {self.axis!r}")
        if self.kp < 0.0 or self.ki < 0.0:
            raise ValueError("gains must be nonnegative")
        ag = tuple(int(c) for c in self.agonist)
        ant = tuple(int(c) for c in self.antagonist)
        for ch in ag + ant:
            if not 1 <= ch <= N_CHANNELS:
                raise ValueError(f"channel {ch} outside 1..{N_CHANNELS}")
        if set(ag) & set(ant):
            raise ChannelConflictError(
                f"{self.axis}: agonist and antagonist sets overlap")
        object.__setattr__(self, "agonist", ag)
        object.__setattr__(self, "antagonist", ant)


@dataclass(frozen=True)
class ControllerConfig:
    """Active axis controllers sharing one baseline pressure."""

    axes: tuple[ControllerAxis, ...]
    initial_pressure: float = BASELINE_PRESSURE_KPA
    pressure_min: float = 0.0
    pressure_max: float = PRESSURE_MAX_KPA

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not 0.0 <= self.pressure_min <= self.pressure_max:
            raise ValueError("pressure bounds must satisfy 0 <= min <= max")
        if not (self.pressure_min <= self.initial_pressure
                <= self.pressure_max):
            raise ValueError("initial pressure must lie within the bounds")
        claimed: dict[int, str] = {}
        for ax in self.axes:
            for ch in ax.agonist + ax.antagonist:
                if ch in claimed:
                    raise ChannelConflictError(
                        f"channel {ch} driven by both {claimed[ch]} "
                        f"and {ax.axis}")
                claimed[ch] = ax.axis


def default_controller(axis: str) -> ControllerConfig:
    """Shipped controller for tracking one axis on the default suit.

    AR tracking keeps a flexion-extension hold loop active (fronts
    against the back middle only, leaving the crossed channels to the
    AR loop) because gravity cannot hold the head pitched without it.
    """
    gains = DEFAULT_GAINS_KPA_PER_DEG
    if axis == "FE":
        axes = (ControllerAxis("FE", gains["FE"], (1, 2), (3, 4, 5)),)
    elif axis == "LD":
        axes = (ControllerAxis("LD", gains["LD"], (2,), (1,)),)
    elif axis == "AR":
        axes = (ControllerAxis("AR", gains["AR"], (5,), (4,)),
                ControllerAxis("FE", gains["FE_HOLD"], (1, 2), (3,)))
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return ControllerConfig(axes=axes)


class AntagonisticController:
    """Stateful wrapper adding optional integral action per axis."""

    def __init__(self, config: ControllerConfig):
        self.config = config
        self._integral = np.zeros(len(config.axes))

    def reset(self) -> None:
        self._integral[:] = 0.0

    def update(self, reference: HeadPose, measured: HeadPose,
               dt: float) -> PressureVector:
        cfg = self.config
        p = np.full(N_CHANNELS, cfg.initial_pressure)
        for i, ax in enumerate(cfg.axes):
            err = axis_angle(ax.axis, reference) - axis_angle(
                ax.axis, measured)
            if ax.ki > 0.0:
                self._integral[i] += err * dt
            u = ax.kp * err + ax.ki * self._integral[i]
            for ch in ax.agonist:
                p[ch - 1] += u
            for ch in ax.antagonist:
                p[ch - 1] -= u
        np.clip(p, cfg.pressure_min, cfg.pressure_max, out=p)
        return PressureVector(tuple(p))


def antagonistic_controller(reference: HeadPose, measured: HeadPose,
                            config: ControllerConfig) -> PressureVector:
    """One stateless (proportional-only) controller evaluation."""
    return AntagonisticController(config).update(reference, measured, 0.0)


# ---------------------------------------------------------------------------
# Trajectory tracking.

@dataclass(frozen=True)
class TrajectorySpec:
    """Sinusoidal reference on one axis, from the resting pose."""

    axis: str
    amplitude_deg: float = 20.0
    period_s: float = 25.0
    cycles: int = 4
    control_rate_hz: float = 100.0

    def __post_init__(self):
        if self.axis not in TRACKING_AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        if not self.period_s > 0.0:
            raise ValueError("period must be positive")
        if self.cycles < 1:
            raise ValueError("cycles must be at least 1")
        if not self.control_rate_hz > 0.0:
            raise ValueError("control rate must be positive")

    def reference(self, t: float) -> float:
        return self.amplitude_deg * math.sin(
            2.0 * math.pi * t / self.period_s)

    @property
    def duration_s(self) -> float:
        return self.cycles * self.period_s


@dataclass(frozen=True)
class TrajectoryResult:
    """Recorded run plus its tracking metrics."""

    axis: str
    t_s: np.ndarray
    reference_deg: np.ndarray        # working-direction axis angle
    measured_deg: np.ndarray
    euler_deg: np.ndarray            # (N, 3) full measured Euler angles
    pressures_kpa: np.ndarray        # (N, 5) actual channel pressures
    delay_s: float
    rmse_deg: float


def track(suit: SuitConfig, plant: PlantParams, controller: ControllerConfig,
          spec: TrajectorySpec) -> TrajectoryResult:
    """Run the closed loop for the full trajectory and score it.

    The controller updates at the spec's rate with zero-order hold
    between updates; the plant advances at its own timestep.  A
    non-finite state raises SimulationFault with the recorded prefix
    attached as ``partial``.
    """
    dt = plant.timestep
    n_steps = int(round(spec.duration_s / dt))
    control_every = max(1, int(round(1.0 / (spec.control_rate_hz * dt))))
    arrays = suit_arrays(suit)
    body = suit.body

    ctl = AntagonisticController(controller)
    q = quat_from_pose(HeadPose.neutral())
    w = np.zeros(3)
    p_act = np.full(N_CHANNELS, controller.initial_pressure)
    y = _pack(q, w, p_act)
    p_cmd = p_act.copy()

    n = n_steps + 1
    t_s = np.empty(n)
    ref_deg = np.empty(n)
    meas_deg = np.empty(n)
    euler = np.empty((n, 3))
    press = np.empty((n, N_CHANNELS))

    for i in range(n):
        t = i * dt
        eul = euler_from_matrix(quat_to_matrix(y[0:4]))
        t_s[i] = t
        ref_deg[i] = spec.reference(t)
        meas_deg[i] = axis_angle_from_euler(spec.axis, eul)
        euler[i] = eul
        press[i] = y[7:]
        if i == n_steps:
            break
        if i % control_every == 0:
            measured_pose = HeadPose(*eul)
            reference_pose = pose_from_axis_angle(spec.axis, ref_deg[i])
            p_cmd = ctl.update(reference_pose, measured_pose,
                               control_every * dt).as_array()
        y = _rk4(y, p_cmd, plant, arrays, body)
        if not np.all(np.isfinite(y)):
            partial = TrajectoryResult(
                axis=spec.axis, t_s=t_s[:i + 1],
                reference_deg=ref_deg[:i + 1], measured_deg=meas_deg[:i + 1],
                euler_deg=euler[:i + 1], pressures_kpa=press[:i + 1],
                delay_s=float("nan"), rmse_deg=float("nan"))
            raise SimulationFault(
                f"non-finite state at t = {t + dt:.3f} s", partial=partial)

    delay_s, rmse_deg = metrics(ref_deg, meas_deg, dt,
                                max_lag_s=spec.period_s)
    return TrajectoryResult(axis=spec.axis, t_s=t_s, reference_deg=ref_deg,
                            measured_deg=meas_deg, euler_deg=euler,
                            pressures_kpa=press, delay_s=delay_s,
                            rmse_deg=rmse_deg)


def metrics(reference, measured, dt: float,
            max_lag_s: float | None = None) -> tuple[float, float]:
    """(delay seconds, post-shift RMSE) of measured against reference.

    Delay maximizes the cross-correlation of the demeaned series,
    normalized by the energy of each overlapping segment; positive
    delay means the measured series lags.  Near-ties resolve to the
    smallest |lag|.  The RMSE compares the series after shifting by
    that lag, over the overlapping region, without demeaning.  Raises
    ZeroVarianceError when either series is constant (no correlation
    peak exists).
    """
    ref = np.asarray(reference, dtype=float).ravel()
    meas = np.asarray(measured, dtype=float).ravel()
    if ref.shape != meas.shape or ref.size < 2:
        raise ValueError("series must share a length of at least 2")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    dref = ref - ref.mean()
    dmeas = meas - meas.mean()
    if np.max(np.abs(dref)) == 0.0 or np.max(np.abs(dmeas)) == 0.0:
        raise ZeroVarianceError("delay is undefined for a constant series")

    n = ref.size
    k_max = n - 1
    if max_lag_s is not None:
        k_max = min(k_max, int(round(max_lag_s / dt)))

    # prefix sums of squares give every overlap's energy in O(1);
    # normalizing by it keeps short-overlap lags from winning spuriously
    sr = np.concatenate(([0.0], np.cumsum(dref * dref)))
    sm = np.concatenate(([0.0], np.cumsum(dmeas * dmeas)))

    best_k = 0
    best_val = -np.inf
    for k in sorted(range(-k_max, k_max + 1), key=lambda k: (abs(k), k)):
        if k >= 0:
            a, b = dref[:n - k], dmeas[k:]
            na2, nb2 = sr[n - k], sm[n] - sm[k]
        else:
            a, b = dref[-k:], dmeas[:n + k]
            na2, nb2 = sr[n] - sr[-k], sm[n + k]
        if na2 <= 0.0 or nb2 <= 0.0:
            continue           # overlap constant in one series: no peak
        val = float(a @ b) / math.sqrt(na2 * nb2)
        # smaller |k| was visited first, so a float-level tie keeps it
        if val > best_val + 1e-12:
            best_val = val
            best_k = k

    k = best_k
    if k >= 0:
        diff = ref[:n - k] - meas[k:]
    else:
        diff = ref[-k:] - meas[:n + k]
    rmse = float(np.sqrt(np.mean(diff * diff)))
    return (k * dt, rmse)
