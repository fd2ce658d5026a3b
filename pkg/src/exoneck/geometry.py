"""Head pose kinematics and actuator routing geometry.

Frames and conventions, used everywhere downstream:

* Torso frame: origin at the neck joint center, x toward the right
  shoulder, y forward, z up.  Head-mounted points are expressed in the
  head frame, which coincides with the torso frame at the neutral pose.
* Head orientation: body-fixed x-y-z Euler angles in degrees,
  R = Rx(theta_x) @ Ry(theta_y) @ Rz(theta_z).  Flexion (chin down) is
  negative theta_x, rightward lateral deviation is positive theta_y,
  rightward axial rotation is negative theta_z.
* An actuator path runs vest_mount -> waypoints -> head_mount.  Only the
  head mount moves with the head; waypoints and the vest mount are fixed
  in the torso frame.  The tensile force on the head acts from the
  rotated head mount toward the last fixed point (the waypoint nearest
  the head, or the vest mount when there are none), and the moment arm
  about the joint is mount x direction for that final segment.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .actuator import FpamParams, default_fpam
from .errors import ConfigError

GRAVITY_M_S2 = 9.81

ACTUATOR_GROUPS = ("front_long", "front_short", "back_middle",
                   "back_cross_left", "back_cross_right")

N_CHANNELS = 5


def _as_vec3(value, what: str) -> tuple[float, float, float]:
    vec = tuple(float(v) for v in value)
    if len(vec) != 3:
        raise ValueError(f"{what} must have 3 components, got {len(vec)}")
    return vec


@dataclass(frozen=True)
class HeadPose:
    """Head orientation as body-fixed x-y-z Euler angles in degrees."""

    theta_x: float = 0.0
    theta_y: float = 0.0
    theta_z: float = 0.0

    def __post_init__(self):
        for name in ("theta_x", "theta_y", "theta_z"):
            val = getattr(self, name)
            if not -180.0 < val <= 180.0:
                raise ValueError(f"{name} must lie in (-180, 180], got {val}")

    @classmethod
    def neutral(cls) -> "HeadPose":
        return cls(0.0, 0.0, 0.0)

    def angles(self) -> tuple[float, float, float]:
        return (self.theta_x, self.theta_y, self.theta_z)

    def matrix(self) -> np.ndarray:
        return rotation(self)


def rot_x(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    a = math.radians(deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation(pose: HeadPose) -> np.ndarray:
    """Rotation matrix for the body-fixed x-y-z Euler sequence."""
    return rot_x(pose.theta_x) @ rot_y(pose.theta_y) @ rot_z(pose.theta_z)


def euler_from_matrix(R: np.ndarray) -> tuple[float, float, float]:
    """Extract body-fixed x-y-z Euler angles in degrees from a rotation.

    The middle angle is folded into [-90, 90] deg; at the gimbal points
    (|R[0,2]| = 1) the split between first and last angle is not unique
    and theta_z is reported as 0.
    """
    r02 = float(np.clip(R[0, 2], -1.0, 1.0))
    theta_y = math.asin(r02)
    if abs(r02) < 1.0 - 1e-12:
        theta_x = math.atan2(-R[1, 2], R[2, 2])
        theta_z = math.atan2(-R[0, 1], R[0, 0])
    else:
        theta_x = math.atan2(math.copysign(1.0, r02) * R[1, 0], R[1, 1])
        theta_z = 0.0
    return (math.degrees(theta_x), math.degrees(theta_y),
            math.degrees(theta_z))


@dataclass(frozen=True)
class ActuatorPath:
    """Routing of one actuator: vest anchor, fixed waypoints, head mount."""

    head_mount: tuple[float, float, float]
    vest_mount: tuple[float, float, float]
    waypoints: tuple[tuple[float, float, float], ...] = ()
    channel: int = 1
    group: str = "front_long"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "head_mount",
                           _as_vec3(self.head_mount, "head_mount"))
        object.__setattr__(self, "vest_mount",
                           _as_vec3(self.vest_mount, "vest_mount"))
        object.__setattr__(self, "waypoints", tuple(
            _as_vec3(w, "waypoint") for w in self.waypoints))
        if not 1 <= int(self.channel) <= N_CHANNELS:
            raise ValueError(f"channel must be in 1..{N_CHANNELS}, "
                             f"got {self.channel}")
        object.__setattr__(self, "channel", int(self.channel))
        if self.group not in ACTUATOR_GROUPS:
            raise ValueError(f"unknown actuator group {self.group!r}")

    def fixed_points(self) -> tuple[tuple[float, float, float], ...]:
        """Torso-fixed points ordered vest mount first, head side last."""
        return (self.vest_mount,) + self.waypoints

    def last_fixed_point(self) -> tuple[float, float, float]:
        return self.waypoints[-1] if self.waypoints else self.vest_mount

    def base_length(self) -> float:
        """Length of the torso-fixed chain (zero without waypoints)."""
        pts = np.asarray(self.fixed_points())
        if len(pts) == 1:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


@dataclass(frozen=True)
class Actuator:
    """One routed fPAM: path plus its force-law parameters."""

    path: ActuatorPath
    fpam: FpamParams


@dataclass(frozen=True)
class BodyParams:
    """Rigid head-and-neck segment balanced on the neck joint."""

    mass: float = 4.6
    com_offset: tuple[float, float, float] = (0.0, 0.0, 0.17)
    gravity: float = GRAVITY_M_S2

    def __post_init__(self):
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        object.__setattr__(self, "com_offset",
                           _as_vec3(self.com_offset, "com_offset"))
        if not np.linalg.norm(self.com_offset) > 0.0:
            raise ValueError("com_offset must be nonzero")
        if not self.gravity > 0.0:
            raise ValueError("gravity must be positive")


@dataclass(frozen=True)
class SuitConfig:
    """A full exosuit: body model plus routed actuators."""

    name: str
    body: BodyParams
    actuators: tuple[Actuator, ...]

    def __post_init__(self):
        object.__setattr__(self, "actuators", tuple(self.actuators))
        for act in self.actuators:
            if not isinstance(act, Actuator):
                raise ConfigError("actuators must be Actuator instances")

    def channels_used(self) -> tuple[int, ...]:
        return tuple(sorted({a.path.channel for a in self.actuators}))


@dataclass(frozen=True)
class ActuatorState:
    """Pose-dependent state of one actuator."""

    length: float
    contraction: float
    direction: tuple[float, float, float]
    moment_arm: tuple[float, float, float]


def actuator_state(actuator: Actuator, pose: HeadPose | np.ndarray
                   ) -> ActuatorState:
    """Length, contraction, force direction and moment arm at a pose.

    ``pose`` may be a HeadPose or a precomputed rotation matrix.  The
    force direction points from the rotated head mount toward the last
    fixed point.  Raises ValueError when the rotated mount coincides
    with that point (degenerate routing).
    """
    R = pose if isinstance(pose, np.ndarray) else rotation(pose)
    mount = R @ np.asarray(actuator.path.head_mount)
    target = np.asarray(actuator.path.last_fixed_point())
    seg = target - mount
    seg_len = float(np.linalg.norm(seg))
    if seg_len < 1e-12:
        raise ValueError(f"degenerate routing: head mount coincides with "
                         f"the last fixed point for {actuator.path.name!r}")
    direction = seg / seg_len
    length = seg_len + actuator.path.base_length()
    eps = (actuator.fpam.L0 - length) / actuator.fpam.L0
    arm = np.cross(mount, direction)
    return ActuatorState(length=length, contraction=float(eps),
                         direction=tuple(float(v) for v in direction),
                         moment_arm=tuple(float(v) for v in arm))


def jacobian(suit: SuitConfig, pose: HeadPose | np.ndarray) -> np.ndarray:
    """Torque map: columns are moment arms, so tau = J @ tensions."""
    R = pose if isinstance(pose, np.ndarray) else rotation(pose)
    cols = [actuator_state(a, R).moment_arm for a in suit.actuators]
    return np.array(cols).T if cols else np.zeros((3, 0))


def gravity_torque(body: BodyParams, pose: HeadPose | np.ndarray
                   ) -> np.ndarray:
    """Torque of head weight about the neck joint, torso frame, N*m."""
    R = pose if isinstance(pose, np.ndarray) else rotation(pose)
    com = R @ np.asarray(body.com_offset)
    weight = np.array([0.0, 0.0, -body.mass * body.gravity])
    return np.cross(com, weight)


# ---------------------------------------------------------------------------
# Vectorized per-suit evaluation (used by statics, scans, and simulation).

@dataclass(frozen=True)
class SuitArrays:
    """Precomputed per-actuator arrays for batch pose evaluation."""

    head_mounts: np.ndarray     # (n, 3)
    last_fixed: np.ndarray      # (n, 3)
    base_lengths: np.ndarray    # (n,)
    L0: np.ndarray              # (n,)
    ideal_const: np.ndarray     # (n,) pi r0^2 / sin^2 alpha0, signed
    ideal_quad: np.ndarray      # (n,) 3 pi r0^2 / tan^2 alpha0, signed
    elastic: np.ndarray         # (n, 4) ascending coefficients
    channels: np.ndarray        # (n,) zero-based channel index
    P_max: np.ndarray           # (n,)


@functools.lru_cache(maxsize=16)
def suit_arrays(suit: SuitConfig) -> SuitArrays:
    n = len(suit.actuators)
    mounts = np.zeros((n, 3))
    fixed = np.zeros((n, 3))
    base = np.zeros(n)
    L0 = np.zeros(n)
    c_const = np.zeros(n)
    c_quad = np.zeros(n)
    elastic = np.zeros((n, 4))
    channels = np.zeros(n, dtype=int)
    p_max = np.zeros(n)
    for i, act in enumerate(suit.actuators):
        mounts[i] = act.path.head_mount
        fixed[i] = act.path.last_fixed_point()
        base[i] = act.path.base_length()
        L0[i] = act.fpam.L0
        a = math.radians(act.fpam.alpha0)
        sign = -1.0 if act.fpam.sign_convention == "flipped_ideal_term" else 1.0
        area = math.pi * act.fpam.r0 ** 2
        c_const[i] = sign * area / math.sin(a) ** 2
        c_quad[i] = sign * 3.0 * area / math.tan(a) ** 2
        elastic[i] = act.fpam.p
        channels[i] = act.path.channel - 1
        p_max[i] = act.fpam.P_max
    return SuitArrays(head_mounts=mounts, last_fixed=fixed, base_lengths=base,
                      L0=L0, ideal_const=c_const, ideal_quad=c_quad,
                      elastic=elastic, channels=channels, P_max=p_max)


def pose_states(arrays: SuitArrays, R: np.ndarray):
    """Batch actuator state at one pose.

    Returns (lengths, contractions, directions (n,3), moment_arms (n,3)).
    """
    mounts = arrays.head_mounts @ R.T
    seg = arrays.last_fixed - mounts
    seg_len = np.linalg.norm(seg, axis=1)
    if np.any(seg_len < 1e-12):
        raise ValueError("degenerate routing: head mount coincides with "
                         "the last fixed point")
    dirs = seg / seg_len[:, None]
    lengths = seg_len + arrays.base_lengths
    eps = (arrays.L0 - lengths) / arrays.L0
    arms = np.cross(mounts, dirs)
    return lengths, eps, dirs, arms


def ideal_coefficients(arrays: SuitArrays, eps: np.ndarray) -> np.ndarray:
    """Signed geometric pressure coefficients C(eps), square meters."""
    return arrays.ideal_const - arrays.ideal_quad * (eps - 1.0) ** 2


def elastic_forces(arrays: SuitArrays, eps: np.ndarray) -> np.ndarray:
    e = arrays.elastic
    return e[:, 0] + eps * (e[:, 1] + eps * (e[:, 2] + eps * e[:, 3]))


# ---------------------------------------------------------------------------
# Default suit.

# Pre-tension targets: contraction ratio of each group at the neutral pose.
# The stretched length L0 is derived from these so the force law operates
# in its tension-producing band for the load-bearing groups while the
# short shoulder actuators keep a small margin and act as range limiters.
# The back values are solved (not chosen) so that the passive elastic
# torque vanishes at the neutral pose and a uniform 34.5 kPa command
# holds the head still: two conditions, two unknowns.  Re-solve them if
# any mount point or front prestretch changes.
_PRESTRETCH = {
    "front_long": 0.5371,
    "front_short": 0.5179,
    "back_middle": 0.5501266872563183,
    "back_cross": 0.5227798460749197,
}


def _neutral_length(head_mount, waypoints, vest_mount) -> float:
    pts = np.asarray([vest_mount, *waypoints, head_mount], dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def _routed(name, group, channel, head_mount, waypoints, vest_mount,
            prestretch) -> Actuator:
    path = ActuatorPath(head_mount=head_mount, vest_mount=vest_mount,
                        waypoints=tuple(waypoints), channel=channel,
                        group=group, name=name)
    neutral = _neutral_length(head_mount, waypoints, vest_mount)
    L0 = neutral / (1.0 - prestretch)
    return Actuator(path=path, fpam=default_fpam(L0=L0))


def _mirror_x(p):
    return (-p[0], p[1], p[2])


def default_suit() -> SuitConfig:
    """Seven-actuator reference suit, mirror symmetric about the y-z plane.

    Channel layout: 1 = left front pair (long chest-routed actuator plus
    short shoulder actuator), 2 = right front pair, 3 = back middle,
    4 = crossed back actuator mounted left (turns the head left, +z),
    5 = crossed back actuator mounted right (turns right, -z).

    Mounts and prestretches are tuned jointly so that, at the neutral
    pose under a uniform 34.5 kPa hold, the head is balanced and every
    axis has a restoring torque slope whose pressure-dependent part
    vanishes at neutral; the restoring sign is additionally held over
    roughly +-25 degrees on each axis (and at combined yaw-roll poses),
    so feedback through the slow pneumatic lag never has to fight a
    locally divergent plant inside the tracked range.  The crossed back
    actuator keeps its head mount on the x = -y diagonal with an
    x = y waypoint, so mirroring its anchors across the x-z plane
    cancels its yaw moment arm exactly at neutral.
    """
    fl = dict(head_mount=(0.0642, 0.0300, 0.1600),
              waypoints=[(0.0496, 0.0915, 0.0461)],
              vest_mount=(0.1365, 0.1419, -0.1780),
              prestretch=_PRESTRETCH["front_long"])
    fs = dict(head_mount=(0.0200, 0.0149, 0.1054),
              waypoints=[],
              vest_mount=(0.0547, -0.0001, 0.0408),
              prestretch=_PRESTRETCH["front_short"])
    bc = dict(head_mount=(0.0814, -0.0814, 0.0800),
              waypoints=[(-0.0771, -0.0771, -0.0243)],
              vest_mount=(-0.1624, -0.1627, -0.2198),
              prestretch=_PRESTRETCH["back_cross"])

    actuators = (
        _routed("front_long_left", "front_long", 1,
                _mirror_x(fl["head_mount"]),
                [_mirror_x(w) for w in fl["waypoints"]],
                _mirror_x(fl["vest_mount"]), fl["prestretch"]),
        _routed("front_short_left", "front_short", 1,
                _mirror_x(fs["head_mount"]),
                [_mirror_x(w) for w in fs["waypoints"]],
                _mirror_x(fs["vest_mount"]), fs["prestretch"]),
        _routed("front_long_right", "front_long", 2,
                fl["head_mount"], fl["waypoints"], fl["vest_mount"],
                fl["prestretch"]),
        _routed("front_short_right", "front_short", 2,
                fs["head_mount"], fs["waypoints"], fs["vest_mount"],
                fs["prestretch"]),
        _routed("back_middle", "back_middle", 3,
                (0.0, -0.0436, 0.0984), [(0.0, -0.0854, 0.0600)],
                (0.0, -0.1796, -0.1832), _PRESTRETCH["back_middle"]),
        _routed("back_cross_left", "back_cross_left", 4,
                _mirror_x(bc["head_mount"]),
                [_mirror_x(w) for w in bc["waypoints"]],
                _mirror_x(bc["vest_mount"]), bc["prestretch"]),
        _routed("back_cross_right", "back_cross_right", 5,
                bc["head_mount"], bc["waypoints"], bc["vest_mount"],
                bc["prestretch"]),
    )
    return SuitConfig(name="default-7", body=BodyParams(),
                      actuators=actuators)


# ---------------------------------------------------------------------------
# JSON serialization.

def suit_to_dict(suit: SuitConfig) -> dict:
    return {
        "name": suit.name,
        "body": {
            "mass_kg": suit.body.mass,
            "com_m": list(suit.body.com_offset),
        },
        "actuators": [
            {
                "name": a.path.name,
                "head_mount_m": list(a.path.head_mount),
                "waypoints_m": [list(w) for w in a.path.waypoints],
                "vest_mount_m": list(a.path.vest_mount),
                "channel": a.path.channel,
                "group": a.path.group,
                "fpam": {
                    "r0_m": a.fpam.r0,
                    "alpha0_deg": a.fpam.alpha0,
                    "p": list(a.fpam.p),
                    "L0_m": a.fpam.L0,
                    "P_max_kpa": a.fpam.P_max,
                    "sign_convention": a.fpam.sign_convention,
                },
            }
            for a in suit.actuators
        ],
    }


def suit_from_dict(data: dict) -> SuitConfig:
    try:
        body_d = data["body"]
        body = BodyParams(mass=float(body_d["mass_kg"]),
                          com_offset=tuple(body_d["com_m"]))
        actuators = []
        for i, a in enumerate(data["actuators"]):
            fp = a["fpam"]
            fpam = FpamParams(
                r0=float(fp["r0_m"]), alpha0=float(fp["alpha0_deg"]),
                p=tuple(fp["p"]), L0=float(fp["L0_m"]),
                P_max=float(fp.get("P_max_kpa", 138.0)),
                sign_convention=fp.get("sign_convention", "as_printed"))
            path = ActuatorPath(
                head_mount=tuple(a["head_mount_m"]),
                vest_mount=tuple(a["vest_mount_m"]),
                waypoints=tuple(tuple(w) for w in a.get("waypoints_m", [])),
                channel=int(a["channel"]), group=a["group"],
                name=a.get("name", f"actuator_{i}"))
            actuators.append(Actuator(path=path, fpam=fpam))
        return SuitConfig(name=str(data.get("name", "unnamed")), body=body,
                          actuators=tuple(actuators))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid suit description: {exc}") from exc


def load_suit(path: str | Path) -> SuitConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return suit_from_dict(data)


def save_suit(path: str | Path, suit: SuitConfig) -> None:
    Path(path).write_text(json.dumps(suit_to_dict(suit), indent=2) + "\n")
