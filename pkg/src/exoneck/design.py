"""Torque-profile comparison of candidate actuator placements.

Six placements are graded, all built from the default suit's right-side
actuators (placement is left-right symmetric, so one side suffices):

1. two front actuators (long chest-routed + short shoulder), FE and LD
2. the long front actuator alone, FE and LD
3. one crossed back actuator, head mount right, anchored low on the
   back's opposite side, AR
4. the "upside-down V": same back anchoring, head mount moved to the
   back midline, AR
5. placement 3 with its anchors mirrored to the front of the vest, AR
6. placement 4 with its anchors mirrored to the front, AR

Profiles sweep the evaluated axis across the biological range with every
actuator held at one pressure (the rated maximum by default).  Samples
where any actuator would have to exceed its slack length are invalid;
the integral accumulates only torque that promotes the placement's
working direction (flexion for FE, rightward for LD and AR), so partial
credit is never taken from counterproductive flank regions.

Derived placements 4-6 keep the donor actuator's neutral-pose
contraction by restretching (recomputing L0 for the new routing), so the
comparison isolates the moment-arm geometry rather than mixing in a
force-law operating-point shift.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .errors import ConfigError
from .geometry import (Actuator, ActuatorPath, SuitConfig, actuator_state,
                       rotation)
from .workspace import BIOLOGICAL_ROM_DEG, _axis_pose

# Torque sign that promotes each placement's working direction: flexion
# is -x, rightward lateral deviation +y, rightward axial rotation -z.
PROMOTING_SIGN = {"FE": -1.0, "LD": +1.0, "AR": -1.0}

AXIS_INDEX = {"FE": 0, "LD": 1, "AR": 2}

DEFAULT_SWEEP_PRESSURE_KPA = 138.0
DEFAULT_RESOLUTION_DEG = 1.0

CONFIG_IDS = (1, 2, 3, 4, 5, 6)


@dataclass(frozen=True)
class PlacementConfig:
    """One candidate placement: actuators plus the axis it is graded on."""

    id: int
    axis: str
    actuators: tuple[Actuator, ...]
    label: str = ""

    def __post_init__(self):
        if self.axis not in PROMOTING_SIGN:
            raise ConfigError(f"unknown evaluation axis {self.axis!r}")
        if not self.actuators:
            raise ConfigError("a placement needs at least one actuator")


@dataclass(frozen=True)
class TorqueProfile:
    """Axis torque of one placement across the biological range."""

    config_id: int
    axis: str
    angles: np.ndarray        # degrees
    torque: np.ndarray        # N*m, signed axis component
    valid: np.ndarray         # all actuators within slack length
    integral: float           # N*m*deg of the promoting part, valid only
    angle_range: float        # degrees covered by valid samples
    torque_at_zero: float     # |axis torque| at the neutral pose


def _by_name(suit: SuitConfig, name: str) -> Actuator:
    for act in suit.actuators:
        if act.path.name == name:
            return act
    raise ConfigError(f"suit {suit.name!r} has no actuator named {name!r}")


def _restretched(donor: Actuator, head_mount, waypoints, vest_mount,
                 label: str) -> Actuator:
    """Donor actuator on a new routing, neutral contraction preserved."""
    path = ActuatorPath(head_mount=head_mount, vest_mount=vest_mount,
                        waypoints=tuple(waypoints),
                        channel=donor.path.channel, group=donor.path.group,
                        name=label)
    pts = np.asarray([vest_mount, *waypoints, head_mount], dtype=float)
    neutral = float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    donor_eps = 1.0 - _neutral_len(donor) / donor.fpam.L0
    L0 = neutral / (1.0 - donor_eps)
    return Actuator(path=path, fpam=replace(donor.fpam, L0=L0))


def _neutral_len(act: Actuator) -> float:
    pts = np.asarray([act.path.vest_mount, *act.path.waypoints,
                      act.path.head_mount], dtype=float)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def _mirror_y(p):
    return (p[0], -p[1], p[2])


def standard_configs(suit: SuitConfig, axis_front: str = "LD"
                     ) -> tuple[PlacementConfig, ...]:
    """The six graded placements, derived from ``suit``'s right side.

    ``axis_front`` selects FE or LD grading for placements 1 and 2;
    back placements 3-6 are always graded on AR.
    """
    if axis_front not in ("FE", "LD"):
        raise ConfigError(f"front placements are graded on FE or LD, "
                          f"not {axis_front!r}")
    front_long = _by_name(suit, "front_long_right")
    front_short = _by_name(suit, "front_short_right")
    cross = _by_name(suit, "back_cross_right")

    mid_mount = (0.0, cross.path.head_mount[1], cross.path.head_mount[2])
    v_back = _restretched(cross, mid_mount, cross.path.waypoints,
                          cross.path.vest_mount, "back_v_right")
    cross_front = _restretched(
        cross, cross.path.head_mount,
        [_mirror_y(w) for w in cross.path.waypoints],
        _mirror_y(cross.path.vest_mount), "front_cross_right")
    v_front = _restretched(
        cross, mid_mount, [_mirror_y(w) for w in cross.path.waypoints],
        _mirror_y(cross.path.vest_mount), "front_v_right")

    return (
        PlacementConfig(1, axis_front, (front_long, front_short),
                        label="two front"),
        PlacementConfig(2, axis_front, (front_long,), label="one front"),
        PlacementConfig(3, "AR", (cross,), label="crossed, back anchor"),
        PlacementConfig(4, "AR", (v_back,), label="V, back anchor"),
        PlacementConfig(5, "AR", (cross_front,),
                        label="crossed, front anchor"),
        PlacementConfig(6, "AR", (v_front,), label="V, front anchor"),
    )


def _axis_torque(config: PlacementConfig, angle: float, pressure: float
                 ) -> tuple[float, bool]:
    from .actuator import elastic_force, ideal_force_coefficient

    R = rotation(_axis_pose(config.axis, angle))
    total = 0.0
    valid = True
    k = AXIS_INDEX[config.axis]
    for act in config.actuators:
        state = actuator_state(act, R)
        if state.contraction < 0.0:
            valid = False
        coeff = ideal_force_coefficient(act.fpam, state.contraction)
        tension = coeff * pressure * 1000.0 + elastic_force(
            act.fpam, state.contraction)
        total += tension * state.moment_arm[k]
    return total, valid


def torque_profile(suit: SuitConfig, config: PlacementConfig,
                   pressure: float = DEFAULT_SWEEP_PRESSURE_KPA,
                   resolution: float = DEFAULT_RESOLUTION_DEG
                   ) -> TorqueProfile:
    """Sweep the placement's axis and integrate its promoting torque.

    ``suit`` supplies nothing here beyond having donated the placement's
    actuators; the sweep drives them directly at one shared pressure.
    """
    if resolution <= 0.0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    lo, hi = BIOLOGICAL_ROM_DEG[config.axis]
    count = int(round((hi - lo) / resolution)) + 1
    angles = np.linspace(lo, hi, count)
    torque = np.zeros(count)
    valid = np.zeros(count, dtype=bool)
    for i, angle in enumerate(angles):
        torque[i], valid[i] = _axis_torque(config, float(angle), pressure)

    sign = PROMOTING_SIGN[config.axis]
    promoting = np.where(valid, np.clip(sign * torque, 0.0, None), 0.0)
    integral = float(np.trapezoid(promoting, angles))
    angle_range = _valid_measure(angles, valid)
    tau0, _ = _axis_torque(config, 0.0, pressure)
    return TorqueProfile(config_id=config.id, axis=config.axis,
                         angles=angles, torque=torque, valid=valid,
                         integral=integral, angle_range=angle_range,
                         torque_at_zero=abs(tau0))


def _valid_measure(angles: np.ndarray, valid: np.ndarray) -> float:
    """Degrees spanned by maximal runs of valid samples."""
    total = 0.0
    n = len(angles)
    i = 0
    while i < n:
        if not valid[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and valid[j + 1]:
            j += 1
        total += float(angles[j] - angles[i])
        i = j + 1
    return total


@dataclass(frozen=True)
class ComparisonReport:
    """Profiles of several placements, ranked by torque at neutral."""

    profiles: tuple[TorqueProfile, ...]
    ranking: tuple[int, ...]              # config ids, best first


def compare(suit: SuitConfig, configs, pressure: float =
            DEFAULT_SWEEP_PRESSURE_KPA, resolution: float =
            DEFAULT_RESOLUTION_DEG) -> ComparisonReport:
    """Profile each placement and rank by torque at the neutral pose."""
    profiles = tuple(torque_profile(suit, cfg, pressure, resolution)
                     for cfg in configs)
    order = sorted(profiles, key=lambda p: (-p.torque_at_zero, p.config_id))
    return ComparisonReport(profiles=profiles,
                            ranking=tuple(p.config_id for p in order))


def measured_reference() -> dict[tuple[int, str], float]:
    """Benchtop peak forces per (placement id, axis), newtons.

    Static measurement data shipped with the package for side-by-side
    reporting; never produced by the model.  The front-anchored back
    placements are known to disagree with modeled torques (the routing
    bends around the neck), so these are context, not targets.
    """
    ref = resources.files("exoneck.data") / "design_benchtop_reference.csv"
    out: dict[tuple[int, str], float] = {}
    with ref.open("r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["config_id"]), row["axis"])] = float(row["force_n"])
    return out
