"""Quasi-static torque balance of the suit at a fixed head pose.

Each actuator produces a tension along its final routed segment; the
torque about the neck joint is the sum of moment arm times tension.
Because tension is affine in pressure, the actuator torque splits into a
pressure-proportional part and a passive elastic part:

    tau_total(P) = A @ P + tau_elastic,     A[:, c] = sum over channel c
                                            of arm_i * C_i(eps_i) * 1000

with P in kPa and A in N*m/kPa.  Compression is the component of the
total tension pressing the head onto the joint, measured along the line
from the joint toward the rotated center of mass: positive values load
the cervical spine.

Torque sums are accumulated per channel and combined with a fixed
pairwise tree: left/right channel pairs then swap as whole operands of a
commutative addition, so a mirrored pose reproduces mirrored torques
bitwise instead of merely to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (HeadPose, N_CHANNELS, SuitConfig, elastic_forces,
                       gravity_torque, ideal_coefficients, pose_states,
                       rotation, suit_arrays)

KPA_TO_PA = 1000.0


@dataclass(frozen=True)
class PressureVector:
    """Commanded pressure per supply channel, kPa."""

    values: tuple[float, float, float, float, float]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} channel pressures, "
                             f"got {len(vals)}")
        for v in vals:
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"pressures must be finite and "
                                 f"nonnegative, got {v}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls) -> "PressureVector":
        return cls((0.0,) * N_CHANNELS)

    @classmethod
    def uniform(cls, kpa: float) -> "PressureVector":
        return cls((float(kpa),) * N_CHANNELS)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)


@dataclass(frozen=True)
class StaticsBreakdown:
    """Torque balance and per-actuator detail at one pose."""

    tau_fpam: np.ndarray       # actuator torque, pressure + elastic, N*m
    tau_elastic: np.ndarray    # passive part alone (zero pressure), N*m
    tau_gravity: np.ndarray    # head weight torque, N*m
    compression: float         # joint load along the CoM line, N
    tensions: np.ndarray       # per-actuator tension, N
    contractions: np.ndarray   # per-actuator contraction ratio


def channel_totals(contrib: np.ndarray, channels: np.ndarray) -> np.ndarray:
    """Sum per-actuator contributions (n,) or (n, k) into 5 channel bins."""
    out = np.zeros((N_CHANNELS,) + contrib.shape[1:])
    np.add.at(out, channels, contrib)
    return out


def balanced_total(bins: np.ndarray) -> np.ndarray:
    """Combine 5 channel bins as ((1+2)+3)+(4+5).

    The association exposes each left/right pair to one commutative
    addition, keeping mirrored evaluations bitwise consistent.
    """
    return ((bins[0] + bins[1]) + bins[2]) + (bins[3] + bins[4])


def _pressures_per_actuator(arrays, pressures: np.ndarray) -> np.ndarray:
    return pressures[arrays.channels]


def evaluate(suit: SuitConfig, pose: HeadPose,
             pressures: PressureVector | None = None,
             enforce_limits: bool = True) -> StaticsBreakdown:
    """Full static breakdown of the suit at ``pose``.

    With ``enforce_limits`` a channel pressure above any connected
    actuator's rated maximum raises ValueError; passing False allows
    overdriven what-if evaluations.
    """
    if pressures is None:
        pressures = PressureVector.zero()
    arrays = suit_arrays(suit)
    p = pressures.as_array()
    per_act = _pressures_per_actuator(arrays, p)
    if enforce_limits and np.any(per_act > arrays.P_max + 1e-9):
        worst = int(np.argmax(per_act - arrays.P_max))
        raise ValueError(
            f"channel {arrays.channels[worst] + 1} commands "
            f"{per_act[worst]:g} kPa above the rated "
            f"{arrays.P_max[worst]:g} kPa")

    R = rotation(pose)
    _, eps, dirs, arms = pose_states(arrays, R)
    coeff = ideal_coefficients(arrays, eps)
    elastic = elastic_forces(arrays, eps)
    tensions = coeff * per_act * KPA_TO_PA + elastic

    tau_fpam = balanced_total(
        channel_totals(arms * tensions[:, None], arrays.channels))
    tau_elastic = balanced_total(
        channel_totals(arms * elastic[:, None], arrays.channels))
    tau_grav = gravity_torque(suit.body, R)

    com = R @ np.asarray(suit.body.com_offset)
    u_hat = com / np.linalg.norm(com)
    press = tensions * (dirs @ -u_hat)
    compression = float(balanced_total(
        channel_totals(press, arrays.channels)))

    return StaticsBreakdown(tau_fpam=tau_fpam, tau_elastic=tau_elastic,
                            tau_gravity=tau_grav, compression=compression,
                            tensions=tensions, contractions=eps)


def torque_from_arrays(arrays, body, R: np.ndarray,
                       pressures_kpa: np.ndarray) -> np.ndarray:
    """Net torque tau_fpam + tau_gravity at an orientation matrix.

    Fast path for integrators: skips the PressureVector wrapper and the
    rated-pressure check, taking precomputed suit arrays and the 5
    channel pressures as a bare array.
    """
    _, eps, _, arms = pose_states(arrays, R)
    per_act = pressures_kpa[arrays.channels]
    coeff = ideal_coefficients(arrays, eps)
    tensions = coeff * per_act * KPA_TO_PA + elastic_forces(arrays, eps)
    tau_fpam = balanced_total(
        channel_totals(arms * tensions[:, None], arrays.channels))
    return tau_fpam + gravity_torque(body, R)


def torque_at_rotation(suit: SuitConfig, R: np.ndarray,
                       pressures_kpa: np.ndarray) -> np.ndarray:
    """torque_from_arrays with the arrays resolved from ``suit``."""
    return torque_from_arrays(suit_arrays(suit), suit.body, R,
                              pressures_kpa)


def coefficient_matrix(suit: SuitConfig, pose: HeadPose | np.ndarray
                       ) -> np.ndarray:
    """Pressure-to-torque matrix A (3 x 5), N*m per kPa.

    tau_fpam = A @ P + tau_elastic exactly, for any channel pressures P.
    """
    arrays = suit_arrays(suit)
    R = pose if isinstance(pose, np.ndarray) else rotation(pose)
    _, eps, _, arms = pose_states(arrays, R)
    coeff = ideal_coefficients(arrays, eps)
    contrib = arms * (coeff * KPA_TO_PA)[:, None]
    return channel_totals(contrib, arrays.channels).T
