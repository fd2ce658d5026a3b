"""Pose-wise gravity compensation and feasibility classification.

At a pose the actuators must cancel what gravity and their own passive
elasticity apply to the head:

    tau_des = -tau_elastic - tau_grav,    solve A p ~ tau_des,  p >= 0

with a small ridge weight on the pressures so the flat directions of the
3 x 5 channel map settle on the cheapest pressures.  A pose passes the
gravity condition when the residual torque is within 25 percent of the
gravitational torque (or below 0.01 N*m outright, which also covers the
zero-gravity-torque neutral pose) and no channel exceeds its rated
pressure.  Reachability asks only that every actuator is at or below its
slack length; both conditions are evaluated independently, so an
unreachable pose still reports whether pressures could balance it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nnls
from .geometry import HeadPose, N_CHANNELS, SuitConfig, suit_arrays
from .statics import PressureVector, coefficient_matrix, evaluate

RIDGE_WEIGHT_KPA = 0.06
RELATIVE_TORQUE_TOL = 0.25
ABSOLUTE_TORQUE_TOL_NM = 0.01

LIMITING_CONDITIONS = ("none", "torque_error", "pressure_limit")


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the gravity-compensation solve at one pose."""

    reachable: bool
    grav_ok: bool
    pressures: PressureVector | None
    torque_error: np.ndarray          # residual torque 3-vector, N*m
    relative_error: float | None      # ||err|| / ||tau_grav||, None at zero
    compression: float                # joint load at the solved pressures, N
    limiting_condition: str
    converged: bool


def channel_pressure_caps(suit: SuitConfig) -> np.ndarray:
    """Per-channel rated pressure: the tightest cap of connected actuators."""
    arrays = suit_arrays(suit)
    caps = np.full(N_CHANNELS, np.inf)
    np.minimum.at(caps, arrays.channels, arrays.P_max)
    return caps


def solve_pose(suit: SuitConfig, pose: HeadPose,
               omega: float = RIDGE_WEIGHT_KPA) -> FeasibilityReport:
    """Solve for gravity-balancing channel pressures and grade the pose."""
    passive = evaluate(suit, pose, PressureVector.zero())
    reachable = bool(np.all(passive.contractions >= 0.0))
    tau_des = -passive.tau_elastic - passive.tau_gravity

    A = coefficient_matrix(suit, pose)
    sol = nnls.solve(nnls.NnlsProblem(A=A, b=tau_des, omega=omega))

    if not sol.converged:
        err = passive.tau_fpam + passive.tau_gravity
        return FeasibilityReport(
            reachable=reachable, grav_ok=False, pressures=None,
            torque_error=err, relative_error=_relative(err, passive),
            compression=passive.compression,
            limiting_condition="torque_error", converged=False)

    pressures = PressureVector(tuple(sol.x))
    solved = evaluate(suit, pose, pressures, enforce_limits=False)
    err = solved.tau_fpam + solved.tau_gravity
    err_norm = float(np.linalg.norm(err))
    relative = _relative(err, passive)

    within_caps = bool(np.all(sol.x <= channel_pressure_caps(suit)))
    torque_ok = (relative is not None and relative <= RELATIVE_TORQUE_TOL) \
        or err_norm <= ABSOLUTE_TORQUE_TOL_NM
    grav_ok = torque_ok and within_caps

    if grav_ok:
        limiting = "none"
    elif not within_caps:
        limiting = "pressure_limit"
    else:
        limiting = "torque_error"

    return FeasibilityReport(
        reachable=reachable, grav_ok=grav_ok, pressures=pressures,
        torque_error=err, relative_error=relative,
        compression=solved.compression, limiting_condition=limiting,
        converged=True)


def _relative(err: np.ndarray, passive) -> float | None:
    grav_norm = float(np.linalg.norm(passive.tau_gravity))
    if grav_norm > 0.0:
        return float(np.linalg.norm(err)) / grav_norm
    return None


def classify(suit: SuitConfig, pose: HeadPose,
             compression_limit: float | None = None
             ) -> tuple[bool, bool, bool]:
    """(reachable, grav_ok, compression_ok) at one pose.

    Without a limit the compression condition is vacuously true.
    """
    report = solve_pose(suit, pose)
    compression_ok = (compression_limit is None
                      or report.compression <= compression_limit)
    return (report.reachable, report.grav_ok, bool(compression_ok))
