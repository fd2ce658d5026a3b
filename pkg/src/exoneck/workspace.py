"""Range-of-motion scans and the visual-target workspace grid.

Two complementary views of where the suit lets the head go:

* scan_rom sweeps one principal axis across the biological range with
  the other two angles at zero and grades each sample with the three
  feasibility conditions.  The reported interval per condition is the
  contiguous flagged run around the neutral sample, since the suit is
  donned at neutral and cannot jump across an infeasible gap.
* scan_workspace grades a grid of head orientations that correspond to
  looking at targets placed around the wearer: horizontal angles from
  -90 to +90 degrees (positive to the wearer's left) and vertical
  elevations from -50 to +50 degrees (positive up), in 2.5 degree steps.

A target pose aims the head's forward (+y) axis at the target with zero
roll: rotate up/down about x first, then turn about the vertical,
R = Rz(h) @ Rx(v).  Negative-horizontal targets are evaluated through
their mirrored twin so that a left-right symmetric suit yields exactly
mirror-symmetric grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import HeadPose, SuitConfig, euler_from_matrix, rot_x, rot_z
from .gravity import solve_pose

BIOLOGICAL_ROM_DEG = {
    "FE": (-59.5, 73.7),
    "LD": (-40.9, 43.1),
    "AR": (-80.8, 77.7),
}

AXES = tuple(BIOLOGICAL_ROM_DEG)

WORKSPACE_H_RANGE_DEG = (-90.0, 90.0)
WORKSPACE_V_RANGE_DEG = (-50.0, 50.0)
WORKSPACE_STEP_DEG = 2.5

# Spine-load thresholds (newtons; compression is negative) spanning the
# default suit's gravity-balanced range, for coverage-vs-limit sweeps.
DEFAULT_COMPRESSION_LIMITS_N = (-80.0, -100.0, -120.0, -140.0)

CONDITIONS = ("reachable", "grav_ok", "compression")


def target_to_pose(horizontal: float, vertical: float) -> HeadPose:
    """Head pose that looks at a target (horizontal, vertical) degrees.

    Horizontal is positive toward the wearer's left, vertical positive
    upward.  Raises ValueError at |vertical| >= 90 (gimbal-degenerate)
    or |horizontal| > 180.
    """
    if not abs(horizontal) <= 180.0:
        raise ValueError(f"|horizontal| must be <= 180, got {horizontal}")
    if not abs(vertical) < 90.0:
        raise ValueError(f"|vertical| must be < 90, got {vertical}")
    # Evaluate the left-right mirror image for h < 0 and negate the two
    # mirror-odd angles afterward; this keeps (h, v) and (-h, v) exact
    # mirror poses in floating point.
    h = abs(horizontal)
    R = rot_z(h) @ rot_x(vertical)
    theta_x, theta_y, theta_z = euler_from_matrix(R)
    if horizontal < 0.0:
        theta_y, theta_z = -theta_y, -theta_z
    if theta_z == -180.0:
        theta_z = 180.0
    return HeadPose(theta_x, theta_y, theta_z)


def _axis_pose(axis: str, angle: float) -> HeadPose:
    if axis == "FE":
        return HeadPose(theta_x=angle)
    if axis == "LD":
        return HeadPose(theta_y=angle)
    if axis == "AR":
        return HeadPose(theta_z=angle)
    raise ValueError(f"unknown axis {axis!r}, expected one of {AXES}")


@dataclass(frozen=True)
class RomScan:
    """Feasibility flags along one principal axis."""

    axis: str
    angles: np.ndarray                     # degrees, strictly increasing
    flags: dict                            # condition -> bool array
    compression: np.ndarray                # newtons at solved pressures
    intervals: dict                        # condition -> (lo, hi) degrees
    percent_of_biological: dict            # condition -> percentage
    pressures: np.ndarray = None           # (N, 5) kPa, NaN when unreachable

    @property
    def biological(self) -> tuple[float, float]:
        return BIOLOGICAL_ROM_DEG[self.axis]


def interval_containing_zero(angles: np.ndarray, flags: np.ndarray
                             ) -> tuple[float, float]:
    """Bounds of the contiguous flagged run whose angles straddle 0.

    Returns (0, 0) when no flagged run contains the neutral angle.
    """
    n = len(angles)
    i = 0
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flags[j + 1]:
            j += 1
        if angles[i] <= 0.0 <= angles[j]:
            return (float(angles[i]), float(angles[j]))
        i = j + 1
    return (0.0, 0.0)


def scan_rom(suit: SuitConfig, axis: str, samples: int = 100,
             compression_limit: float | None = None) -> RomScan:
    """Grade ``samples`` poses across the biological range of one axis."""
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    lo, hi = BIOLOGICAL_ROM_DEG[axis]
    angles = np.linspace(lo, hi, samples)
    reachable = np.zeros(samples, dtype=bool)
    grav_ok = np.zeros(samples, dtype=bool)
    compression = np.zeros(samples)
    pressures = np.full((samples, 5), np.nan)
    for i, angle in enumerate(angles):
        report = solve_pose(suit, _axis_pose(axis, float(angle)))
        reachable[i] = report.reachable
        grav_ok[i] = report.grav_ok
        compression[i] = report.compression
        # the force law is extrapolated past slack, so the attempted
        # pressures at an unreachable pose are not worth tabulating
        if report.reachable and report.pressures is not None:
            pressures[i] = report.pressures.as_array()

    flags = {"reachable": reachable, "grav_ok": grav_ok}
    if compression_limit is not None:
        flags["compression"] = compression <= compression_limit

    span = hi - lo
    intervals = {}
    percent = {}
    for name, flag in flags.items():
        a, b = interval_containing_zero(angles, flag)
        intervals[name] = (a, b)
        percent[name] = 100.0 * (b - a) / span
    return RomScan(axis=axis, angles=angles, flags=flags,
                   compression=compression, intervals=intervals,
                   percent_of_biological=percent, pressures=pressures)


@dataclass(frozen=True)
class WorkspaceGrid:
    """Feasibility of every visual-target cell, plus coverage summaries."""

    horizontal: np.ndarray                 # (73,) degrees
    vertical: np.ndarray                   # (41,) degrees
    reachable: np.ndarray                  # (73, 41) bool
    grav_ok: np.ndarray                    # (73, 41) bool
    compression: np.ndarray                # (73, 41) newtons
    compression_limits: tuple[float, ...]
    feasible_at_limit: dict                # limit -> (73, 41) bool
    coverage: dict                         # condition -> percentage

    @property
    def cells(self) -> int:
        return self.reachable.size


def _grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count)


def scan_workspace(suit: SuitConfig,
                   compression_limits: tuple[float, ...]
                   = DEFAULT_COMPRESSION_LIMITS_N) -> WorkspaceGrid:
    """Grade the full 73 x 41 visual-target grid.

    Cells flagged per condition; for each compression limit, a combined
    flag marks cells meeting all three conditions at that limit, the
    quantity a limit sweep plots.
    """
    hs = _grid_axis(*WORKSPACE_H_RANGE_DEG, WORKSPACE_STEP_DEG)
    vs = _grid_axis(*WORKSPACE_V_RANGE_DEG, WORKSPACE_STEP_DEG)
    shape = (len(hs), len(vs))
    reachable = np.zeros(shape, dtype=bool)
    grav_ok = np.zeros(shape, dtype=bool)
    compression = np.zeros(shape)
    for i, h in enumerate(hs):
        for j, v in enumerate(vs):
            report = solve_pose(suit, target_to_pose(float(h), float(v)))
            reachable[i, j] = report.reachable
            grav_ok[i, j] = report.grav_ok
            compression[i, j] = report.compression

    limits = tuple(float(c) for c in compression_limits)
    feasible_at_limit = {
        limit: reachable & grav_ok & (compression <= limit)
        for limit in limits
    }
    total = reachable.size
    coverage = {
        "reachable": 100.0 * reachable.sum() / total,
        "grav_ok": 100.0 * grav_ok.sum() / total,
        "feasible_at_limit": {
            limit: 100.0 * flags.sum() / total
            for limit, flags in feasible_at_limit.items()
        },
    }
    return WorkspaceGrid(horizontal=hs, vertical=vs, reachable=reachable,
                         grav_ok=grav_ok, compression=compression,
                         compression_limits=limits,
                         feasible_at_limit=feasible_at_limit,
                         coverage=coverage)
