"""Request and response shapes for the HTTP service.

These models mirror the suit JSON schema and the report dataclasses of
the core package one-to-one; physical validation (positive masses,
channel ranges, pose bounds) stays in the core constructors, so the
models here only pin field names and container shapes.  Units follow
the package convention: kPa, meters, newtons, N*m, degrees.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

Vec3 = tuple[float, float, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --------------------------------------------------------------------------
# Suit description (same schema as the config files on disk).

class FpamModel(_Strict):
    r0_m: float
    alpha0_deg: float
    p: tuple[float, float, float, float]
    L0_m: float
    P_max_kpa: float = 138.0
    sign_convention: str = "as_printed"


class ActuatorModel(_Strict):
    name: str = ""
    head_mount_m: Vec3
    waypoints_m: list[Vec3] = Field(default_factory=list)
    vest_mount_m: Vec3
    channel: int
    group: str
    fpam: FpamModel


class BodyModel(_Strict):
    mass_kg: float
    com_m: Vec3


class SuitModel(_Strict):
    name: str = "unnamed"
    body: BodyModel
    actuators: list[ActuatorModel]


class PoseTriple(_Strict):
    """Working-direction angles: flexion+, right bend+, right rotation+."""

    fe_deg: float = 0.0
    ld_deg: float = 0.0
    ar_deg: float = 0.0


# --------------------------------------------------------------------------
# fit

class TensileSampleModel(_Strict):
    pressure_kpa: float
    length_m: float
    force_n: float


class FitRequest(_Strict):
    samples: list[TensileSampleModel]
    L0_m: float
    sign_convention: str = "as_printed"
    P_max_kpa: float = 138.0


class FitResponse(_Strict):
    params: FpamModel
    rmse_n: float
    per_level_rmse_n: dict[str, float]    # pressure level (kPa) -> RMSE
    geometry_identifiable: bool
    notes: list[str]


# --------------------------------------------------------------------------
# solve

class SolveRequest(_Strict):
    suit: SuitModel | None = None         # None selects the shipped default
    pose: PoseTriple = Field(default_factory=PoseTriple)
    omega_kpa: float | None = None        # ridge weight override


class SolveResponse(_Strict):
    reachable: bool
    grav_ok: bool
    pressures_kpa: list[float] | None
    torque_error_nm: Vec3
    relative_error: float | None
    compression_n: float
    limiting_condition: str
    converged: bool


# --------------------------------------------------------------------------
# rom

class RomRequest(_Strict):
    suit: SuitModel | None = None
    axis: Literal["FE", "LD", "AR"]
    samples: int = 100
    compression_limit_n: float | None = None


class RomRow(_Strict):
    theta_x: float
    theta_y: float
    theta_z: float
    reachable: bool
    grav_ok: bool
    compression_n: float
    pressures_kpa: list[float] | None


class RomResponse(_Strict):
    axis: str
    biological_deg: tuple[float, float]
    intervals_deg: dict[str, tuple[float, float]]
    percent_of_biological: dict[str, float]
    rows: list[RomRow]


# --------------------------------------------------------------------------
# workspace

class WorkspaceRequest(_Strict):
    suit: SuitModel | None = None
    compression_limits_n: list[float] | None = None


class WorkspaceRow(_Strict):
    h_deg: float
    v_deg: float
    reachable: bool
    grav_ok: bool
    compression_n: float
    feasible_at: list[bool]               # one flag per requested limit


class WorkspaceResponse(_Strict):
    horizontal_deg: list[float]
    vertical_deg: list[float]
    compression_limits_n: list[float]
    coverage_pct: dict[str, float]        # 'reachable', 'grav_ok'
    coverage_at_limit_pct: dict[str, float]   # str(limit) -> percentage
    rows: list[WorkspaceRow]              # row-major over (h, v)


# --------------------------------------------------------------------------
# design

class DesignRequest(_Strict):
    suit: SuitModel | None = None
    config_ids: list[int] | None = None   # None selects all six standards
    pressure_kpa: float = 138.0
    resolution_deg: float = 1.0


class ProfilePoint(_Strict):
    angle_deg: float
    torque_nm: float
    valid: bool


class DesignProfile(_Strict):
    config_id: int
    axis: str
    label: str
    torque_at_zero_nm: float
    integral_nm_deg: float
    angle_range_deg: float
    measured_force_n: float | None       # benchtop reference, when present
    points: list[ProfilePoint]


class DesignResponse(_Strict):
    ranking: list[int]
    profiles: list[DesignProfile]


# --------------------------------------------------------------------------
# track

class PlantModel(_Strict):
    inertia_kg_m2: Vec3 = (0.133, 0.133, 0.02)
    damping_nm_s: float = 0.5
    pneumatic_time_constant_s: float = 0.3
    timestep_s: float = 0.005


class TrackRequest(_Strict):
    suit: SuitModel | None = None
    axis: Literal["FE", "LD", "AR"]
    amplitude_deg: float = 20.0
    period_s: float = 25.0
    cycles: int = 4
    control_rate_hz: float = 100.0
    plant: PlantModel = Field(default_factory=PlantModel)
    gains_kpa_per_deg: dict[str, float] | None = None   # override defaults


class TrackResponse(_Strict):
    axis: str
    delay_s: float
    rmse_deg: float
    t_s: list[float]
    ref_deg: list[float]
    meas_deg: list[float]
    pressures_kpa: list[list[float]]      # (N, 5)


# --------------------------------------------------------------------------
# health

class HealthResponse(_Strict):
    status: str
    version: str
