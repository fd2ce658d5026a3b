"""One handler per operation, shared by the HTTP app and the CLI.

Handlers translate between the wire models and the core package; they
hold no state and do no I/O, so the CLI can call them in-process and
get byte-identical results to a round-trip through the service.  Core
exceptions (ConfigError, FitError, ValueError, SimulationFault) are
left to propagate; both front ends map them to their own error
surfaces.
"""

from __future__ import annotations

import dataclasses

from .. import __version__
from ..actuator import TensileSample, fit_params
from ..design import compare, measured_reference, standard_configs
from ..errors import ConfigError
from ..geometry import SuitConfig, default_suit, suit_from_dict
from ..gravity import RIDGE_WEIGHT_KPA, solve_pose
from ..simulation import (PlantParams, TrajectorySpec, default_controller,
                          pose_from_working_angles, track)
from ..workspace import (DEFAULT_COMPRESSION_LIMITS_N, scan_rom,
                         scan_workspace)
from . import schemas as S


def _resolve_suit(model: S.SuitModel | None) -> SuitConfig:
    if model is None:
        return default_suit()
    return suit_from_dict(model.model_dump())


def health() -> S.HealthResponse:
    return S.HealthResponse(status="ok", version=__version__)


def fit(req: S.FitRequest) -> S.FitResponse:
    samples = [TensileSample(s.pressure_kpa, s.length_m, s.force_n)
               for s in req.samples]
    result = fit_params(samples, req.L0_m,
                        sign_convention=req.sign_convention,
                        P_max=req.P_max_kpa)
    p = result.params
    return S.FitResponse(
        params=S.FpamModel(r0_m=p.r0, alpha0_deg=p.alpha0, p=p.p, L0_m=p.L0,
                           P_max_kpa=p.P_max,
                           sign_convention=p.sign_convention),
        rmse_n=result.rmse,
        per_level_rmse_n={f"{level:g}": rmse
                          for level, rmse in result.per_level_rmse.items()},
        geometry_identifiable=result.geometry_identifiable,
        notes=list(result.notes))


def solve(req: S.SolveRequest) -> S.SolveResponse:
    suit = _resolve_suit(req.suit)
    pose = pose_from_working_angles(req.pose.fe_deg, req.pose.ld_deg,
                                    req.pose.ar_deg)
    omega = RIDGE_WEIGHT_KPA if req.omega_kpa is None else req.omega_kpa
    rep = solve_pose(suit, pose, omega=omega)
    return S.SolveResponse(
        reachable=rep.reachable,
        grav_ok=rep.grav_ok,
        pressures_kpa=(None if rep.pressures is None
                       else [float(v) for v in rep.pressures.values]),
        torque_error_nm=tuple(float(v) for v in rep.torque_error),
        relative_error=rep.relative_error,
        compression_n=rep.compression,
        limiting_condition=rep.limiting_condition,
        converged=rep.converged)


_ROM_EULER_AXIS = {"FE": 0, "LD": 1, "AR": 2}


def rom(req: S.RomRequest) -> S.RomResponse:
    suit = _resolve_suit(req.suit)
    scan = scan_rom(suit, req.axis, samples=req.samples,
                    compression_limit=req.compression_limit_n)
    k = _ROM_EULER_AXIS[scan.axis]
    rows = []
    for i, angle in enumerate(scan.angles):
        theta = [0.0, 0.0, 0.0]
        theta[k] = float(angle)
        p_row = scan.pressures[i]
        rows.append(S.RomRow(
            theta_x=theta[0], theta_y=theta[1], theta_z=theta[2],
            reachable=bool(scan.flags["reachable"][i]),
            grav_ok=bool(scan.flags["grav_ok"][i]),
            compression_n=float(scan.compression[i]),
            pressures_kpa=(None if not bool(scan.flags["reachable"][i])
                           else [float(v) for v in p_row])))
    return S.RomResponse(
        axis=scan.axis,
        biological_deg=scan.biological,
        intervals_deg={name: (float(a), float(b))
                       for name, (a, b) in scan.intervals.items()},
        percent_of_biological={name: float(v) for name, v in
                               scan.percent_of_biological.items()},
        rows=rows)


def workspace(req: S.WorkspaceRequest) -> S.WorkspaceResponse:
    suit = _resolve_suit(req.suit)
    limits = (DEFAULT_COMPRESSION_LIMITS_N
              if req.compression_limits_n is None
              else tuple(req.compression_limits_n))
    grid = scan_workspace(suit, compression_limits=limits)
    rows = []
    for i, h in enumerate(grid.horizontal):
        for j, v in enumerate(grid.vertical):
            rows.append(S.WorkspaceRow(
                h_deg=float(h), v_deg=float(v),
                reachable=bool(grid.reachable[i, j]),
                grav_ok=bool(grid.grav_ok[i, j]),
                compression_n=float(grid.compression[i, j]),
                feasible_at=[bool(grid.feasible_at_limit[lim][i, j])
                             for lim in grid.compression_limits]))
    return S.WorkspaceResponse(
        horizontal_deg=[float(h) for h in grid.horizontal],
        vertical_deg=[float(v) for v in grid.vertical],
        compression_limits_n=list(grid.compression_limits),
        coverage_pct={"reachable": grid.coverage["reachable"],
                      "grav_ok": grid.coverage["grav_ok"]},
        coverage_at_limit_pct={f"{lim:g}": pct for lim, pct in
                               grid.coverage["feasible_at_limit"].items()},
        rows=rows)


def design(req: S.DesignRequest) -> S.DesignResponse:
    suit = _resolve_suit(req.suit)
    configs = standard_configs(suit)
    if req.config_ids is not None:
        by_id = {c.id: c for c in configs}
        unknown = [i for i in req.config_ids if i not in by_id]
        if unknown:
            raise ConfigError(f"unknown placement config ids {unknown}; "
                              f"known ids are {sorted(by_id)}")
        configs = tuple(by_id[i] for i in req.config_ids)
    report = compare(suit, configs, pressure=req.pressure_kpa,
                     resolution=req.resolution_deg)
    reference = measured_reference()
    labels = {c.id: c.label for c in configs}
    profiles = []
    for prof in report.profiles:
        points = [S.ProfilePoint(angle_deg=float(a), torque_nm=float(t),
                                 valid=bool(v))
                  for a, t, v in zip(prof.angles, prof.torque, prof.valid)]
        profiles.append(S.DesignProfile(
            config_id=prof.config_id,
            axis=prof.axis,
            label=labels.get(prof.config_id, ""),
            torque_at_zero_nm=prof.torque_at_zero,
            integral_nm_deg=prof.integral,
            angle_range_deg=prof.angle_range,
            measured_force_n=reference.get((prof.config_id, prof.axis)),
            points=points))
    return S.DesignResponse(ranking=list(report.ranking), profiles=profiles)


def _controller_with_gains(axis: str, overrides: dict[str, float] | None):
    config = default_controller(axis)
    if not overrides:
        return config
    axes = []
    for ctl_axis in config.axes:
        # In AR mode the co-active FE loop is the hold loop, so it takes
        # the FE_HOLD override, not FE.
        key = ctl_axis.axis
        if axis == "AR" and ctl_axis.axis == "FE":
            key = "FE_HOLD"
        if key in overrides:
            ctl_axis = dataclasses.replace(ctl_axis, kp=overrides[key])
        axes.append(ctl_axis)
    return dataclasses.replace(config, axes=tuple(axes))


def run_track(req: S.TrackRequest) -> S.TrackResponse:
    suit = _resolve_suit(req.suit)
    plant = PlantParams(
        inertia=req.plant.inertia_kg_m2,
        damping=req.plant.damping_nm_s,
        pneumatic_time_constant=req.plant.pneumatic_time_constant_s,
        timestep=req.plant.timestep_s)
    controller = _controller_with_gains(req.axis, req.gains_kpa_per_deg)
    spec = TrajectorySpec(axis=req.axis, amplitude_deg=req.amplitude_deg,
                          period_s=req.period_s, cycles=req.cycles,
                          control_rate_hz=req.control_rate_hz)
    result = track(suit, plant, controller, spec)
    return S.TrackResponse(
        axis=result.axis,
        delay_s=result.delay_s,
        rmse_deg=result.rmse_deg,
        t_s=result.t_s.tolist(),
        ref_deg=result.reference_deg.tolist(),
        meas_deg=result.measured_deg.tolist(),
        pressures_kpa=result.pressures_kpa.tolist())
