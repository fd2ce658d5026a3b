"""Command-line front end.

Every command builds a request model, dispatches it, and renders the
response to files.  Dispatch is in-process by default; with ``--server``
the same request is posted to a running service and the same rendering
runs on the response, so local and remote runs produce identical files.

Units everywhere: angles in degrees, pressures in kPa, forces in N,
torques in N*m, lengths in meters.  Exit codes: 0 success, 2 input
error, 3 numerical non-convergence.  Output files are written to a
temporary name and renamed at the end, so a failed run leaves nothing
behind.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import __version__
from .actuator import read_tensile_csv
from .errors import ConfigError, FitError, SimulationFault
from .service import handlers
from .service import schemas as S

EXIT_INPUT = 2
EXIT_NUMERIC = 3

_INPUT_ERRORS = (ConfigError, FitError, ValueError, OSError)


class _RemoteNumericError(RuntimeError):
    """The service reported a numerical failure (HTTP 5xx)."""


# ---------------------------------------------------------------------------
# Run manifest: recorded in every output file, no timestamps, so a rerun
# with the same inputs is byte-identical.

@dataclass(frozen=True)
class RunManifest:
    command: str
    config_paths: tuple[str, ...]
    overrides: dict
    out_dir: str | None
    tool_version: str
    input_sha256: str

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "config_paths": list(self.config_paths),
            "overrides": self.overrides,
            "out_dir": self.out_dir,
            "tool_version": self.tool_version,
            "input_sha256": self.input_sha256,
        }

    def comment_lines(self) -> list[str]:
        over = json.dumps(self.overrides, sort_keys=True)
        configs = ", ".join(self.config_paths) or "builtin default"
        return [
            f"# exoneck {self.command} v{self.tool_version}",
            f"# configs: {configs}",
            f"# overrides: {over}",
            f"# inputs sha256: {self.input_sha256}",
        ]


def _manifest(command: str, request, config_paths: tuple[str, ...],
              overrides: dict, out_dir: str | None) -> RunManifest:
    payload = json.dumps(request.model_dump(), sort_keys=True,
                         separators=(",", ":")).encode()
    return RunManifest(
        command=command,
        config_paths=config_paths,
        overrides=overrides,
        out_dir=out_dir,
        tool_version=__version__,
        input_sha256=hashlib.sha256(payload).hexdigest())


# ---------------------------------------------------------------------------
# Rendering and atomic emission.

def _fnum(x) -> str:
    return repr(float(x))


def _flag(b) -> str:
    return "1" if b else "0"


def _csv_text(manifest: RunManifest, header: list[str],
              rows: list[list[str]]) -> str:
    lines = manifest.comment_lines()
    lines.append(",".join(header))
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_text(manifest: RunManifest, body: dict) -> str:
    doc = {"manifest": manifest.as_dict()}
    doc.update(body)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _emit(out_dir: str | None, files: dict[str, str]) -> None:
    """Write every file, or none: temp names first, rename at the end."""
    if out_dir is None:
        for text in files.values():
            sys.stdout.write(text)
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            tmp = out / (name + ".tmp")
            tmp.write_text(text, encoding="utf-8", newline="\n")
            staged.append((tmp, out / name))
    except Exception:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, final in staged:
        tmp.replace(final)
    for _, final in staged:
        click.echo(f"wrote {final}")


# ---------------------------------------------------------------------------
# Dispatch: in-process by default, HTTP when --server is set.

def _dispatch(server: str | None, route: str, handler, request,
              response_model):
    if server is None:
        return handler(request)
    import httpx
    try:
        resp = httpx.post(server.rstrip("/") + route,
                          json=request.model_dump(), timeout=600.0)
    except httpx.HTTPError as exc:
        raise ConfigError(f"cannot reach server {server}: {exc}") from exc
    if resp.status_code == 422:
        detail = resp.json().get("detail", resp.text)
        raise ConfigError(f"server rejected request: {detail}")
    if resp.status_code >= 500:
        detail = resp.json().get("detail", resp.text)
        raise _RemoteNumericError(detail)
    return response_model.model_validate(resp.json())


def _load_suit_model(config: str | None) -> S.SuitModel | None:
    if config is None:
        return None
    try:
        data = json.loads(Path(config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{config}: invalid JSON ({exc})") from exc
    return S.SuitModel.model_validate(data)


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise click.BadParameter(f"expected fe,ld,ar, got {text!r}")
    try:
        fe, ld, ar = (float(p) for p in parts)
    except ValueError:
        raise click.BadParameter(f"non-numeric angle in {text!r}") from None
    return fe, ld, ar


def _parse_limits(text: str) -> tuple[float, ...]:
    try:
        limits = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise click.BadParameter(f"non-numeric limit in {text!r}") from None
    if not limits:
        raise click.BadParameter("at least one compression limit required")
    return limits


def _guard(fn):
    """Map core exceptions to the documented exit codes."""
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SimulationFault, _RemoteNumericError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
        except _INPUT_ERRORS as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


_config_opt = click.option(
    "--config", type=click.Path(), default=None,
    help="Suit description JSON; omit for the builtin default suit.")
_out_opt = click.option(
    "--out", type=click.Path(file_okay=False), default=None,
    help="Output directory; omit to print to stdout.")
_server_opt = click.option(
    "--server", default=None, metavar="URL",
    help="Run against a service at URL instead of in-process.")
_seed_opt = click.option(
    "--seed", type=click.IntRange(min=0), default=0, show_default=True,
    help="Recorded in the manifest; every computation is deterministic.")


@click.group()
@click.version_option(__version__, prog_name="exoneck")
def main():
    """Neck-exosuit modeling toolkit.

    Angles in degrees, pressures in kPa, forces in N, torques in N*m,
    lengths in meters.  Compression is reported as a signed joint load,
    negative in compression.
    """


# ---------------------------------------------------------------------------
# fit

@main.command()
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--l0", "l0_m", type=float, required=True,
              help="Slack length of the tested actuator, meters.")
@click.option("--sign-convention", default="as_printed",
              type=click.Choice(["as_printed", "flipped_ideal_term"]),
              show_default=True)
@click.option("--p-max", "p_max", type=float, default=138.0,
              show_default=True, help="Rated pressure, kPa.")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def fit(data, l0_m, sign_convention, p_max, out, server, seed):
    """Fit force-law parameters from a tensile-test CSV.

    DATA must have the header pressure_kpa,length_m,force_n.
    """
    samples = read_tensile_csv(data)
    req = S.FitRequest(
        samples=[S.TensileSampleModel(pressure_kpa=s.pressure_kpa,
                                      length_m=s.length_m, force_n=s.force_n)
                 for s in samples],
        L0_m=l0_m, sign_convention=sign_convention, P_max_kpa=p_max)
    resp = _dispatch(server, "/fit", handlers.fit, req, S.FitResponse)
    manifest = _manifest("fit", req, (str(data),),
                         {"l0_m": l0_m, "sign_convention": sign_convention,
                          "p_max_kpa": p_max, "seed": seed}, out)
    _emit(out, {"fit.json": _json_text(manifest, resp.model_dump())})


# ---------------------------------------------------------------------------
# solve

@main.command()
@_config_opt
@click.option("--pose", default="0,0,0", show_default=True, metavar="FE,LD,AR",
              help="Working-direction angles, degrees: flexion+, "
                   "right bend+, right rotation+.")
@click.option("--omega", type=float, default=None,
              help="Ridge weight (kPa) for the pressure solve.")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def solve(config, pose, omega, out, server, seed):
    """Solve gravity-balancing pressures at one pose."""
    fe, ld, ar = _parse_triple(pose)
    req = S.SolveRequest(
        suit=_load_suit_model(config),
        pose=S.PoseTriple(fe_deg=fe, ld_deg=ld, ar_deg=ar),
        omega_kpa=omega)
    resp = _dispatch(server, "/solve", handlers.solve, req, S.SolveResponse)
    if not resp.converged:
        click.echo("error: pressure solve did not converge", err=True)
        sys.exit(EXIT_NUMERIC)
    manifest = _manifest("solve", req,
                         (str(config),) if config else (),
                         {"pose": [fe, ld, ar], "omega_kpa": omega,
                          "seed": seed}, out)
    _emit(out, {"solve.json": _json_text(manifest, resp.model_dump())})


# ---------------------------------------------------------------------------
# rom

ROM_CSV_HEADER = ["theta_x", "theta_y", "theta_z", "reachable", "grav_ok",
                  "compression_n", "p1", "p2", "p3", "p4", "p5"]


def _rom_rows(resp: S.RomResponse) -> list[list[str]]:
    rows = []
    for r in resp.rows:
        p = r.pressures_kpa or [float("nan")] * 5
        rows.append([_fnum(r.theta_x), _fnum(r.theta_y), _fnum(r.theta_z),
                     _flag(r.reachable), _flag(r.grav_ok),
                     _fnum(r.compression_n)] + [_fnum(v) for v in p])
    return rows


@main.command()
@_config_opt
@click.option("--axis", type=click.Choice(["FE", "LD", "AR"]), required=True)
@click.option("--samples", type=click.IntRange(min=2), default=100,
              show_default=True)
@click.option("--limit", "limit", type=float, default=None,
              help="Compression limit (N, negative) for an extra condition.")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def rom(config, axis, samples, limit, out, server, seed):
    """Scan feasibility across the biological range of one axis."""
    req = S.RomRequest(suit=_load_suit_model(config), axis=axis,
                       samples=samples, compression_limit_n=limit)
    resp = _dispatch(server, "/rom", handlers.rom, req, S.RomResponse)
    manifest = _manifest("rom", req, (str(config),) if config else (),
                         {"axis": axis, "samples": samples,
                          "compression_limit_n": limit, "seed": seed}, out)
    summary = {
        "axis": resp.axis,
        "biological_deg": list(resp.biological_deg),
        "intervals_deg": {k: list(v) for k, v in resp.intervals_deg.items()},
        "percent_of_biological": resp.percent_of_biological,
    }
    _emit(out, {
        f"rom_{axis}.csv": _csv_text(manifest, ROM_CSV_HEADER,
                                     _rom_rows(resp)),
        f"rom_{axis}.json": _json_text(manifest, summary),
    })


# ---------------------------------------------------------------------------
# workspace

@main.command()
@_config_opt
@click.option("--limits", default=None, metavar="N,N,...",
              help="Compression limits, newtons (negative); note the "
                   "leading minus needs --limits=-80,-100 syntax. "
                   "Default: -80,-100,-120,-140.")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def workspace(config, limits, out, server, seed):
    """Grade every visual-target cell of the 73x41 workspace grid."""
    parsed = _parse_limits(limits) if limits is not None else None
    req = S.WorkspaceRequest(
        suit=_load_suit_model(config),
        compression_limits_n=list(parsed) if parsed else None)
    resp = _dispatch(server, "/workspace", handlers.workspace, req,
                     S.WorkspaceResponse)
    manifest = _manifest("workspace", req, (str(config),) if config else (),
                         {"compression_limits_n": resp.compression_limits_n,
                          "seed": seed}, out)
    header = ["h_deg", "v_deg", "reachable", "grav_ok", "compression_n"]
    header += [f"feasible_at_{lim:g}" for lim in resp.compression_limits_n]
    rows = []
    for r in resp.rows:
        rows.append([_fnum(r.h_deg), _fnum(r.v_deg), _flag(r.reachable),
                     _flag(r.grav_ok), _fnum(r.compression_n)]
                    + [_flag(f) for f in r.feasible_at])
    summary = {
        "cells": len(resp.rows),
        "grid": [len(resp.horizontal_deg), len(resp.vertical_deg)],
        "coverage_pct": resp.coverage_pct,
        "coverage_at_limit_pct": resp.coverage_at_limit_pct,
    }
    _emit(out, {
        "workspace.csv": _csv_text(manifest, header, rows),
        "workspace.json": _json_text(manifest, summary),
    })


# ---------------------------------------------------------------------------
# design

DESIGN_CSV_HEADER = ["config_id", "axis", "torque_at_zero_nm",
                     "integral_nm_deg", "angle_range_deg", "measured_force_n"]


@main.command()
@_config_opt
@click.option("--ids", default=None, metavar="ID,ID,...",
              help="Placement config ids to evaluate; default all six.")
@click.option("--pressure", type=float, default=138.0, show_default=True,
              help="Evaluation pressure, kPa.")
@click.option("--resolution", type=float, default=1.0, show_default=True,
              help="Sweep resolution, degrees.")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def design(config, ids, pressure, resolution, out, server, seed):
    """Rank actuator placements by torque about their working axis."""
    config_ids = None
    if ids is not None:
        try:
            config_ids = [int(p) for p in ids.split(",") if p.strip()]
        except ValueError:
            raise click.BadParameter(f"non-integer id in {ids!r}") from None
    req = S.DesignRequest(suit=_load_suit_model(config),
                          config_ids=config_ids, pressure_kpa=pressure,
                          resolution_deg=resolution)
    resp = _dispatch(server, "/design", handlers.design, req,
                     S.DesignResponse)
    manifest = _manifest("design", req, (str(config),) if config else (),
                         {"config_ids": config_ids, "pressure_kpa": pressure,
                          "resolution_deg": resolution, "seed": seed}, out)
    table_rows = []
    files: dict[str, str] = {}
    for prof in resp.profiles:
        measured = ("" if prof.measured_force_n is None
                    else _fnum(prof.measured_force_n))
        table_rows.append([str(prof.config_id), prof.axis,
                           _fnum(prof.torque_at_zero_nm),
                           _fnum(prof.integral_nm_deg),
                           _fnum(prof.angle_range_deg), measured])
        prof_rows = [[_fnum(pt.angle_deg), _fnum(pt.torque_nm),
                      _flag(pt.valid)] for pt in prof.points]
        files[f"design_config_{prof.config_id}.csv"] = _csv_text(
            manifest, ["angle_deg", "torque_nm", "valid"], prof_rows)
    comparison = {
        "ranking": resp.ranking,
        "profiles": [{
            "config_id": p.config_id, "axis": p.axis, "label": p.label,
            "torque_at_zero_nm": p.torque_at_zero_nm,
            "integral_nm_deg": p.integral_nm_deg,
            "angle_range_deg": p.angle_range_deg,
            "measured_force_n": p.measured_force_n,
        } for p in resp.profiles],
    }
    files["design.csv"] = _csv_text(manifest, DESIGN_CSV_HEADER, table_rows)
    files["design.json"] = _json_text(manifest, comparison)
    _emit(out, files)


# ---------------------------------------------------------------------------
# track

TRACK_CSV_HEADER = ["t_s", "ref_deg", "meas_deg",
                    "p1", "p2", "p3", "p4", "p5"]


@main.command()
@_config_opt
@click.option("--axis", type=click.Choice(["FE", "LD", "AR"]), required=True)
@click.option("--amplitude", type=float, default=20.0, show_default=True,
              help="Reference amplitude, degrees.")
@click.option("--period", type=float, default=25.0, show_default=True,
              help="Reference period, seconds.")
@click.option("--cycles", type=click.IntRange(min=1), default=4,
              show_default=True)
@click.option("--rate", type=float, default=100.0, show_default=True,
              help="Controller update rate, Hz.")
@click.option("--gain", "gains", multiple=True, metavar="AXIS=KP",
              help="Override a default gain, kPa/deg; repeatable "
                   "(axes FE, LD, AR, FE_HOLD).")
@_out_opt
@_server_opt
@_seed_opt
@_guard
def track(config, axis, amplitude, period, cycles, rate, gains, out, server,
          seed):
    """Simulate closed-loop tracking of a sinusoidal reference."""
    overrides = {}
    for item in gains:
        key, sep, value = item.partition("=")
        if not sep or key not in ("FE", "LD", "AR", "FE_HOLD"):
            raise click.BadParameter(f"expected AXIS=KP, got {item!r}")
        try:
            overrides[key] = float(value)
        except ValueError:
            raise click.BadParameter(
                f"non-numeric gain in {item!r}") from None
    req = S.TrackRequest(suit=_load_suit_model(config), axis=axis,
                         amplitude_deg=amplitude, period_s=period,
                         cycles=cycles, control_rate_hz=rate,
                         gains_kpa_per_deg=overrides or None)
    resp = _dispatch(server, "/track", handlers.run_track, req,
                     S.TrackResponse)
    manifest = _manifest("track", req, (str(config),) if config else (),
                         {"axis": axis, "amplitude_deg": amplitude,
                          "period_s": period, "cycles": cycles,
                          "control_rate_hz": rate,
                          "gains_kpa_per_deg": overrides, "seed": seed}, out)
    rows = []
    for t, ref, meas, p in zip(resp.t_s, resp.ref_deg, resp.meas_deg,
                               resp.pressures_kpa):
        rows.append([_fnum(t), _fnum(ref), _fnum(meas)]
                    + [_fnum(v) for v in p])
    metrics = {"axis": resp.axis, "delay_s": resp.delay_s,
               "rmse_deg": resp.rmse_deg, "samples": len(resp.t_s)}
    _emit(out, {
        f"track_{axis}.csv": _csv_text(manifest, TRACK_CSV_HEADER, rows),
        f"track_{axis}.json": _json_text(manifest, metrics),
    })


# ---------------------------------------------------------------------------
# serve

@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
