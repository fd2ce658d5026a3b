"""Tension model for fabric pneumatic artificial muscle (fPAM) actuators.

The tensile force of one actuator is an affine function of gauge pressure

    F(eps, P) = C(eps) * P + E(eps)

where eps is the contraction ratio relative to the fully stretched length,
C(eps) is a purely geometric coefficient (square meters) built from the
initial radius and weave angle, and E(eps) is a cubic elastic term fitted
from zero-pressure tensile tests.  Pressures cross the public interfaces in
kilopascals; the conversion to pascals happens only inside ``force``.

Two sign conventions for the geometric term are supported.  The default
``as_printed`` evaluates the coefficient as

    C(eps) = pi * r0^2 * (1/sin^2(alpha0) - 3*(eps - 1)^2 / tan^2(alpha0))

which is negative at eps = 0 for weave angles below the magic angle
(arccos(1/sqrt(3)) ~ 54.74 deg).  ``flipped_ideal_term`` negates C, which
matches the classic braided-muscle form with maximum tension at zero
contraction.  All shipped configurations use ``as_printed``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FitError

SIGN_CONVENTIONS = ("as_printed", "flipped_ideal_term")

# Bench characterization of the stock actuator (radius m, weave angle deg,
# elastic cubic in ascending order, constant term in newtons).
DEFAULT_R0_M = 0.0136
DEFAULT_ALPHA0_DEG = 37.0
DEFAULT_ELASTIC_N = (12.3, -182.9, 791.3, -1121.4)
DEFAULT_P_MAX_KPA = 138.0

MAGIC_ANGLE_DEG = math.degrees(math.acos(1.0 / math.sqrt(3.0)))


@dataclass(frozen=True)
class FpamParams:
    """Static parameters of a single fPAM.

    Attributes
    ----------
    r0 : float
        Initial (fully stretched) tube radius in meters.
    alpha0 : float
        Initial fiber weave angle in degrees, strictly inside (0, 90).
    p : tuple of float
        Elastic cubic coefficients (p0, p1, p2, p3) in newtons, constant
        term first, evaluated on the contraction ratio.
    L0 : float
        Fully stretched length in meters.
    P_max : float
        Rated regulator pressure in kilopascals.
    sign_convention : str
        Either ``as_printed`` or ``flipped_ideal_term``.
    """

    r0: float
    alpha0: float
    p: tuple[float, float, float, float]
    L0: float
    P_max: float = DEFAULT_P_MAX_KPA
    sign_convention: str = "as_printed"

    def __post_init__(self):
        if not self.r0 > 0.0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not 0.0 < self.alpha0 < 90.0:
            raise ValueError(f"alpha0 must lie in (0, 90) deg, got {self.alpha0}")
        if len(self.p) != 4:
            raise ValueError("elastic polynomial needs exactly 4 coefficients")
        if not self.L0 > 0.0:
            raise ValueError(f"L0 must be positive, got {self.L0}")
        if not self.P_max > 0.0:
            raise ValueError(f"P_max must be positive, got {self.P_max}")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ValueError(f"unknown sign convention {self.sign_convention!r}")
        object.__setattr__(self, "p", tuple(float(c) for c in self.p))


def default_fpam(L0: float, P_max: float = DEFAULT_P_MAX_KPA,
                 sign_convention: str = "as_printed") -> FpamParams:
    """Stock actuator parameters at a given stretched length."""
    return FpamParams(r0=DEFAULT_R0_M, alpha0=DEFAULT_ALPHA0_DEG,
                      p=DEFAULT_ELASTIC_N, L0=L0, P_max=P_max,
                      sign_convention=sign_convention)


def contraction(params: FpamParams, length: float):
    """Contraction ratio eps = (L0 - length) / L0.

    ``length`` may be a scalar or array; values must be strictly positive.
    Lengths above L0 give negative eps (overstretched), which downstream
    code treats as unreachable but still evaluates analytically.
    """
    length = np.asarray(length, dtype=float)
    if np.any(length <= 0.0):
        raise ValueError("actuator length must be positive")
    eps = (params.L0 - length) / params.L0
    return float(eps) if eps.ndim == 0 else eps


def ideal_force_coefficient(params: FpamParams, eps):
    """Geometric pressure coefficient C(eps) in square meters.

    Multiplied by gauge pressure in pascals this gives the ideal-muscle
    tension.  Negative values mean pressurization reduces tension under
    the active sign convention.
    """
    eps = np.asarray(eps, dtype=float)
    a = math.radians(params.alpha0)
    coeff = math.pi * params.r0 ** 2 * (
        1.0 / math.sin(a) ** 2 - 3.0 * (eps - 1.0) ** 2 / math.tan(a) ** 2
    )
    if params.sign_convention == "flipped_ideal_term":
        coeff = -coeff
    return float(coeff) if np.ndim(coeff) == 0 else coeff


def elastic_force(params: FpamParams, eps):
    """Cubic elastic term E(eps) in newtons (fit from zero-pressure pulls)."""
    eps = np.asarray(eps, dtype=float)
    p0, p1, p2, p3 = params.p
    val = p0 + eps * (p1 + eps * (p2 + eps * p3))
    return float(val) if val.ndim == 0 else val


def force(params: FpamParams, eps, pressure_kpa):
    """Tensile force in newtons at contraction ``eps`` and pressure in kPa.

    Negative pressure is rejected; eps outside [0, 1] is evaluated
    analytically (the cubic and the quadratic extrapolate smoothly).
    """
    pressure_kpa = np.asarray(pressure_kpa, dtype=float)
    if np.any(pressure_kpa < 0.0):
        raise ValueError("gauge pressure must be nonnegative")
    val = ideal_force_coefficient(params, eps) * pressure_kpa * 1000.0 \
        + elastic_force(params, eps)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class TensileSample:
    """One tensile-test measurement: held pressure, length, measured force."""

    pressure_kpa: float
    length_m: float
    force_n: float

    def __post_init__(self):
        if self.pressure_kpa < 0.0:
            raise ValueError("sample pressure must be nonnegative")
        if self.length_m <= 0.0:
            raise ValueError("sample length must be positive")


@dataclass(frozen=True)
class FitResult:
    """Outcome of ``fit_params``.

    ``per_level_rmse`` maps each pressure level (kPa) to the RMSE of the
    fitted model against the samples at that level.  When the data
    contains no pressurized samples the geometric parameters are left at
    their defaults and ``geometry_identifiable`` is False.
    """

    params: FpamParams
    per_level_rmse: dict[float, float]
    rmse: float
    geometry_identifiable: bool
    notes: tuple[str, ...] = ()


def fit_params(samples: Sequence[TensileSample], L0: float,
               sign_convention: str = "as_printed",
               P_max: float = DEFAULT_P_MAX_KPA) -> FitResult:
    """Recover fPAM parameters from tensile-test samples.

    Stage one fits the elastic cubic to the zero-pressure samples.  Stage
    two fits the geometric coefficient to the pressurized residuals.  The
    geometric model is linear in (u, w) = (pi r0^2 / sin^2 a, 3 pi r0^2
    cos^2 a / sin^2 a), so the global least-squares optimum is available in
    closed form; a bounded multistart refinement (alpha0 in (5, 85) deg,
    r0 in (1 mm, 10 cm)) is used only when the linear optimum falls
    outside the region that maps back to a valid radius and angle.

    Raises
    ------
    FitError
        If no zero-pressure samples exist, or the zero-pressure design
        matrix is rank deficient (fewer than four distinct lengths).
    """
    if sign_convention not in SIGN_CONVENTIONS:
        raise ValueError(f"unknown sign convention {sign_convention!r}")
    if not L0 > 0.0:
        raise ValueError("L0 must be positive")
    samples = list(samples)
    if not samples:
        raise FitError("no samples provided")

    pressures = np.array([s.pressure_kpa for s in samples])
    lengths = np.array([s.length_m for s in samples])
    forces = np.array([s.force_n for s in samples])
    eps = (L0 - lengths) / L0

    zero = pressures == 0.0
    if not np.any(zero):
        raise FitError("elastic stage needs zero-pressure samples")
    if len(np.unique(lengths[zero])) < 4:
        raise FitError("elastic stage needs at least four distinct lengths "
                       "at zero pressure")

    # Stage 1: cubic in eps against the zero-pressure pulls.
    V = np.vander(eps[zero], 4, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(V, forces[zero], rcond=None)
    if rank < 4:
        raise FitError("zero-pressure design matrix is rank deficient")
    elastic = tuple(float(c) for c in coef)

    notes: list[str] = []
    pressurized = ~zero
    if np.any(pressurized):
        r0, alpha0, identifiable, stage2_notes = _fit_geometry(
            eps[pressurized], pressures[pressurized], forces[pressurized],
            elastic, sign_convention)
        notes.extend(stage2_notes)
    else:
        r0, alpha0, identifiable = DEFAULT_R0_M, DEFAULT_ALPHA0_DEG, False
        notes.append("no pressurized samples; geometric parameters left at "
                     "defaults")

    params = FpamParams(r0=r0, alpha0=alpha0, p=elastic, L0=L0, P_max=P_max,
                        sign_convention=sign_convention)

    per_level: dict[float, float] = {}
    for level in np.unique(pressures):
        at = pressures == level
        pred = force(params, eps[at], level)
        per_level[float(level)] = float(
            np.sqrt(np.mean((pred - forces[at]) ** 2)))
    overall = float(np.sqrt(np.mean(
        (force(params, eps, pressures) - forces) ** 2)))

    return FitResult(params=params, per_level_rmse=per_level, rmse=overall,
                     geometry_identifiable=identifiable, notes=tuple(notes))


def _fit_geometry(eps, pressure_kpa, force_n, elastic, sign_convention):
    """Stage 2: geometric coefficient from pressurized residuals."""
    p0, p1, p2, p3 = elastic
    resid = force_n - (p0 + eps * (p1 + eps * (p2 + eps * p3)))
    pa = pressure_kpa * 1000.0
    sign = -1.0 if sign_convention == "flipped_ideal_term" else 1.0

    # Linear reparametrization: resid = sign * (u - w*(eps-1)^2) * Pa.
    design = np.column_stack([sign * pa, -sign * (eps - 1.0) ** 2 * pa])
    sol, _, rank, _ = np.linalg.lstsq(design, resid, rcond=None)
    if rank < 2:
        return DEFAULT_R0_M, DEFAULT_ALPHA0_DEG, False, [
            "pressurized samples do not span the geometric design; "
            "geometric parameters left at defaults"]
    u, w = sol
    if u > 0.0 and 0.0 < w < 3.0 * u:
        cos2 = w / (3.0 * u)
        alpha0 = math.degrees(math.acos(math.sqrt(cos2)))
        r0 = math.sqrt(u * (1.0 - cos2) / math.pi)
        if 1e-3 < r0 < 0.1 and 5.0 < alpha0 < 85.0:
            return r0, alpha0, True, []

    # The closed form left the admissible box; fall back to a bounded
    # multistart so a noisy or mislabeled data set still lands inside it.
    from scipy.optimize import least_squares

    def residual_fn(x):
        r0_, alpha_ = x
        a = math.radians(alpha_)
        c = math.pi * r0_ ** 2 * (1.0 / math.sin(a) ** 2
                                  - 3.0 * (eps - 1.0) ** 2 / math.tan(a) ** 2)
        return sign * c * pa - resid

    best = None
    for alpha_seed in np.linspace(13.0, 77.0, 5):
        out = least_squares(residual_fn, x0=[0.01, alpha_seed],
                            bounds=([1e-3, 5.0], [0.1, 85.0]))
        if best is None or out.cost < best.cost:
            best = out
    return float(best.x[0]), float(best.x[1]), True, [
        "geometric fit used bounded refinement"]


def generate_samples(params: FpamParams, pressures_kpa: Iterable[float],
                     lengths_m: Iterable[float]) -> list[TensileSample]:
    """Noise-free tensile samples on a pressure/length grid (for round trips)."""
    out = []
    for P in pressures_kpa:
        for L in lengths_m:
            eps = contraction(params, L)
            out.append(TensileSample(pressure_kpa=float(P), length_m=float(L),
                                     force_n=float(force(params, eps, P))))
    return out


TENSILE_CSV_HEADER = ("pressure_kpa", "length_m", "force_n")


def read_tensile_csv(path: str | Path) -> list[TensileSample]:
    """Load tensile samples from CSV with header pressure_kpa,length_m,force_n.

    Malformed rows are rejected with their line number; nothing is
    returned unless the whole file parses.
    """
    path = Path(path)
    samples = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: no samples (empty file)") from None
        got = tuple(h.strip() for h in header)
        if got != TENSILE_CSV_HEADER:
            missing = [h for h in TENSILE_CSV_HEADER if h not in got]
            if missing:
                raise ValueError(f"{path}:1: missing column(s) "
                                 f"{', '.join(missing)}")
            raise ValueError(f"{path}:1: expected header "
                             f"{','.join(TENSILE_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, "
                                 f"got {len(row)}")
            try:
                p, l, f = (float(c) for c in row)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: non-numeric field in {row!r}") from None
            try:
                samples.append(TensileSample(p, l, f))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not samples:
        raise ValueError(f"{path}: no samples (header only)")
    return samples


def write_tensile_csv(path: str | Path,
                      samples: Iterable[TensileSample]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TENSILE_CSV_HEADER)
        for s in samples:
            writer.writerow([repr(s.pressure_kpa), repr(s.length_m),
                             repr(s.force_n)])
