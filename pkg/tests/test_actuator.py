"""Force law, parameter fit, and tensile CSV ingestion."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from exoneck.actuator import (DEFAULT_ELASTIC_N, MAGIC_ANGLE_DEG,
                              TENSILE_CSV_HEADER, FpamParams, TensileSample,
                              contraction, default_fpam, elastic_force,
                              fit_params, force, generate_samples,
                              ideal_force_coefficient, read_tensile_csv,
                              write_tensile_csv)
from exoneck.errors import FitError

R0 = 0.0136
ALPHA0 = 37.0


@pytest.fixture(scope="module")
def params():
    return default_fpam(L0=0.2)


# ---------------------------------------------------------------------------
# Force law against independent arithmetic.

def test_ideal_coefficient_at_slack(params):
    a = math.radians(ALPHA0)
    oracle = math.pi * R0 ** 2 * (1.0 / math.sin(a) ** 2
                                  - 3.0 / math.tan(a) ** 2)
    assert math.isclose(ideal_force_coefficient(params, 0.0), oracle,
                        rel_tol=1e-9)
    # below the magic angle the slack-length coefficient is negative:
    # pressure alone shortens the muscle
    assert oracle < 0.0


def test_ideal_coefficient_at_full_contraction(params):
    a = math.radians(ALPHA0)
    oracle = math.pi * R0 ** 2 / math.sin(a) ** 2
    assert math.isclose(ideal_force_coefficient(params, 1.0), oracle,
                        rel_tol=1e-9)


def test_elastic_cubic_value(params):
    p0, p1, p2, p3 = DEFAULT_ELASTIC_N
    eps = 0.1
    oracle = p0 + p1 * eps + p2 * eps ** 2 + p3 * eps ** 3
    assert math.isclose(elastic_force(params, eps), oracle, rel_tol=1e-12)
    assert math.isclose(oracle, 0.8016, rel_tol=1e-12)


def test_force_at_slack_zero_pressure(params):
    assert abs(force(params, 0.0, 0.0) - 12.3) < 1e-12


def test_magic_angle_kills_pressure_term():
    neutral = FpamParams(r0=R0, alpha0=MAGIC_ANGLE_DEG, p=DEFAULT_ELASTIC_N,
                         L0=0.2)
    assert abs(ideal_force_coefficient(neutral, 0.0)) < 1e-15
    assert math.isclose(force(neutral, 0.0, 138.0),
                        force(neutral, 0.0, 0.0), rel_tol=1e-12)


@given(eps=st.floats(-0.2, 0.6), p1=st.floats(0.0, 138.0),
       p2=st.floats(1.0, 138.0))
@settings(max_examples=100, deadline=None)
def test_force_affine_in_pressure(eps, p1, p2):
    params = default_fpam(L0=0.2)
    f0 = force(params, eps, 0.0)
    s1 = (force(params, eps, p1) - f0)
    s2 = (force(params, eps, p2) - f0)
    # both secants report the same kPa slope
    assert math.isclose(s2 / p2 if p2 else 0.0,
                        ideal_force_coefficient(params, eps) * 1000.0,
                        rel_tol=1e-9, abs_tol=1e-12)
    assert math.isclose(s1, p1 * s2 / p2, rel_tol=1e-9, abs_tol=1e-9)


@given(length=st.floats(0.08, 0.24))
@settings(max_examples=50, deadline=None)
def test_contraction_identity(length):
    params = default_fpam(L0=0.2)
    assert math.isclose(contraction(params, length),
                        (0.2 - length) / 0.2, rel_tol=1e-12)


def test_force_vectorized_matches_scalar(params):
    eps = np.linspace(-0.1, 0.5, 7)
    vec = force(params, eps, 55.0)
    for e, f in zip(eps, vec):
        assert math.isclose(f, force(params, float(e), 55.0), rel_tol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        FpamParams(r0=-0.01, alpha0=37.0, p=DEFAULT_ELASTIC_N, L0=0.2)
    with pytest.raises(ValueError):
        FpamParams(r0=0.0136, alpha0=0.0, p=DEFAULT_ELASTIC_N, L0=0.2)
    with pytest.raises(ValueError):
        FpamParams(r0=0.0136, alpha0=37.0, p=DEFAULT_ELASTIC_N, L0=-0.2)
    with pytest.raises(ValueError):
        default_fpam(L0=0.2, sign_convention="bogus")


# ---------------------------------------------------------------------------
# Parameter fit.

def _synthetic(params, pressures=(0.0, 34.5, 69.0, 103.5, 138.0), n=24):
    lengths = np.linspace(0.6 * params.L0, params.L0, n)
    return generate_samples(params, pressures, lengths)


def test_fit_round_trip(params):
    fit = fit_params(_synthetic(params), L0=params.L0)
    assert fit.geometry_identifiable
    for got, want in zip(fit.params.p, params.p):
        assert math.isclose(got, want, rel_tol=1e-6)
    assert math.isclose(fit.params.r0, params.r0, rel_tol=1e-4)
    assert math.isclose(fit.params.alpha0, params.alpha0, rel_tol=1e-4)
    assert fit.rmse < 1e-9


def test_fit_round_trip_flipped_convention():
    truth = default_fpam(L0=0.18, sign_convention="flipped_ideal_term")
    fit = fit_params(_synthetic(truth), L0=0.18,
                     sign_convention="flipped_ideal_term")
    assert math.isclose(fit.params.r0, truth.r0, rel_tol=1e-4)
    assert math.isclose(fit.params.alpha0, truth.alpha0, rel_tol=1e-4)


def test_fit_reports_per_level_rmse(params):
    samples = _synthetic(params, pressures=(0.0, 69.0))
    fit = fit_params(samples, L0=params.L0)
    assert set(fit.per_level_rmse) == {0.0, 69.0}
    assert all(v >= 0.0 for v in fit.per_level_rmse.values())


def test_fit_without_pressurized_samples(params):
    samples = _synthetic(params, pressures=(0.0,))
    fit = fit_params(samples, L0=params.L0)
    assert not fit.geometry_identifiable
    assert any("no pressurized samples" in note for note in fit.notes)


def test_fit_errors(params):
    with pytest.raises(FitError):
        fit_params([], L0=0.2)
    pressurized = [s for s in _synthetic(params) if s.pressure_kpa > 0.0]
    with pytest.raises(FitError):
        fit_params(pressurized, L0=0.2)
    short = [TensileSample(0.0, 0.2 - 0.01 * i, 1.0) for i in range(3)]
    with pytest.raises(FitError):
        fit_params(short, L0=0.2)
    with pytest.raises(ValueError):
        fit_params(_synthetic(params), L0=-1.0)


def test_sample_validation():
    with pytest.raises(ValueError):
        TensileSample(-1.0, 0.2, 1.0)
    with pytest.raises(ValueError):
        TensileSample(0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Tensile CSV ingestion.

def test_csv_round_trip(tmp_path, params):
    samples = _synthetic(params, n=8)
    path = tmp_path / "pulls.csv"
    write_tensile_csv(path, samples)
    back = read_tensile_csv(path)
    assert back == list(samples)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(TENSILE_CSV_HEADER)


def test_csv_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ValueError, match="no samples"):
        read_tensile_csv(path)


def test_csv_header_only(tmp_path):
    path = tmp_path / "hdr.csv"
    path.write_text("pressure_kpa,length_m,force_n\n")
    with pytest.raises(ValueError, match="no samples"):
        read_tensile_csv(path)


def test_csv_missing_column_named(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("pressure_kpa,length_m\n0,0.2\n")
    with pytest.raises(ValueError, match="force_n"):
        read_tensile_csv(path)


def test_csv_bad_rows_report_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("pressure_kpa,length_m,force_n\n0,0.2,1\n0,oops,2\n")
    with pytest.raises(ValueError, match=":3:"):
        read_tensile_csv(path)
    path.write_text("pressure_kpa,length_m,force_n\n0,0.2\n")
    with pytest.raises(ValueError, match=":2:"):
        read_tensile_csv(path)
    path.write_text("pressure_kpa,length_m,force_n\n-5,0.2,1\n")
    with pytest.raises(ValueError, match=":2:"):
        read_tensile_csv(path)
