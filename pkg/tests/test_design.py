"""Placement comparison: torque profiles, rankings, reference data."""

import math

import numpy as np
import pytest

from exoneck.actuator import default_fpam
from exoneck.design import (CONFIG_IDS, PlacementConfig, compare,
                            measured_reference, standard_configs,
                            torque_profile)
from exoneck.errors import ConfigError
from exoneck.geometry import Actuator, ActuatorPath
from exoneck.workspace import BIOLOGICAL_ROM_DEG


@pytest.fixture(scope="module")
def configs(suit):
    return standard_configs(suit)


@pytest.fixture(scope="module")
def report(suit, configs):
    return compare(suit, configs)


def _profile(report, cid):
    return next(p for p in report.profiles if p.config_id == cid)


def test_standard_configs_shape(configs):
    assert tuple(c.id for c in configs) == CONFIG_IDS
    assert [c.axis for c in configs] == ["LD", "LD", "AR", "AR", "AR", "AR"]
    assert all(c.label for c in configs)
    # placement 2 is placement 1 minus the short actuator
    assert len(configs[0].actuators) == 2
    assert len(configs[1].actuators) == 1


def test_restretch_preserves_neutral_contraction(suit, configs):
    from exoneck.geometry import HeadPose, actuator_state
    donor = next(a for a in suit.actuators
                 if a.path.name == "back_cross_right")
    donor_eps = actuator_state(donor, HeadPose.neutral()).contraction
    for cfg in configs[3:]:
        for act in cfg.actuators:
            eps = actuator_state(act, HeadPose.neutral()).contraction
            assert math.isclose(eps, donor_eps, rel_tol=1e-9)


def test_ranking_by_neutral_torque(report):
    assert report.ranking == (1, 3, 4, 2, 6, 5)
    tau0 = {p.config_id: p.torque_at_zero for p in report.profiles}
    ordered = [tau0[cid] for cid in report.ranking]
    assert all(a >= b for a, b in zip(ordered, ordered[1:]))


def test_front_placement_ordering(report):
    # two front actuators beat one on lateral torque
    assert _profile(report, 1).torque_at_zero > _profile(report, 2).torque_at_zero


def test_back_placement_orderings(report):
    # crossed routing beats the V on axial torque for the back anchor,
    # and the crossed front-anchored pair produces none at neutral
    assert _profile(report, 3).torque_at_zero > _profile(report, 4).torque_at_zero
    five = _profile(report, 5).torque_at_zero
    assert five == 0.0
    for cid in (3, 4, 6):
        assert _profile(report, cid).torque_at_zero > five


def test_profile_sweep_structure(suit, configs):
    prof = torque_profile(suit, configs[2], resolution=1.0)
    lo, hi = BIOLOGICAL_ROM_DEG["AR"]
    assert prof.angles[0] == lo and prof.angles[-1] == hi
    assert prof.torque.shape == prof.angles.shape
    assert prof.valid.dtype == bool
    assert prof.integral >= 0.0
    assert 0.0 <= prof.angle_range <= hi - lo


def test_integral_stable_under_resolution(suit, configs):
    for cfg in configs[:3]:
        coarse = torque_profile(suit, cfg, resolution=1.0).integral
        fine = torque_profile(suit, cfg, resolution=0.5).integral
        assert abs(coarse - fine) <= 0.01 * abs(fine)


def test_doubling_moment_arms_doubles_neutral_torque():
    # scale every routing point and L0 together: contraction and force
    # direction are unchanged, the lever doubles
    base_path = ActuatorPath(head_mount=(0.03, -0.05, 0.08),
                             vest_mount=(-0.06, -0.11, -0.15),
                             channel=4, group="back_cross", name="probe")
    L0 = 0.28
    act = Actuator(path=base_path, fpam=default_fpam(L0=L0))
    scaled_path = ActuatorPath(
        head_mount=tuple(2.0 * np.array(base_path.head_mount)),
        vest_mount=tuple(2.0 * np.array(base_path.vest_mount)),
        channel=4, group="back_cross", name="probe2x")
    scaled = Actuator(path=scaled_path, fpam=default_fpam(L0=2.0 * L0))
    one = PlacementConfig(3, "AR", (act,))
    two = PlacementConfig(3, "AR", (scaled,))
    t1 = torque_profile(None, one).torque_at_zero
    t2 = torque_profile(None, two).torque_at_zero
    assert t1 > 0.0
    assert math.isclose(t2, 2.0 * t1, rel_tol=1e-9)


def test_compare_on_subset(suit, configs):
    rep = compare(suit, configs[2:4])
    assert rep.ranking == (3, 4)
    assert [p.config_id for p in rep.profiles] == [3, 4]


def test_measured_reference_table():
    ref = measured_reference()
    assert set(ref) == {(1, "LD"), (2, "LD"), (3, "AR"), (4, "AR"),
                        (5, "AR"), (6, "AR")}
    assert all(v > 0.0 for v in ref.values())
    # benchtop: two fronts pull harder than one
    assert ref[(1, "LD")] > ref[(2, "LD")]


def test_placement_validation(suit, configs):
    with pytest.raises(ConfigError):
        PlacementConfig(7, "YAW", configs[0].actuators)
    with pytest.raises(ConfigError):
        PlacementConfig(7, "AR", ())
    with pytest.raises(ConfigError, match="graded on FE or LD"):
        standard_configs(suit, axis_front="AR")


def test_profile_resolution_validation(suit, configs):
    with pytest.raises(ValueError):
        torque_profile(suit, configs[0], resolution=0.0)
