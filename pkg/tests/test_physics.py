"""Hover oracle: golden quadcopter, failure ladder, mass rollup, monotonicity."""

import math

import numpy as np
import pytest

from uavforge.catalog import BATTERY, ESC, MOTOR, PROPELLER, Catalog, ComponentRecord
from uavforge.design import DesignNode, fuselage, hub, prop_arm, wing, with_battery
from uavforge.errors import ConfigError, InvalidDesignError
from uavforge.physics import (
    BATTERY_DISCHARGE_LIMIT, DEFAULT_CONSTANTS, ESC_CURRENT_LIMIT, GRAVITY_M_PER_S2,
    INTERFERENCE, MOTOR_CURRENT_LIMIT, MOTOR_RPM_LIMIT, NO_PROPELLERS,
    PhysicsConstants, THRUST_DEFICIT, evaluate_hover, label_design, mass_rollup,
    required_rotor_speed,
)

RHO = DEFAULT_CONSTANTS.air_density_rho
D_IN = 10.0
D_M = D_IN * 0.0254  # 0.254 m


def golden_catalog(motor_max_A=30.0, esc_max_A=80.0, kv=1000.0,
                   capacity_mAh=2200.0, discharge_C=75.0):
    """Components sized so the reference quad masses exactly 1.2 kg."""
    return Catalog([
        ComponentRecord("motor", MOTOR, {"kv_rpm_per_volt": kv,
                                         "max_current_A": motor_max_A,
                                         "resistance_ohm": 0.1, "mass_g": 150.0}),
        ComponentRecord("prop", PROPELLER, {"diameter_in": D_IN, "pitch_in": 4.5,
                                            "thrust_coeff_Ct": 0.10,
                                            "power_coeff_Cp": 0.05, "mass_g": 20.0}),
        ComponentRecord("esc", ESC, {"max_current_A": esc_max_A, "mass_g": 12.5}),
        ComponentRecord("batt", BATTERY, {"capacity_mAh": capacity_mAh,
                                          "voltage_V": 11.1,
                                          "max_discharge_C": discharge_C,
                                          "mass_g": 180.0}),
    ])


def golden_quad(arm_length=200.0, payload_g=None):
    arms = tuple(prop_arm(arm_length, "motor", "prop", "esc") for _ in range(4))
    children = arms
    if payload_g is not None:
        children = arms + (fuselage(payload_g=payload_g),)
        tree = DesignNode(hub(5), children=children)
    else:
        tree = DesignNode(hub(4), children=children)
    return with_battery(tree, "batt")


# -- golden values


def test_reference_quad_masses_exactly_1_2_kg():
    # 250 base + 4*(200*0.05 + 150 + 20 + 12.5) + 180 battery = 1200 g
    assert mass_rollup(golden_quad(), golden_catalog()) == pytest.approx(1.2, abs=1e-12)


def test_reference_quad_hover_chain_matches_hand_recomputation():
    cat = golden_catalog()
    result = evaluate_hover(golden_quad(), cat)

    weight_N = 1.2 * GRAVITY_M_PER_S2
    n_req = math.sqrt(weight_N / (4 * 0.10 * RHO * D_M**4))
    p_shaft = 0.05 * RHO * n_req**3 * D_M**5
    p_total = 4 * p_shaft / 0.75
    hover_s = 2.2 * 0.80 * 11.1 * 3600.0 / p_total

    assert result.can_hover is True
    assert result.failure_reason is None
    assert n_req == pytest.approx(75.97, rel=0.005)
    assert n_req < 1000.0 * 11.1 * 0.80 / 60.0  # n_max = 148 rev/s
    assert result.hover_power_W == pytest.approx(p_total, rel=1e-9)
    assert result.hover_time_s == pytest.approx(hover_s, rel=1e-9)
    assert result.hover_time_s == pytest.approx(464.5, rel=0.005)


def test_ten_times_heavier_quad_hits_the_rpm_ceiling():
    # payload lifts total mass from 1.2 kg to 12 kg; n_req ~ sqrt(10) * 75.97 > 148
    result = evaluate_hover(golden_quad(payload_g=10800.0), golden_catalog())
    assert result.can_hover is False
    assert result.failure_reason == MOTOR_RPM_LIMIT
    assert result.hover_time_s == 0.0
    assert result.total_mass_kg == pytest.approx(12.0)


# -- required_rotor_speed


def test_required_speed_matches_closed_form():
    n = required_rotor_speed(11.772, 4, 0.10, D_M)
    assert n == pytest.approx(math.sqrt(2.943 / (0.10 * 1.225 * D_M**4)), rel=1e-12)
    assert n == pytest.approx(75.97, rel=0.005)


def test_required_speed_zero_weight_is_zero():
    assert required_rotor_speed(0.0, 4, 0.10, D_M) == 0.0


def test_required_speed_follows_square_root_law():
    base = required_rotor_speed(10.0, 4, 0.10, D_M)
    assert required_rotor_speed(20.0, 4, 0.10, D_M) == pytest.approx(
        base * math.sqrt(2.0), rel=1e-12)


def test_required_speed_rejects_bad_arguments():
    with pytest.raises(ValueError, match="no propellers"):
        required_rotor_speed(10.0, 0, 0.10, D_M)
    with pytest.raises(ValueError):
        required_rotor_speed(10.0, 4, -0.1, D_M)
    with pytest.raises(ValueError):
        required_rotor_speed(10.0, 4, 0.10, 0.0)


# -- failure ladder


def test_wing_only_design_cannot_hover():
    tree = with_battery(
        DesignNode(hub(2), children=(wing(400.0, 120.0), wing(400.0, 120.0))),
        "batt")
    result = evaluate_hover(tree, golden_catalog())
    assert result.can_hover is False
    assert result.hover_time_s == 0.0
    assert result.failure_reason == NO_PROPELLERS


def test_short_arms_on_a_dense_hub_interfere():
    # centers (50+100)*sqrt(2) = 212 mm apart < 127 + 127 + 10 clearance
    result = evaluate_hover(golden_quad(arm_length=100.0), golden_catalog())
    assert result.failure_reason == INTERFERENCE
    assert result.can_hover is False


def test_opposite_arms_on_a_two_hub_clear_each_other():
    # k=2 puts disks 300 mm apart, just past the 264 mm minimum
    tree = with_battery(DesignNode(hub(2), children=(
        prop_arm(100.0, "motor", "prop", "esc"),
        prop_arm(100.0, "motor", "prop", "esc"))), "batt")
    result = evaluate_hover(tree, golden_catalog())
    assert result.failure_reason != INTERFERENCE


def test_rotors_without_a_battery_report_thrust_deficit():
    tree = DesignNode(hub(4), children=tuple(
        prop_arm(200.0, "motor", "prop", "esc") for _ in range(4)))
    result = evaluate_hover(tree, golden_catalog())
    assert result.failure_reason == THRUST_DEFICIT
    assert result.can_hover is False


def test_weak_motor_hits_current_limit():
    # per-rotor draw is ~3.4 A; a 2 A motor rating trips first
    result = evaluate_hover(golden_quad(), golden_catalog(motor_max_A=2.0))
    assert result.failure_reason == MOTOR_CURRENT_LIMIT


def test_weak_esc_hits_current_limit_after_motor_passes():
    result = evaluate_hover(golden_quad(), golden_catalog(esc_max_A=3.0))
    assert result.failure_reason == ESC_CURRENT_LIMIT


def test_low_c_rating_hits_battery_discharge_limit():
    # total draw ~13.6 A; 2.2 Ah * 5C = 11 A available
    result = evaluate_hover(golden_quad(), golden_catalog(discharge_C=5.0))
    assert result.failure_reason == BATTERY_DISCHARGE_LIMIT


def test_rpm_ceiling_outranks_current_ceiling():
    # slow motor fails rpm and current both; rpm is reported
    result = evaluate_hover(golden_quad(), golden_catalog(kv=100.0, motor_max_A=0.1))
    assert result.failure_reason == MOTOR_RPM_LIMIT


def test_invalid_trees_are_rejected():
    with pytest.raises(InvalidDesignError):
        evaluate_hover(DesignNode(hub(4), children=()), golden_catalog())


# -- mass rollup


def test_mass_rollup_counts_wings_and_payload():
    cat = golden_catalog()
    tree = with_battery(DesignNode(hub(3), children=(
        prop_arm(200.0, "motor", "prop", "esc"),
        wing(300.0, 100.0),
        fuselage(payload_g=500.0))), "batt")
    grams = (250.0                       # base
             + 200.0 * 0.05 + 150.0 + 20.0 + 12.5   # one arm
             + 2.5 * 0.3 * 0.1 * 1000.0  # 300x100 mm wing at 2.5 kg/m^2
             + 500.0                     # payload
             + 180.0)                    # battery
    assert mass_rollup(tree, cat) == pytest.approx(grams / 1000.0, abs=1e-12)


def test_mass_rollup_expands_symmetry():
    cat = golden_catalog()
    sym = with_battery(DesignNode(hub(4, symmetric=True),
                                  children=(prop_arm(200.0, "motor", "prop", "esc"),)),
                       "batt")
    assert mass_rollup(sym, cat) == pytest.approx(
        mass_rollup(golden_quad(), cat), abs=1e-12)


# -- constants


def test_constants_round_trip_and_overrides():
    base = PhysicsConstants()
    assert PhysicsConstants.from_dict({}) == base
    bumped = PhysicsConstants.from_dict({"air_density_rho": 1.0})
    assert bumped.air_density_rho == 1.0
    assert bumped.usable_battery_fraction == base.usable_battery_fraction
    assert PhysicsConstants.from_dict(base.to_dict()) == base


def test_constants_reject_unknown_and_nonpositive_values():
    with pytest.raises(ConfigError, match="unknown"):
        PhysicsConstants.from_dict({"warp_factor": 9.0})
    with pytest.raises(ConfigError):
        PhysicsConstants.from_dict({"air_density_rho": 0.0})
    with pytest.raises(ConfigError):
        PhysicsConstants(drivetrain_efficiency=-0.5)


# -- labels and monotonicity


def test_label_is_one_exactly_when_hover_time_is_positive():
    cat = golden_catalog()
    label, result = label_design(golden_quad(), cat)
    assert label == 1 and result.hover_time_s > 0
    label, result = label_design(golden_quad(payload_g=10800.0), cat)
    assert label == 0 and result.hover_time_s == 0.0


def test_heavier_payload_never_hovers_longer():
    cat = golden_catalog()
    rng = np.random.default_rng(5)
    for _ in range(100):
        light = float(rng.uniform(0.0, 1500.0))
        heavy = light + float(rng.uniform(1.0, 1500.0))
        t_light = evaluate_hover(golden_quad(payload_g=light), cat).hover_time_s
        t_heavy = evaluate_hover(golden_quad(payload_g=heavy), cat).hover_time_s
        assert t_heavy <= t_light
        if t_heavy > 0:
            assert t_heavy < t_light


def test_more_capacity_never_hovers_shorter():
    rng = np.random.default_rng(6)
    for _ in range(100):
        small = float(rng.uniform(500.0, 4000.0))
        big = small + float(rng.uniform(10.0, 3000.0))
        t_small = evaluate_hover(golden_quad(),
                                 golden_catalog(capacity_mAh=small)).hover_time_s
        t_big = evaluate_hover(golden_quad(),
                               golden_catalog(capacity_mAh=big)).hover_time_s
        assert t_big >= t_small
        if t_small > 0:
            assert t_big > t_small
