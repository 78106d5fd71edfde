"""Closed-form hover feasibility oracle.

Static rotor model: thrust T = Ct * rho * n^2 * D^4 and shaft power
P = Cp * rho * n^3 * D^5 with n in rev/s and D in meters.  All rotors spin
at one common speed, so thrust splits across mixed rotor types in
proportion to Ct * D^4.  A design hovers when that common speed clears the
geometry and electrical limits below; hover time is usable battery energy
divided by total electrical power.  Pure functions, no randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .catalog import Catalog, ComponentRecord
from .design import (
    DesignNode,
    HUB,
    PROP_ARM,
    WING,
    FUSELAGE,
    expand_symmetry,
    leading_params,
    root_battery,
    validate_design,
)
from .errors import ConfigError, InvalidDesignError

GRAVITY_M_PER_S2 = 9.80665
IN_TO_M = 0.0254

NO_PROPELLERS = "no_propellers"
INTERFERENCE = "interference"
THRUST_DEFICIT = "thrust_deficit"
MOTOR_RPM_LIMIT = "motor_rpm_limit"
MOTOR_CURRENT_LIMIT = "motor_current_limit"
ESC_CURRENT_LIMIT = "esc_current_limit"
BATTERY_DISCHARGE_LIMIT = "battery_discharge_limit"

FAILURE_REASONS = (
    NO_PROPELLERS, INTERFERENCE, THRUST_DEFICIT, MOTOR_RPM_LIMIT,
    MOTOR_CURRENT_LIMIT, ESC_CURRENT_LIMIT, BATTERY_DISCHARGE_LIMIT)


@dataclass(frozen=True)
class PhysicsConstants:
    air_density_rho: float = 1.225            # kg/m^3, sea-level standard
    loaded_rpm_fraction: float = 0.80         # achievable fraction of Kv*V under load
    drivetrain_efficiency: float = 0.75       # shaft power / electrical power
    usable_battery_fraction: float = 0.80
    arm_linear_density_g_per_mm: float = 0.05
    fuselage_base_mass_g: float = 250.0       # core structure + avionics, once per design
    wing_area_density_kg_per_m2: float = 2.5
    hub_radius_mm: float = 50.0
    tip_clearance_mm: float = 10.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError(f"{f.name} must be a positive number, got {value!r}")

    @classmethod
    def from_dict(cls, overrides: dict) -> "PhysicsConstants":
        known = {f.name for f in fields(cls)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown physics constants: {sorted(unknown)}")
        return replace(cls(), **overrides)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_CONSTANTS = PhysicsConstants()


@dataclass(frozen=True)
class HoverResult:
    can_hover: bool
    hover_time_s: float
    total_mass_kg: float
    hover_power_W: float
    failure_reason: str | None = None


def _require_valid(tree: DesignNode, catalog: Catalog) -> None:
    report = validate_design(tree, catalog)
    if not report.valid:
        first = report.violations[0]
        raise InvalidDesignError(
            f"invalid design: {first.rule} at {first.path}: {first.message}",
            violations=report.violations)


def _params(node: DesignNode) -> dict:
    return dict(leading_params(node))


def mass_rollup(tree: DesignNode, catalog: Catalog,
                constants: PhysicsConstants = DEFAULT_CONSTANTS) -> float:
    """Total mass in kg of the symmetry-expanded design."""
    _require_valid(tree, catalog)
    expanded = expand_symmetry(tree)
    grams = constants.fuselage_base_mass_g
    for node in expanded.walk():
        p = _params(node)
        if node.kind.tag == PROP_ARM:
            grams += constants.arm_linear_density_g_per_mm * p["armLength"]
            for key in ("motorType", "propType", "escType"):
                grams += catalog.get(p[key]).attr("mass_g")
        elif node.kind.tag == WING:
            area_m2 = (p["span_mm"] / 1000.0) * (p["chord_mm"] / 1000.0)
            grams += constants.wing_area_density_kg_per_m2 * area_m2 * 1000.0
        elif node.kind.tag == FUSELAGE:
            grams += p.get("payload_g", 0.0)
    battery = root_battery(tree)
    if battery is not None:
        grams += catalog.get(battery).attr("mass_g")
    return grams / 1000.0


def required_rotor_speed(weight_N: float, rotor_count: int, Ct: float, D_m: float,
                         rho: float = DEFAULT_CONSTANTS.air_density_rho) -> float:
    """Common rotor speed (rev/s) for uniform rotors to carry the given weight."""
    if rotor_count < 1:
        raise ValueError("no propellers: rotor_count must be >= 1")
    if Ct <= 0 or D_m <= 0 or rho <= 0:
        raise ValueError("Ct, D, and rho must be positive")
    return math.sqrt((weight_N / rotor_count) / (Ct * rho * D_m**4))


def _hub_interference(hub_node: DesignNode, catalog: Catalog,
                      constants: PhysicsConstants) -> bool:
    """True when adjacent propeller disks on this hub overlap.

    Children sit on evenly spaced radial slots; a propeller's center lies at
    hub radius + arm length along its slot.  Only consecutive slots that both
    carry prop arms are compared.
    """
    children = hub_node.children
    k = len(children)
    slots = []
    for i, child in enumerate(children):
        if child.kind.tag != PROP_ARM:
            slots.append(None)
            continue
        p = _params(child)
        radius_mm = constants.hub_radius_mm + p["armLength"]
        disk_mm = catalog.get(p["propType"]).attr("diameter_in") * IN_TO_M * 1000.0 / 2.0
        slots.append((radius_mm, disk_mm))
    pair_count = 1 if k == 2 else k
    for i in range(pair_count):
        a, b = slots[i], slots[(i + 1) % k]
        if a is None or b is None:
            continue
        dtheta = 2.0 * math.pi / k
        centers = math.sqrt(a[0] ** 2 + b[0] ** 2 - 2.0 * a[0] * b[0] * math.cos(dtheta))
        if centers < a[1] + b[1] + constants.tip_clearance_mm:
            return True
    return False


def evaluate_hover(tree: DesignNode, catalog: Catalog,
                   constants: PhysicsConstants = DEFAULT_CONSTANTS) -> HoverResult:
    """Label a design: can it hover, and for how long.

    Checks run in a fixed order and the first failure wins: no propellers,
    propeller interference, missing battery, motor rpm ceiling, motor and ESC
    current ceilings, battery discharge ceiling.
    """
    mass_kg = mass_rollup(tree, catalog, constants)
    expanded = expand_symmetry(tree)
    weight_N = mass_kg * GRAVITY_M_PER_S2

    def fail(reason: str, power_W: float = 0.0) -> HoverResult:
        return HoverResult(False, 0.0, mass_kg, power_W, reason)

    rotors: list[tuple[ComponentRecord, ComponentRecord, ComponentRecord]] = []
    for node in expanded.walk():
        if node.kind.tag == PROP_ARM:
            p = _params(node)
            rotors.append((catalog.get(p["motorType"]),
                           catalog.get(p["propType"]),
                           catalog.get(p["escType"])))
    if not rotors:
        return fail(NO_PROPELLERS)

    for node in expanded.walk():
        if node.kind.tag == HUB and _hub_interference(node, catalog, constants):
            return fail(INTERFERENCE)

    battery_id = root_battery(tree)
    if battery_id is None:
        return fail(THRUST_DEFICIT)  # rotors have no power source
    battery = catalog.get(battery_id)
    volts = battery.attr("voltage_V")
    capacity_Ah = battery.attr("capacity_mAh") / 1000.0

    rho = constants.air_density_rho
    diameters_m = [prop.attr("diameter_in") * IN_TO_M for _, prop, _ in rotors]
    thrust_scale = sum(prop.attr("thrust_coeff_Ct") * d**4
                       for (_, prop, _), d in zip(rotors, diameters_m))
    n_req = math.sqrt(weight_N / (rho * thrust_scale))

    currents = []
    power_W = 0.0
    for (motor, prop, esc), d in zip(rotors, diameters_m):
        p_shaft = prop.attr("power_coeff_Cp") * rho * n_req**3 * d**5
        p_elec = p_shaft / constants.drivetrain_efficiency
        power_W += p_elec
        currents.append((motor, esc, p_elec / volts))

    for (motor, prop, esc), d in zip(rotors, diameters_m):
        n_max = motor.attr("kv_rpm_per_volt") * volts * constants.loaded_rpm_fraction / 60.0
        if n_req > n_max:
            return fail(MOTOR_RPM_LIMIT, power_W)
    for motor, esc, amps in currents:
        if amps > motor.attr("max_current_A"):
            return fail(MOTOR_CURRENT_LIMIT, power_W)
    for motor, esc, amps in currents:
        if amps > esc.attr("max_current_A"):
            return fail(ESC_CURRENT_LIMIT, power_W)
    if sum(amps for _, _, amps in currents) > capacity_Ah * battery.attr("max_discharge_C"):
        return fail(BATTERY_DISCHARGE_LIMIT, power_W)

    hover_time_s = (capacity_Ah * constants.usable_battery_fraction
                    * volts * 3600.0) / power_W
    return HoverResult(True, hover_time_s, mass_kg, power_W, None)


def label_design(tree: DesignNode, catalog: Catalog,
                 constants: PhysicsConstants = DEFAULT_CONSTANTS):
    """(label, result) where label is 1 iff the design hovers."""
    result = evaluate_hover(tree, catalog, constants)
    return (1 if result.hover_time_s > 0 else 0), result
