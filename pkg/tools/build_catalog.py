"""Regenerate the bundled component catalog (src/uavforge/data/catalog.jsonl).

Deterministic: per-part jitter is keyed off a hash of the part id, so
re-running this script reproduces the file byte-for-byte.  Part names mirror
real product lines; values are synthetic but sit in manufacturer-typical
ranges.  A handful of anchor parts carry hand-picked values.
"""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path

SRC = Path(__file__).resolve().parent.parent / "src"
sys.path.insert(0, str(SRC))

from uavforge.catalog import Catalog, ComponentRecord, save_catalog  # noqa: E402

N_MOTORS = 240
N_PROPS = 228
N_ESCS = 75
N_BATTERIES = 100  # total 643; with 27 grammar literals + numeric sentinel -> 671 values


def _jitter(part_id: str, tag: str, lo: float, hi: float) -> float:
    """Deterministic uniform in [lo, hi] keyed on (part_id, tag)."""
    digest = hashlib.sha256(f"{part_id}|{tag}".encode()).digest()
    u = int.from_bytes(digest[:8], "big") / 2**64
    return lo + (hi - lo) * u


def motors() -> list[ComponentRecord]:
    # Anchor part with hand-picked values.
    parts = [ComponentRecord("t_motor_MN2212KV780", "Motor", {
        "kv_rpm_per_volt": 780.0, "max_current_A": 19.0,
        "resistance_ohm": 0.11, "mass_g": 60.0})]

    # (family name format, [(stator diameter mm, stator height mm), ...], kv multipliers)
    families = [
        ("t_motor_MN{d}{h:02d}KV{kv}",
         [(18, 6), (22, 12), (22, 16), (23, 6), (25, 8), (28, 6), (28, 14),
          (31, 10), (33, 10), (35, 8), (35, 15), (40, 6), (40, 14), (43, 8),
          (50, 8), (52, 12), (54, 6), (60, 5), (62, 8)],
         (0.7, 0.9, 1.15, 1.45, 1.8)),
        ("sunnysky_X{d}{h:02d}_KV{kv}",
         [(22, 6), (22, 12), (28, 8), (28, 16), (31, 8), (35, 10), (41, 8),
          (41, 14), (45, 10), (52, 8)],
         (0.75, 1.0, 1.3, 1.65)),
        ("kde_direct_{d}{h:02d}XF_{kv}",
         [(23, 8), (25, 10), (28, 14), (31, 15), (41, 12), (48, 14), (52, 15), (70, 7)],
         (0.6, 0.85, 1.1, 1.5)),
        ("emax_MT{d}{h:02d}_KV{kv}",
         [(18, 6), (22, 13), (26, 8), (30, 10), (35, 12), (40, 8)],
         (0.8, 1.05, 1.4, 1.9)),
        ("brotherhobby_R{d}{h:02d}_KV{kv}",
         [(22, 7), (25, 11), (28, 10), (32, 14), (38, 10)],
         (0.9, 1.2, 1.6, 2.1)),
        ("xing_{d}{h:02d}_KV{kv}",
         [(20, 7), (23, 10), (26, 12), (30, 8), (34, 9), (39, 11), (44, 6), (50, 10)],
         (0.85, 1.1, 1.5, 2.0)),
    ]
    for fmt, sizes, kv_factors in families:
        for d, h in sizes:
            volume = d * d * h  # stator volume proxy, mm^3
            kv_base = 1.35e6 / volume + 240.0
            for factor in kv_factors:
                kv = round(kv_base * factor / 10) * 10
                part_id = fmt.format(d=d, h=h, kv=kv)
                if any(p.id == part_id for p in parts):
                    continue
                mass = volume * 0.0095 + 6.0
                mass *= _jitter(part_id, "mass", 0.88, 1.12)
                imax = 0.030 * volume**0.75 * _jitter(part_id, "imax", 0.8, 1.25)
                res = 2.0e4 / (kv**1.2 * mass) * _jitter(part_id, "res", 0.7, 1.4)
                parts.append(ComponentRecord(part_id, "Motor", {
                    "kv_rpm_per_volt": float(kv),
                    "max_current_A": round(max(imax, 4.0), 1),
                    "resistance_ohm": round(min(max(res, 0.008), 0.9), 4),
                    "mass_g": round(mass, 1)}))
    assert len(parts) >= N_MOTORS, len(parts)
    return parts[:N_MOTORS]


def propellers() -> list[ComponentRecord]:
    parts = [ComponentRecord("apc_propellers_12x5", "Propeller", {
        "diameter_in": 12.0, "pitch_in": 5.0, "thrust_coeff_Ct": 0.115,
        "power_coeff_Cp": 0.047, "mass_g": 17.0})]

    def coeffs(part_id: str, diameter: float, pitch: float):
        ratio = pitch / diameter
        ct = (0.068 + 0.115 * ratio) * _jitter(part_id, "ct", 0.93, 1.07)
        cp = (0.018 + 0.095 * ratio**1.5) * _jitter(part_id, "cp", 0.9, 1.1)
        return round(ct, 4), round(cp, 4)

    families = [
        ("apc_propellers_{dp}", 0.118,
         [4.1, 4.5, 5.0, 5.5, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0,
          14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 22.0],
         (0.33, 0.42, 0.5, 0.62, 0.75)),
        ("t_motor_CF_{dp}", 0.082,
         [13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 20.0, 21.0, 22.0],
         (0.3, 0.38, 0.48, 0.58)),
        ("gemfan_{dp}", 0.105,
         [4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0],
         (0.4, 0.55, 0.7, 0.85)),
        ("mejzlik_{dp}", 0.074,
         [18.0, 20.0, 22.0],
         (0.34, 0.45, 0.56)),
        ("master_airscrew_{dp}", 0.11,
         [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 16.0],
         (0.45, 0.6, 0.8)),
        ("xoar_{dp}", 0.07,
         [24.0, 26.0, 28.0],
         (0.32, 0.42, 0.52)),
    ]
    for fmt, mass_k, diameters, pitch_ratios in families:
        for diameter in diameters:
            for ratio in pitch_ratios:
                pitch = round(diameter * ratio * 2) / 2  # nearest half inch
                if pitch < 1.0:
                    pitch = 1.0
                dp = f"{diameter:g}x{pitch:g}".replace(".", "_")
                part_id = fmt.format(dp=dp)
                if any(p.id == part_id for p in parts):
                    continue
                ct, cp = coeffs(part_id, diameter, pitch)
                mass = mass_k * diameter**2 * _jitter(part_id, "mass", 0.85, 1.15)
                parts.append(ComponentRecord(part_id, "Propeller", {
                    "diameter_in": diameter, "pitch_in": pitch,
                    "thrust_coeff_Ct": ct, "power_coeff_Cp": cp,
                    "mass_g": round(max(mass, 1.5), 1)}))
    assert len(parts) >= N_PROPS, len(parts)
    return parts[:N_PROPS]


def escs() -> list[ComponentRecord]:
    parts = [ComponentRecord("t_motor_T_80A", "ESC", {
        "max_current_A": 80.0, "mass_g": 75.0})]
    families = [
        ("t_motor_T_{a}A", [12, 20, 30, 35, 40, 45, 55, 60, 100, 120]),
        ("t_motor_FLAME_{a}A", [60, 70, 80, 100, 140, 180, 200]),
        ("hobbywing_xrotor_{a}A", [15, 20, 25, 30, 40, 50, 60, 80, 100, 115]),
        ("kde_uas_{a}A", [35, 55, 75, 95, 130, 150]),
        ("emax_blheli_{a}A", [6, 12, 15, 18, 25, 30, 35, 45, 50, 65, 70, 90]),
        ("castle_phoenix_{a}A", [10, 25, 35, 50, 75, 85, 110, 125, 160]),
        ("aikon_ak32_{a}A", [20, 32, 38, 42, 48, 52, 58, 66, 72, 78, 88, 96]),
        ("spedix_is_{a}A", [22, 28, 33, 44, 64, 68, 85, 105, 135]),
    ]
    for fmt, amps in families:
        for a in amps:
            part_id = fmt.format(a=a)
            if any(p.id == part_id for p in parts):
                continue
            mass = (1.6 * a**0.85 + 4.0) * _jitter(part_id, "mass", 0.8, 1.2)
            parts.append(ComponentRecord(part_id, "ESC", {
                "max_current_A": float(a), "mass_g": round(mass, 1)}))
    assert len(parts) >= N_ESCS, len(parts)
    return parts[:N_ESCS]


def batteries() -> list[ComponentRecord]:
    parts = [ComponentRecord("TurnigyGraphene1400mAh3S75C", "Battery", {
        "capacity_mAh": 1400.0, "voltage_V": 11.1, "max_discharge_C": 75.0,
        "mass_g": 150.0})]

    def mass_for(part_id: str, cap_mah: float, cells: int, c_rating: float) -> float:
        wh = cap_mah / 1000.0 * 3.7 * cells
        wh_per_kg = (150.0 - 0.35 * c_rating + (12.0 if cap_mah >= 4000 else 0.0))
        wh_per_kg *= _jitter(part_id, "density", 0.88, 1.12)
        return round(wh / wh_per_kg * 1000.0, 1)

    families = [
        ("TurnigyGraphene{cap}mAh{s}S{c}C",
         [(1000, 3, 45), (1000, 4, 45), (1400, 4, 75), (2200, 3, 45), (2200, 4, 45),
          (3000, 3, 45), (3000, 4, 45), (3000, 6, 45), (4000, 4, 45), (4000, 6, 45),
          (5000, 4, 45), (5000, 6, 45), (6000, 4, 15), (6000, 6, 15)]),
        ("tattu_{cap}mah_{s}s_{c}c",
         [(1300, 3, 45), (1550, 4, 45), (1800, 2, 45), (2300, 3, 45), (2500, 2, 45),
          (3700, 4, 25), (4500, 6, 25), (5200, 3, 15), (5200, 4, 15), (6750, 6, 25),
          (7000, 3, 25), (8000, 6, 25), (9500, 4, 25), (10000, 6, 25), (12000, 6, 15),
          (16000, 6, 15), (22000, 6, 25)]),
        ("gens_ace_{cap}mah_{s}s_{c}c",
         [(450, 2, 30), (650, 2, 60), (800, 3, 60), (1300, 4, 60), (1800, 3, 60),
          (2600, 4, 60), (3300, 4, 60), (4000, 3, 60), (5000, 3, 60), (5300, 6, 30),
          (6500, 6, 30), (7000, 4, 30), (8000, 4, 30), (12000, 6, 30)]),
        ("turnigy_nanotech_{cap}mah_{s}s_{c}c",
         [(850, 2, 25), (1000, 2, 25), (1300, 3, 25), (1500, 3, 25), (2200, 3, 25),
          (2650, 4, 25), (3000, 4, 25), (3300, 3, 25), (4000, 4, 25), (5000, 4, 25),
          (6000, 6, 25), (8400, 6, 25)]),
        ("zeee_{cap}mah_{s}s_{c}c",
         [(1500, 2, 60), (2200, 2, 60), (3700, 3, 60), (4200, 4, 60), (5200, 6, 60),
          (6200, 4, 60), (7600, 6, 60), (8000, 3, 60), (9000, 6, 60), (11000, 6, 60)]),
        ("maxamps_{cap}mah_{s}s_{c}c",
         [(3250, 4, 120), (5450, 4, 120), (6500, 6, 120), (8000, 4, 120), (9000, 6, 120),
          (11000, 8, 75), (12500, 12, 75), (16000, 6, 75), (20000, 12, 75)]),
        ("bonka_{cap}mah_{s}s_{c}c",
         [(4500, 6, 35), (5500, 6, 35), (6000, 4, 35), (7000, 6, 35), (9500, 6, 35),
          (10000, 8, 35), (12000, 8, 35), (14000, 6, 35), (16000, 12, 25), (18000, 12, 25),
          (21000, 6, 25), (22000, 8, 25)]),
        ("cnhl_{cap}mah_{s}s_{c}c",
         [(1100, 3, 90), (1300, 2, 90), (1500, 4, 90), (2000, 4, 90), (2700, 6, 90),
          (3000, 6, 90), (4000, 6, 90), (5000, 6, 90), (5500, 4, 90), (6000, 3, 90),
          (6500, 4, 90)]),
    ]
    for fmt, combos in families:
        for cap, cells, c_rating in combos:
            part_id = fmt.format(cap=cap, s=cells, c=c_rating)
            if any(p.id == part_id for p in parts):
                continue
            parts.append(ComponentRecord(part_id, "Battery", {
                "capacity_mAh": float(cap),
                "voltage_V": round(3.7 * cells, 1),
                "max_discharge_C": float(c_rating),
                "mass_g": mass_for(part_id, cap, cells, c_rating)}))
    assert len(parts) >= N_BATTERIES, len(parts)
    return parts[:N_BATTERIES]


def main() -> None:
    records = motors() + propellers() + escs() + batteries()
    assert len(records) == 643, len(records)
    catalog = Catalog(records)
    assert len(catalog.value_vocab) == 671, len(catalog.value_vocab)
    out = SRC / "uavforge" / "data" / "catalog.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_catalog(catalog, out)
    print(f"wrote {len(records)} records -> {out}")
    print(f"value vocab: {len(catalog.value_vocab)}, "
          f"attribute slots: {len(catalog.attribute_schema)}")


if __name__ == "__main__":
    main()
