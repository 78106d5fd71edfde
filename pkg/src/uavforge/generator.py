"""Procedural sampler over the design grammar.

Each design index gets its own counter-derived random stream, so sampling is
order-independent: design i is the same whether drawn alone, in a batch, or
from another process.  Topology first (hub arity, symmetry, wing placement,
optional nested hubs), then component references uniform over the catalog,
then numeric parameters uniform over the configured ranges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

import numpy as np

from .catalog import BATTERY, ESC, MOTOR, PROPELLER, Catalog
from .design import (
    DesignNode,
    MAX_HUB_ARITY,
    MIN_HUB_ARITY,
    hub,
    prop_arm,
    wing,
    with_battery,
)
from .errors import ConfigError

_N_ARITIES = MAX_HUB_ARITY - MIN_HUB_ARITY + 1  # hub arities 2..13
_MAX_WINGS = 4

_NESTED_HUB_PROB = 0.15     # chance a non-wing slot hosts a sub-hub (depth allowing)
_NESTED_HUB_MAX_ARITY = 6   # sub-hubs stay small to bound sequence length
_MAX_ATTEMPTS = 8           # resamples before falling back to the minimal design
_MAX_TOKENS = 256

WING_SPAN_RANGE_MM = (200.0, 1000.0)
WING_CHORD_RANGE_MM = (60.0, 300.0)


def _check_weights(name: str, weights, expected_len: int) -> tuple:
    weights = tuple(float(w) for w in weights)
    if len(weights) != expected_len:
        raise ConfigError(f"{name} needs {expected_len} entries, got {len(weights)}")
    if any(w < 0 for w in weights):
        raise ConfigError(f"{name} entries must be >= 0")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ConfigError(f"{name} must sum to 1 within 1e-9, got {sum(weights)!r}")
    return weights


def _check_range(name: str, bounds) -> tuple:
    lo, hi = (float(b) for b in bounds)
    if not (lo < hi):
        raise ConfigError(f"{name} must satisfy min < max, got ({lo}, {hi})")
    return (lo, hi)


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    arity_weights: tuple = (1.0 / _N_ARITIES,) * _N_ARITIES
    symmetry_prob: float = 0.7
    wing_count_weights: tuple = (0.6, 0.05, 0.15, 0.05, 0.15)
    max_depth: int = 2
    armLength_range_mm: tuple = (80.0, 400.0)
    offset_range_mm: tuple = (-10.0, 10.0)
    angle_range_deg: tuple = (0.0, 90.0)

    def __post_init__(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        object.__setattr__(self, "arity_weights",
                           _check_weights("arity_weights", self.arity_weights, _N_ARITIES))
        object.__setattr__(self, "wing_count_weights",
                           _check_weights("wing_count_weights", self.wing_count_weights,
                                          _MAX_WINGS + 1))
        if not 0.0 <= self.symmetry_prob <= 1.0:
            raise ConfigError(f"symmetry_prob must be in [0, 1], got {self.symmetry_prob!r}")
        if not isinstance(self.max_depth, int) or self.max_depth < 1:
            raise ConfigError(f"max_depth must be an integer >= 1, got {self.max_depth!r}")
        for name in ("armLength_range_mm", "offset_range_mm", "angle_range_deg"):
            object.__setattr__(self, name, _check_range(name, getattr(self, name)))
        if self.armLength_range_mm[0] <= 0:
            raise ConfigError("armLength_range_mm must be positive")

    @classmethod
    def from_dict(cls, obj: dict) -> "GeneratorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown generator config keys: {sorted(unknown)}")
        return replace(cls(), **obj)

    @classmethod
    def from_json_file(cls, path) -> "GeneratorConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(obj)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _rng_for(config: GeneratorConfig, index: int, attempt: int) -> np.random.Generator:
    seq = np.random.SeedSequence((config.seed, index, attempt))
    return np.random.Generator(np.random.PCG64(seq))


def _uniform(rng: np.random.Generator, bounds: tuple) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _pick(rng: np.random.Generator, ids: tuple) -> str:
    return ids[int(rng.integers(len(ids)))]


class _Sampler:
    def __init__(self, rng: np.random.Generator, config: GeneratorConfig, catalog: Catalog):
        self.rng = rng
        self.config = config
        self.motors = catalog.ids_of_kind(MOTOR)
        self.props = catalog.ids_of_kind(PROPELLER)
        self.escs = catalog.ids_of_kind(ESC)
        self.batteries = catalog.ids_of_kind(BATTERY)
        for name, ids in (("Motor", self.motors), ("Propeller", self.props),
                          ("ESC", self.escs), ("Battery", self.batteries)):
            if not ids:
                raise ConfigError(f"catalog has no {name} records to sample from")

    def design(self) -> DesignNode:
        rng, config = self.rng, self.config
        arity = MIN_HUB_ARITY + int(rng.choice(_N_ARITIES, p=config.arity_weights))
        symmetric = rng.random() < config.symmetry_prob
        if symmetric:
            root = DesignNode(hub(arity, symmetric=True), children=(self.limb(depth=2),))
        else:
            n_wings = min(int(rng.choice(_MAX_WINGS + 1, p=config.wing_count_weights)),
                          arity - 1)
            wing_slots = set(
                int(s) for s in rng.choice(arity, size=n_wings, replace=False))
            children = tuple(
                self.wing() if slot in wing_slots else self.limb(depth=2)
                for slot in range(arity))
            root = DesignNode(hub(arity, symmetric=False), children=children)
        return with_battery(root, _pick(rng, self.batteries))

    def limb(self, depth: int) -> DesignNode:
        rng, config = self.rng, self.config
        if depth <= config.max_depth and rng.random() < _NESTED_HUB_PROB:
            return self.sub_hub(depth)
        return self.prop_arm()

    def sub_hub(self, depth: int) -> DesignNode:
        rng, config = self.rng, self.config
        n = _NESTED_HUB_MAX_ARITY - MIN_HUB_ARITY + 1
        weights = np.asarray(config.arity_weights[:n])
        total = weights.sum()
        # all configured mass may sit on larger arities; sub-hubs go uniform then
        weights = weights / total if total > 0 else np.full(n, 1.0 / n)
        arity = MIN_HUB_ARITY + int(rng.choice(n, p=weights))
        if rng.random() < config.symmetry_prob:
            return DesignNode(hub(arity, symmetric=True), children=(self.limb(depth + 1),))
        children = tuple(self.limb(depth + 1) for _ in range(arity))
        return DesignNode(hub(arity, symmetric=False), children=children)

    def prop_arm(self) -> DesignNode:
        rng, config = self.rng, self.config
        return prop_arm(
            arm_length=_uniform(rng, config.armLength_range_mm),
            motor=_pick(rng, self.motors),
            prop=_pick(rng, self.props),
            esc=_pick(rng, self.escs),
            offset_a=_uniform(rng, config.offset_range_mm),
            offset_b=_uniform(rng, config.offset_range_mm),
            angle=_uniform(rng, config.angle_range_deg),
            x1_offset=_uniform(rng, config.offset_range_mm),
            z1_offset=_uniform(rng, config.offset_range_mm),
        )

    def wing(self) -> DesignNode:
        rng, config = self.rng, self.config
        return wing(
            span_mm=_uniform(rng, WING_SPAN_RANGE_MM),
            chord_mm=_uniform(rng, WING_CHORD_RANGE_MM),
            angle_deg=_uniform(rng, config.angle_range_deg),
            offset=_uniform(rng, config.offset_range_mm),
        )

    def minimal(self) -> DesignNode:
        """Fixed-shape fallback; always 12 tokens."""
        arm = prop_arm(
            arm_length=sum(self.config.armLength_range_mm) / 2.0,
            motor=self.motors[0], prop=self.props[0], esc=self.escs[0])
        root = DesignNode(hub(4, symmetric=True), children=(arm,))
        return with_battery(root, self.batteries[0])


def _token_count(tree: DesignNode) -> int:
    return sum(1 + len(node.params) for node in tree.walk())


def sample_design(config: GeneratorConfig, index: int, catalog: Catalog) -> DesignNode:
    """Design number `index` under this config: valid, and at most 256 tokens.

    Deterministic in (config, index).  The rare oversized draw is resampled
    from a fresh per-attempt stream; after 8 attempts the minimal fallback
    design is returned.
    """
    for attempt in range(_MAX_ATTEMPTS):
        sampler = _Sampler(_rng_for(config, index, attempt), config, catalog)
        tree = sampler.design()
        if _token_count(tree) <= _MAX_TOKENS:
            return tree
    return sampler.minimal()


def sample_batch(config: GeneratorConfig, start_index: int, n: int,
                 catalog: Catalog) -> list[DesignNode]:
    """Designs at indices [start_index, start_index + n)."""
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    return [sample_design(config, start_index + i, catalog) for i in range(n)]
