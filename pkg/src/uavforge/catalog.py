"""Component library: motors, propellers, ESCs, batteries.

The catalog owns two derived artifacts the rest of the pipeline depends on:
the categorical value vocabulary (component ids + grammar literals + the
numeric sentinel) and the global attribute-slot schema that token embeddings
use.  Both are deterministic functions of the record set, and a content hash
ties trained models to the exact catalog they were trained against.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .design import node_kind_literals
from .errors import CatalogError

MOTOR = "Motor"
PROPELLER = "Propeller"
ESC = "ESC"
BATTERY = "Battery"
COMPONENT_KINDS = (MOTOR, PROPELLER, ESC, BATTERY)

# Value-vocabulary entry that stands in for every numeric literal; the
# actual number rides in the embedding's float slot.
NUMERIC_VALUE = "<numeric>"

# Attribute names per component kind, in schema order.
KIND_ATTRIBUTES = {
    MOTOR: ("kv_rpm_per_volt", "max_current_A", "resistance_ohm", "mass_g"),
    PROPELLER: ("diameter_in", "pitch_in", "thrust_coeff_Ct", "power_coeff_Cp", "mass_g"),
    ESC: ("max_current_A", "mass_g"),
    BATTERY: ("capacity_mAh", "voltage_V", "max_discharge_C", "mass_g"),
}

# Slot count of the full schema.  15 slots are physical; the rest are named
# reserved slots so the embedding width stays fixed as the schema grows.
ATTRIBUTE_SLOT_COUNT = 51

_KIND_PREFIX = {MOTOR: "motor", PROPELLER: "prop", ESC: "esc", BATTERY: "battery"}


def attribute_schema() -> tuple[str, ...]:
    """Global slot names, fixed positions: physical slots first, then reserved."""
    slots = []
    for kind in COMPONENT_KINDS:
        prefix = _KIND_PREFIX[kind]
        slots.extend(f"{prefix}.{name}" for name in KIND_ATTRIBUTES[kind])
    while len(slots) < ATTRIBUTE_SLOT_COUNT:
        slots.append(f"reserved_{len(slots):02d}")
    return tuple(slots)


@dataclass(frozen=True)
class ComponentRecord:
    id: str
    kind: str
    attributes: dict = field(default_factory=dict)

    def attr(self, name: str) -> float:
        return self.attributes[name]


class Catalog:
    """Immutable, id-indexed component library."""

    def __init__(self, records: list[ComponentRecord]):
        self.records: dict[str, ComponentRecord] = {}
        for record in sorted(records, key=lambda r: r.id):
            if record.id in self.records:
                raise CatalogError(f"duplicate component id {record.id!r}")
            _check_record(record)
            self.records[record.id] = record

        self.attribute_schema = attribute_schema()
        self._slot_index = {name: i for i, name in enumerate(self.attribute_schema)}
        self.value_vocab = tuple(sorted(
            set(self.records) | set(node_kind_literals()) | {NUMERIC_VALUE}))
        self.value_index = {v: i for i, v in enumerate(self.value_vocab)}
        self._ids_by_kind = {
            kind: tuple(r.id for r in self.records.values() if r.kind == kind)
            for kind in COMPONENT_KINDS
        }
        self._slot_ranges = self._compute_slot_ranges()
        self._vector_cache: dict[str, np.ndarray] = {}
        self.content_hash = hashlib.sha256(self.to_bytes()).digest()

    def _compute_slot_ranges(self):
        # Catalog-wide min/max per slot, for the [0, 1] scaling of embeddings.
        lo = {}
        hi = {}
        for record in self.records.values():
            prefix = _KIND_PREFIX[record.kind]
            for name, value in record.attributes.items():
                slot = f"{prefix}.{name}"
                lo[slot] = min(lo.get(slot, value), value)
                hi[slot] = max(hi.get(slot, value), value)
        return lo, hi

    # -- lookups ------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, component_id: str) -> bool:
        return component_id in self.records

    def get(self, component_id: str) -> ComponentRecord:
        try:
            return self.records[component_id]
        except KeyError:
            raise CatalogError(f"unknown component id {component_id!r}") from None

    def ids_of_kind(self, kind: str) -> tuple[str, ...]:
        return self._ids_by_kind[kind]

    def attribute_vector(self, component_id: str) -> np.ndarray:
        """The component's attributes at their global slots, min-max scaled.

        Slots that belong to other kinds (and reserved slots) are exactly 0.
        """
        cached = self._vector_cache.get(component_id)
        if cached is not None:
            return cached
        record = self.get(component_id)
        lo, hi = self._slot_ranges
        vec = np.zeros(len(self.attribute_schema))
        prefix = _KIND_PREFIX[record.kind]
        for name, value in record.attributes.items():
            slot = f"{prefix}.{name}"
            span = hi[slot] - lo[slot]
            vec[self._slot_index[slot]] = (value - lo[slot]) / span if span > 0 else 0.0
        vec.flags.writeable = False
        self._vector_cache[component_id] = vec
        return vec

    # -- serialization ------------------------------------------------------

    def to_bytes(self) -> bytes:
        lines = []
        for record in self.records.values():  # already sorted by id
            lines.append(json.dumps(
                {"id": record.id, "kind": record.kind,
                 "attributes": dict(sorted(record.attributes.items()))},
                sort_keys=True, ensure_ascii=False))
        return ("\n".join(lines) + "\n").encode("utf-8")


def _check_record(record: ComponentRecord) -> None:
    if record.kind not in KIND_ATTRIBUTES:
        raise CatalogError(f"{record.id!r}: unknown component kind {record.kind!r}")
    expected = KIND_ATTRIBUTES[record.kind]
    if tuple(sorted(record.attributes)) != tuple(sorted(expected)):
        raise CatalogError(
            f"{record.id!r}: {record.kind} must define attributes {sorted(expected)}, "
            f"found {sorted(record.attributes)}")
    for name, value in record.attributes.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            raise CatalogError(f"{record.id!r}: attribute {name} must be finite, found {value!r}")
        if value <= 0:
            raise CatalogError(f"{record.id!r}: attribute {name} must be > 0, found {value!r}")


def load_catalog(source) -> Catalog:
    """Parse a line-delimited catalog (one JSON record per line, UTF-8).

    ``source`` may be a bytes/str blob, an open binary/text stream, or a
    path-like object (a plain str is always treated as content).
    """
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            source = fh.read()
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")

    records = []
    for lineno, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"catalog line {lineno}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict) or not {"id", "kind", "attributes"} <= set(obj):
            raise CatalogError(f"catalog line {lineno}: record needs id/kind/attributes fields")
        attrs = obj["attributes"]
        if not isinstance(attrs, dict):
            raise CatalogError(f"catalog line {lineno}: attributes must be a name->number map")
        try:
            records.append(ComponentRecord(
                id=str(obj["id"]), kind=str(obj["kind"]),
                attributes={str(k): float(v) for k, v in attrs.items()}))
        except (TypeError, ValueError) as exc:
            raise CatalogError(f"catalog line {lineno}: {exc}") from None
    seen = set()
    for lineno, record in enumerate(records, start=1):
        if record.id in seen:
            raise CatalogError(f"duplicate component id {record.id!r}")
        seen.add(record.id)
    return Catalog(records)


def save_catalog(catalog: Catalog, sink) -> None:
    data = catalog.to_bytes()
    if hasattr(sink, "write"):
        try:
            sink.write(data)
        except TypeError:  # text-mode stream
            sink.write(data.decode("utf-8"))
    else:
        with open(sink, "wb") as fh:
            fh.write(data)


_BUNDLED: Catalog | None = None


def bundled_catalog() -> Catalog:
    """The catalog shipped with the package (cached after first load)."""
    global _BUNDLED
    if _BUNDLED is None:
        data = resources.files("uavforge.data").joinpath("catalog.jsonl").read_bytes()
        _BUNDLED = load_catalog(data)
    return _BUNDLED
