"""Design grammar core: tree types, symmetry semantics, structural validation.

A design is a tree of nodes.  Hubs carry 2..13 connection slots and may be
tagged symmetric, in which case a single child subtree stands for all slots
and is replicated when the design is compiled.  Prop arms, wings, and
fuselage pods are leaves whose parameters follow a fixed, grammar-defined
order, so trees serialize to key-value sequences unambiguously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

from .errors import InvalidDesignError

if TYPE_CHECKING:
    from .catalog import Catalog

# Node kind tags.
HUB = "Hub"
PROP_ARM = "PropArm"
WING = "Wing"
FUSELAGE = "Fuselage"

MIN_HUB_ARITY = 2
MAX_HUB_ARITY = 13

# The full key vocabulary, in one-hot class order.  Fixed: the embedder's
# key segment width is len(PARAM_KEYS).
NODE_TYPE_KEY = "node_type"
PARAM_KEYS = (
    NODE_TYPE_KEY,
    "armLength",
    "motorType",
    "propType",
    "escType",
    "batteryType",
    "offset",
    "angle",
    "x1_offset",
    "z1_offset",
    "span_mm",
    "chord_mm",
    "angle_deg",
    "length_mm",
    "diameter_mm",
    "payload_g",
    "cargo_x_mm",
    "cargo_z_mm",
)
KEY_INDEX = {k: i for i, k in enumerate(PARAM_KEYS)}

# Component-reference keys and the catalog kind each must resolve to.
COMPONENT_KEYS = {
    "motorType": "Motor",
    "propType": "Propeller",
    "escType": "ESC",
    "batteryType": "Battery",
}

# Leading parameter order per node kind: (key, value class) pairs, where the
# value class is "num" or a catalog component kind.  Hubs carry no leading
# parameters; the root may carry a single trailing batteryType.
LEADING_PARAMS = {
    HUB: (),
    PROP_ARM: (
        ("armLength", "num"),
        ("motorType", "Motor"),
        ("propType", "Propeller"),
        ("escType", "ESC"),
        ("offset", "num"),
        ("offset", "num"),
        ("angle", "num"),
        ("x1_offset", "num"),
        ("z1_offset", "num"),
    ),
    WING: (
        ("span_mm", "num"),
        ("chord_mm", "num"),
        ("angle_deg", "num"),
        ("offset", "num"),
    ),
    FUSELAGE: (
        ("length_mm", "num"),
        ("diameter_mm", "num"),
        ("payload_g", "num"),
        ("cargo_x_mm", "num"),
        ("cargo_z_mm", "num"),
    ),
}
ROOT_TRAILING_KEY = "batteryType"

# Numeric keys that must be strictly positive / non-negative.
_POSITIVE_KEYS = frozenset({"armLength", "span_mm", "chord_mm", "length_mm", "diameter_mm"})
_NONNEGATIVE_KEYS = frozenset({"payload_g"})


@dataclass(frozen=True)
class NodeKind:
    """Variant tag for a design node.

    ``arity``/``symmetric`` are meaningful for hubs only.
    """

    tag: str
    arity: int = 0
    symmetric: bool = False

    @property
    def is_hub(self) -> bool:
        return self.tag == HUB

    def literal(self) -> str:
        """The node_type token value for this kind (e.g. ``ConnectedHub4_Sym``)."""
        if self.tag == HUB:
            return f"ConnectedHub{self.arity}_Sym" if self.symmetric else f"ConnectedHub{self.arity}"
        return self.tag


def hub(arity: int, symmetric: bool = False) -> NodeKind:
    return NodeKind(HUB, arity, symmetric)


PROP_ARM_KIND = NodeKind(PROP_ARM)
WING_KIND = NodeKind(WING)
FUSELAGE_KIND = NodeKind(FUSELAGE)


def node_kind_literals() -> tuple[str, ...]:
    """Every node_type literal the grammar admits, in vocabulary order."""
    names = [PROP_ARM, WING, FUSELAGE]
    for k in range(MIN_HUB_ARITY, MAX_HUB_ARITY + 1):
        names.append(f"ConnectedHub{k}")
        names.append(f"ConnectedHub{k}_Sym")
    return tuple(names)


def kind_from_literal(literal: str) -> NodeKind:
    """Inverse of :meth:`NodeKind.literal`.  Raises ``ValueError`` if unknown."""
    if literal in (PROP_ARM, WING, FUSELAGE):
        return NodeKind(literal)
    if literal.startswith("ConnectedHub"):
        body = literal[len("ConnectedHub"):]
        symmetric = body.endswith("_Sym")
        if symmetric:
            body = body[: -len("_Sym")]
        if body.isdigit():
            arity = int(body)
            if MIN_HUB_ARITY <= arity <= MAX_HUB_ARITY:
                return hub(arity, symmetric)
    raise ValueError(f"unknown node_type literal: {literal!r}")


@dataclass(frozen=True)
class DesignNode:
    """One node of a design tree: kind, ordered params, ordered children."""

    kind: NodeKind
    params: tuple = ()
    children: tuple = ()

    def walk(self) -> Iterator["DesignNode"]:
        """Preorder traversal over this subtree."""
        yield self
        for child in self.children:
            yield from child.walk()


def prop_arm(arm_length: float, motor: str, prop: str, esc: str,
             offset_a: float = 0.0, offset_b: float = 0.0, angle: float = 0.0,
             x1_offset: float = 0.0, z1_offset: float = 0.0) -> DesignNode:
    """Build a prop-arm leaf with its parameters in grammar order."""
    return DesignNode(PROP_ARM_KIND, params=(
        ("armLength", float(arm_length)),
        ("motorType", motor),
        ("propType", prop),
        ("escType", esc),
        ("offset", float(offset_a)),
        ("offset", float(offset_b)),
        ("angle", float(angle)),
        ("x1_offset", float(x1_offset)),
        ("z1_offset", float(z1_offset)),
    ))


def wing(span_mm: float, chord_mm: float, angle_deg: float = 0.0, offset: float = 0.0) -> DesignNode:
    return DesignNode(WING_KIND, params=(
        ("span_mm", float(span_mm)),
        ("chord_mm", float(chord_mm)),
        ("angle_deg", float(angle_deg)),
        ("offset", float(offset)),
    ))


def fuselage(length_mm: float = 300.0, diameter_mm: float = 100.0, payload_g: float = 0.0,
             cargo_x_mm: float = 0.0, cargo_z_mm: float = 0.0) -> DesignNode:
    return DesignNode(FUSELAGE_KIND, params=(
        ("length_mm", float(length_mm)),
        ("diameter_mm", float(diameter_mm)),
        ("payload_g", float(payload_g)),
        ("cargo_x_mm", float(cargo_x_mm)),
        ("cargo_z_mm", float(cargo_z_mm)),
    ))


def with_battery(node: DesignNode, battery: str) -> DesignNode:
    """Attach a root-level battery as the node's trailing parameter."""
    return DesignNode(node.kind, params=node.params + (("batteryType", battery),),
                      children=node.children)


def root_battery(tree: DesignNode) -> str | None:
    """The root's battery id, or None when the design carries no battery."""
    for key, value in tree.params:
        if key == ROOT_TRAILING_KEY:
            return value
    return None


def leading_params(node: DesignNode) -> tuple:
    """The node's params with any trailing batteryType stripped."""
    return tuple(p for p in node.params if p[0] != ROOT_TRAILING_KEY)


def symmetric_quadcopter() -> DesignNode:
    """The bundled reference design: a symmetric four-arm quadcopter."""
    arm = prop_arm(
        arm_length=210.88760375976562,
        motor="t_motor_MN2212KV780",
        prop="apc_propellers_12x5",
        esc="t_motor_T_80A",
        offset_a=-3.2862548828125,
        offset_b=4.2498626708984375,
        angle=0.0,
        x1_offset=4.219192504882812,
        z1_offset=3.637290954589844,
    )
    root = DesignNode(hub(4, symmetric=True), children=(arm,))
    return with_battery(root, "TurnigyGraphene1400mAh3S75C")


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def valid(self) -> bool:
        return not self.violations


class _Validator:
    def __init__(self, catalog: "Catalog | None"):
        self.catalog = catalog
        self.violations: list[Violation] = []

    def fail(self, path: str, rule: str, message: str) -> None:
        self.violations.append(Violation(path, rule, message))

    def check_node(self, node: DesignNode, path: str, is_root: bool) -> None:
        kind = node.kind
        if kind.tag not in LEADING_PARAMS:
            self.fail(path, "node-kind", f"unknown node kind {kind.tag!r}")
            return

        if kind.is_hub:
            if not MIN_HUB_ARITY <= kind.arity <= MAX_HUB_ARITY:
                self.fail(path, "hub-arity-range",
                          f"hub arity {kind.arity} outside [{MIN_HUB_ARITY}, {MAX_HUB_ARITY}]")
            elif kind.symmetric and len(node.children) != 1:
                self.fail(path, "symmetry-child-count",
                          f"symmetric hub must define exactly 1 child, found {len(node.children)}")
            elif not kind.symmetric and len(node.children) != kind.arity:
                self.fail(path, "child-count",
                          f"hub of arity {kind.arity} must have {kind.arity} children, "
                          f"found {len(node.children)}")
        elif node.children:
            self.fail(path, "child-count", f"{kind.tag} is a leaf and cannot have children")

        self.check_params(node, path, is_root)
        for i, child in enumerate(node.children):
            self.check_node(child, f"{path}.children[{i}]", is_root=False)

    def check_params(self, node: DesignNode, path: str, is_root: bool) -> None:
        spec = LEADING_PARAMS[node.kind.tag]
        params = list(node.params)

        # Trailing battery: root only, at most one, after all leading params.
        battery_positions = [i for i, (k, _) in enumerate(params) if k == ROOT_TRAILING_KEY]
        if battery_positions:
            if not is_root:
                self.fail(path, "battery-placement", "batteryType is only allowed on the root node")
            elif len(battery_positions) > 1:
                self.fail(path, "battery-placement", "more than one batteryType on the root")
            elif battery_positions[0] != len(params) - 1:
                self.fail(path, "battery-placement", "batteryType must be the final root parameter")
            else:
                self.check_value(params[-1], path, len(params) - 1, expected="Battery")
            params = [p for i, p in enumerate(params) if i not in battery_positions]

        keys = [k for k, _ in params]
        expected_keys = [k for k, _ in spec]
        if node.kind.tag == FUSELAGE and not keys:
            return  # a bare fuselage may omit its whole param block
        if keys != expected_keys:
            self.fail(path, "param-order",
                      f"{node.kind.tag} params must be {expected_keys}, found {keys}")
            return
        for i, (param, (_, value_class)) in enumerate(zip(params, spec)):
            self.check_value(param, path, i, expected=value_class)

    def check_value(self, param, path: str, index: int, expected: str) -> None:
        key, value = param
        where = f"{path}.params[{index}]"
        if expected == "num":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                self.fail(where, "param-type", f"{key} must be numeric, found {type(value).__name__}")
            elif not math.isfinite(value):
                self.fail(where, "numeric-finite", f"{key} must be finite, found {value!r}")
            elif key in _POSITIVE_KEYS and value <= 0:
                self.fail(where, "numeric-range", f"{key} must be > 0, found {value!r}")
            elif key in _NONNEGATIVE_KEYS and value < 0:
                self.fail(where, "numeric-range", f"{key} must be >= 0, found {value!r}")
        else:
            if not isinstance(value, str):
                self.fail(where, "param-type",
                          f"{key} must reference a component id, found {type(value).__name__}")
            elif self.catalog is not None:
                record = self.catalog.records.get(value)
                if record is None:
                    self.fail(where, "catalog-resolution", f"{key} {value!r} not in catalog")
                elif record.kind != expected:
                    self.fail(where, "catalog-resolution",
                              f"{key} {value!r} is a {record.kind}, expected {expected}")


def validate_design(tree: DesignNode, catalog: "Catalog | None" = None) -> ValidationReport:
    """Check a tree against the grammar; violations are data, not errors.

    Passing a catalog additionally checks that every component reference
    resolves to a record of the right kind.
    """
    v = _Validator(catalog)
    v.check_node(tree, "root", is_root=True)
    return ValidationReport(tuple(v.violations))


def require_structurally_valid(tree: DesignNode) -> None:
    """Raise :class:`InvalidDesignError` unless the tree's structure is valid.

    Catalog resolution is not checked here; operations that only walk the
    tree shape (symmetry expansion, counting, flattening) use this guard.
    """
    report = validate_design(tree, catalog=None)
    if not report.valid:
        first = report.violations[0]
        raise InvalidDesignError(
            f"invalid design: {first.rule} at {first.path}: {first.message}",
            violations=report.violations,
        )


# ---------------------------------------------------------------------------
# Symmetry expansion and component counting


def expand_symmetry(tree: DesignNode) -> DesignNode:
    """Compile symmetric hubs: each becomes a plain hub with k identical children.

    Idempotent; nodes are immutable so replicated subtrees share structure.
    """
    require_structurally_valid(tree)
    return _expand(tree)


def _expand(node: DesignNode) -> DesignNode:
    children = tuple(_expand(c) for c in node.children)
    kind = node.kind
    if kind.is_hub and kind.symmetric:
        return DesignNode(hub(kind.arity, symmetric=False),
                          params=node.params, children=children * kind.arity)
    if children == node.children:
        return node
    return DesignNode(kind, params=node.params, children=children)


@dataclass(frozen=True)
class ComponentCounts:
    propellers: int = 0
    wings: int = 0
    motors: int = 0
    escs: int = 0
    batteries: int = 0
    fuselages: int = 0


def count_components(tree: DesignNode) -> ComponentCounts:
    """Component totals of the compiled (symmetry-expanded) design."""
    expanded = expand_symmetry(tree)
    propellers = motors = escs = wings = fuselages = 0
    for node in expanded.walk():
        if node.kind.tag == PROP_ARM:
            propellers += 1
            motors += 1
            escs += 1
        elif node.kind.tag == WING:
            wings += 1
        elif node.kind.tag == FUSELAGE:
            fuselages += 1
    batteries = 1 if root_battery(tree) is not None else 0
    return ComponentCounts(propellers=propellers, wings=wings, motors=motors,
                           escs=escs, batteries=batteries, fuselages=fuselages)
