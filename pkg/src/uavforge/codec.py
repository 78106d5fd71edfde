"""Tree <-> token-sequence codec and the numeric embedding of tokens.

A design tree flattens to a preorder sequence of singleton key-value tokens:
each node emits its ``node_type`` token, then its params in grammar order,
then its children; the root's battery token comes last.  Symmetric hubs are
emitted once, unexpanded.  Parsing is grammar-directed: the node kind tells
the parser exactly which keys must follow, so sequences decode without
backtracking and malformed input fails at a definite 1-based position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .catalog import ATTRIBUTE_SLOT_COUNT, NUMERIC_VALUE, Catalog
from .design import (
    COMPONENT_KEYS,
    FUSELAGE,
    KEY_INDEX,
    LEADING_PARAMS,
    NODE_TYPE_KEY,
    ROOT_TRAILING_KEY,
    DesignNode,
    kind_from_literal,
    leading_params,
    require_structurally_valid,
    root_battery,
    with_battery,
)
from .errors import CatalogError, SequenceParseError

NUMERIC_KEYS = frozenset(
    key for spec in LEADING_PARAMS.values() for key, value_class in spec
    if value_class == "num")


class Token(NamedTuple):
    key: str
    value: str | float


# ---------------------------------------------------------------------------
# Flatten / parse


def flatten(tree: DesignNode) -> list[Token]:
    """Preorder token sequence of a valid tree (symmetry left unexpanded)."""
    require_structurally_valid(tree)
    out: list[Token] = []

    def emit(node: DesignNode) -> None:
        out.append(Token(NODE_TYPE_KEY, node.kind.literal()))
        for key, value in leading_params(node):
            out.append(Token(key, value if isinstance(value, str) else float(value)))
        for child in node.children:
            emit(child)

    emit(tree)
    battery = root_battery(tree)
    if battery is not None:
        out.append(Token(ROOT_TRAILING_KEY, battery))
    return out


def parse(seq: Iterable[tuple[str, "str | float"]],
          catalog: Catalog | None = None) -> DesignNode:
    """Decode a token sequence back into the tree that produced it.

    With a catalog, component references must resolve to records of the
    expected kind.  Raises :class:`SequenceParseError` naming the 1-based
    position of the offending token (or one past the end when the sequence
    stops short).
    """
    tokens = [Token(k, v) for k, v in seq]
    cursor = 0

    def take(expected_key: str) -> Token:
        nonlocal cursor
        if cursor >= len(tokens):
            raise SequenceParseError(
                f"truncated sequence: expected key {expected_key!r} "
                f"at position {len(tokens) + 1}",
                position=len(tokens) + 1)
        tok = tokens[cursor]
        cursor += 1
        if tok.key != expected_key:
            raise SequenceParseError(
                f"unexpected key {tok.key!r} at position {cursor}: "
                f"expected {expected_key!r}",
                position=cursor)
        return tok

    def check_value(tok: Token, value_class: str) -> "str | float":
        if value_class == "num":
            if isinstance(tok.value, bool) or not isinstance(tok.value, (int, float)):
                raise SequenceParseError(
                    f"unknown value {tok.value!r} at position {cursor}: "
                    f"{tok.key} takes a number",
                    position=cursor)
            return float(tok.value)
        if not isinstance(tok.value, str):
            raise SequenceParseError(
                f"unknown value {tok.value!r} at position {cursor}: "
                f"{tok.key} takes a component id",
                position=cursor)
        if catalog is not None:
            if tok.value not in catalog:
                raise SequenceParseError(
                    f"unknown value {tok.value!r} at position {cursor}: "
                    f"not in catalog",
                    position=cursor)
            kind = catalog.get(tok.value).kind
            if kind != value_class:
                raise SequenceParseError(
                    f"unknown value {tok.value!r} at position {cursor}: "
                    f"is a {kind}, expected {value_class}",
                    position=cursor)
        return tok.value

    def parse_node() -> DesignNode:
        tok = take(NODE_TYPE_KEY)
        if not isinstance(tok.value, str):
            raise SequenceParseError(
                f"unknown value {tok.value!r} at position {cursor}: "
                f"node_type takes a node-kind literal",
                position=cursor)
        try:
            kind = kind_from_literal(tok.value)
        except ValueError:
            raise SequenceParseError(
                f"unknown value {tok.value!r} at position {cursor}: "
                f"not a node-kind literal",
                position=cursor) from None

        spec = LEADING_PARAMS[kind.tag]
        if kind.tag == FUSELAGE and (
                cursor >= len(tokens) or tokens[cursor].key != spec[0][0]):
            spec = ()  # bare fuselage
        params = tuple(
            (key, check_value(take(key), value_class)) for key, value_class in spec)

        n_children = (1 if kind.symmetric else kind.arity) if kind.is_hub else 0
        children = tuple(parse_node() for _ in range(n_children))
        return DesignNode(kind, params, children)

    if not tokens:
        raise SequenceParseError("truncated sequence: empty", position=1)
    root = parse_node()
    if cursor < len(tokens) and tokens[cursor].key == ROOT_TRAILING_KEY:
        tok = take(ROOT_TRAILING_KEY)
        root = with_battery(root, check_value(tok, "Battery"))
    if cursor != len(tokens):
        raise SequenceParseError(
            f"unexpected key {tokens[cursor].key!r} at position {cursor + 1}: "
            f"sequence continues past a complete design",
            position=cursor + 1)
    require_structurally_valid(root)
    return root


# ---------------------------------------------------------------------------
# Line serialization: one design per line, a JSON array of {key: value}


def dumps_sequence(seq: Iterable[tuple[str, "str | float"]]) -> str:
    return json.dumps([{key: value} for key, value in seq],
                      separators=(",", ":"))


def loads_sequence(line: str) -> list[Token]:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SequenceParseError(f"invalid token line: {exc}") from None
    if not isinstance(raw, list):
        raise SequenceParseError("invalid token line: expected a JSON array")
    tokens: list[Token] = []
    for i, item in enumerate(raw, start=1):
        if not isinstance(item, dict) or len(item) != 1:
            raise SequenceParseError(
                f"token at position {i} must be a single key-value object",
                position=i)
        ((key, value),) = item.items()
        if isinstance(value, bool) or not isinstance(value, (str, int, float)):
            raise SequenceParseError(
                f"token at position {i}: value must be a string or number",
                position=i)
        tokens.append(Token(key, value if isinstance(value, str) else float(value)))
    return tokens


# ---------------------------------------------------------------------------
# Numeric embedding


@dataclass(frozen=True)
class FloatStats:
    """Per-key z-score normalization for numeric token values.

    Keys without recorded statistics pass through unchanged (mean 0, std 1),
    so a fresh embedder works before any dataset exists.
    """

    means: dict
    stds: dict

    @classmethod
    def identity(cls) -> "FloatStats":
        return cls({}, {})

    @classmethod
    def from_sequences(cls, seqs: Iterable[Iterable[Token]]) -> "FloatStats":
        samples: dict[str, list[float]] = {}
        for seq in seqs:
            for key, value in seq:
                if not isinstance(value, str):
                    samples.setdefault(key, []).append(float(value))
        means, stds = {}, {}
        for key, values in sorted(samples.items()):
            arr = np.asarray(values)
            means[key] = float(arr.mean())
            std = float(arr.std())
            stds[key] = std if std > 1e-9 else 1.0
        return cls(means, stds)

    def normalize(self, key: str, x: float) -> float:
        return (x - self.means.get(key, 0.0)) / self.stds.get(key, 1.0)

    def denormalize(self, key: str, z: float) -> float:
        return z * self.stds.get(key, 1.0) + self.means.get(key, 0.0)

    def to_json_dict(self) -> dict:
        return {"means": dict(self.means), "stds": dict(self.stds)}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FloatStats":
        return cls(dict(obj["means"]), dict(obj["stds"]))


@dataclass(frozen=True)
class EmbeddedSequence:
    data: np.ndarray   # (length, width) float64
    mask: np.ndarray   # (length,) bool; True on real rows


class TokenEmbedder:
    """Maps tokens to the raw vectors the surrogate consumes.

    Layout per vector: [key one-hot | value one-hot | component attributes |
    normalized float].  Categorical tokens set exactly one key bit and one
    value bit; component references additionally carry the catalog's scaled
    attribute slots; numeric tokens set the shared NUMERIC value class and
    put their z-scored value in the final slot.
    """

    def __init__(self, catalog: Catalog, float_stats: FloatStats | None = None):
        self.catalog = catalog
        self.float_stats = float_stats if float_stats is not None else FloatStats.identity()
        self.n_keys = len(KEY_INDEX)
        self.n_values = len(catalog.value_vocab)
        self.n_attrs = ATTRIBUTE_SLOT_COUNT
        self.width = self.n_keys + self.n_values + self.n_attrs + 1
        self._numeric_class = self.n_keys + catalog.value_index[NUMERIC_VALUE]
        self._cache: dict = {}

    def _vector(self, token: Token) -> np.ndarray:
        """Cached read-only vector; numeric tokens share a per-key template."""
        key, value = token
        numeric = not isinstance(value, str)
        cache_key = key if numeric else (key, value)
        vec = self._cache.get(cache_key)
        if vec is None:
            vec = self._build(key, value, numeric)
            vec.flags.writeable = False
            self._cache[cache_key] = vec
        if numeric:
            vec = vec.copy()
            vec[-1] = self.float_stats.normalize(key, float(value))
        return vec

    def _build(self, key: str, value: "str | float", numeric: bool) -> np.ndarray:
        key_slot = KEY_INDEX.get(key)
        if key_slot is None:
            raise ValueError(f"unknown key {key!r}")
        vec = np.zeros(self.width)
        vec[key_slot] = 1.0
        if numeric:
            if isinstance(value, bool) or key == NODE_TYPE_KEY or key in COMPONENT_KEYS:
                raise ValueError(f"key {key!r} takes a string value")
            vec[self._numeric_class] = 1.0
            return vec

        value_slot = self.catalog.value_index.get(value)
        if value_slot is None:
            raise CatalogError(f"unknown value {value!r} for key {key!r}")
        vec[self.n_keys + value_slot] = 1.0
        expected_kind = COMPONENT_KEYS.get(key)
        if expected_kind is not None:
            record = self.catalog.get(value)
            if record.kind != expected_kind:
                raise CatalogError(
                    f"{key} {value!r} is a {record.kind}, expected {expected_kind}")
            start = self.n_keys + self.n_values
            vec[start:start + self.n_attrs] = self.catalog.attribute_vector(value)
        elif key == NODE_TYPE_KEY:
            kind_from_literal(value)  # ValueError on a non-literal
        else:
            raise ValueError(f"key {key!r} takes a numeric value")
        return vec

    def embed_token(self, token: "Token | tuple") -> np.ndarray:
        return self._vector(Token(*token)).copy()

    def embed_sequence(self, tokens, pad_to: int | None = None) -> EmbeddedSequence:
        tokens = list(tokens)
        n = len(tokens)
        if n == 0:
            raise ValueError("cannot embed an empty sequence")
        if pad_to is None:
            pad_to = n
        elif pad_to < n:
            raise ValueError(f"pad_to={pad_to} is smaller than sequence length {n}")
        data = np.zeros((pad_to, self.width))
        mask = np.zeros(pad_to, dtype=bool)
        mask[:n] = True
        for i, token in enumerate(tokens):
            data[i] = self._vector(Token(*token))
        return EmbeddedSequence(data, mask)

    def embed_batch(self, sequences, pad_to: int | None = None):
        """Stack sequences into (batch, length, width) data + (batch, length) mask."""
        sequences = [list(s) for s in sequences]
        if not sequences:
            raise ValueError("cannot embed an empty batch")
        length = pad_to if pad_to is not None else max(len(s) for s in sequences)
        data = np.zeros((len(sequences), length, self.width))
        mask = np.zeros((len(sequences), length), dtype=bool)
        for b, seq in enumerate(sequences):
            emb = self.embed_sequence(seq, pad_to=length)
            data[b] = emb.data
            mask[b] = emb.mask
        return data, mask
