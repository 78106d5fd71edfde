"""Transformer encoder classifier, from scratch on numpy float64.

Forward and reverse passes are hand-written per layer; no autograd.  A layer
object caches what its backward pass needs, accumulates parameter gradients
in place, and returns the gradient with respect to its input.  Padded
positions are excluded by additive key masking (-1e30 pre-softmax, which
underflows to exactly zero attention weight), and the classifier reads the
hidden state at each sequence's last real token.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .codec import FloatStats
from .errors import CheckpointError, ConfigError, TrainingDivergedError

MASK_FILL = -1e30
LAYERNORM_EPS = 1e-12

CHECKPOINT_MAGIC = b"UAVSURR1"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 200
    n_layers: int = 8
    n_heads: int = 2
    d_ff: int = 800
    input_dim: int = 741
    max_seq_len: int = 256
    dropout: float = 0.0
    positional_encoding: str = "sinusoidal"
    norm_placement: str = "post"
    readout: str = "last"

    def __post_init__(self):
        for name in ("d_model", "n_layers", "n_heads", "d_ff", "input_dim", "max_seq_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}")
        if self.dropout != 0.0:
            raise ConfigError("only dropout=0.0 is supported")
        if self.positional_encoding != "sinusoidal":
            raise ConfigError(
                f"unsupported positional_encoding {self.positional_encoding!r}")
        if self.norm_placement not in ("post", "pre"):
            raise ConfigError(f"norm_placement must be 'post' or 'pre', "
                              f"got {self.norm_placement!r}")
        if self.readout != "last":
            raise ConfigError(f"unsupported readout {self.readout!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return replace(cls(), **obj)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def sinusoidal_encoding(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len)[:, None].astype(np.float64)
    dim = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (dim // 2)) / d_model)
    return np.where(dim % 2 == 0, np.sin(angle), np.cos(angle))


# ---------------------------------------------------------------------------
# Layers


class Linear:
    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int):
        bound = 1.0 / math.sqrt(d_in)
        self.W = rng.uniform(-bound, bound, (d_in, d_out))
        self.b = rng.uniform(-bound, bound, d_out)
        self.gW = np.zeros_like(self.W)
        self.gb = np.zeros_like(self.b)

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.W + self.b

    def backward(self, grad: np.ndarray) -> np.ndarray:
        x2 = self._x.reshape(-1, self.W.shape[0])
        g2 = grad.reshape(-1, self.W.shape[1])
        self.gW += x2.T @ g2
        self.gb += g2.sum(axis=0)
        return grad @ self.W.T

    def zero_grads(self) -> None:
        self.gW[...] = 0.0
        self.gb[...] = 0.0


class LayerNorm:
    def __init__(self, d: int, eps: float = LAYERNORM_EPS):
        self.gamma = np.ones(d)
        self.beta = np.zeros(d)
        self.eps = eps
        self.ggamma = np.zeros(d)
        self.gbeta = np.zeros(d)

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self._inv = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv
        return self.gamma * self._xhat + self.beta

    def backward(self, grad: np.ndarray) -> np.ndarray:
        d = grad.shape[-1]
        self.ggamma += (grad * self._xhat).reshape(-1, d).sum(axis=0)
        self.gbeta += grad.reshape(-1, d).sum(axis=0)
        gx = grad * self.gamma
        mean_g = gx.mean(axis=-1, keepdims=True)
        mean_gx = (gx * self._xhat).mean(axis=-1, keepdims=True)
        return self._inv * (gx - mean_g - self._xhat * mean_gx)

    def zero_grads(self) -> None:
        self.ggamma[...] = 0.0
        self.gbeta[...] = 0.0


class MultiHeadSelfAttention:
    def __init__(self, rng: np.random.Generator, d_model: int, n_heads: int):
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.q = Linear(rng, d_model, d_model)
        self.k = Linear(rng, d_model, d_model)
        self.v = Linear(rng, d_model, d_model)
        self.o = Linear(rng, d_model, d_model)
        self.att: np.ndarray | None = None  # (batch, heads, L, L) after forward

    def _split(self, x: np.ndarray) -> np.ndarray:
        batch, length, _ = x.shape
        return x.reshape(batch, length, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        batch, heads, length, d_head = x.shape
        return x.transpose(0, 2, 1, 3).reshape(batch, length, heads * d_head)

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        q = self._split(self.q.forward(x))
        k = self._split(self.k.forward(x))
        v = self._split(self.v.forward(x))
        scale = 1.0 / math.sqrt(self.d_head)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores = scores + np.where(mask[:, None, None, :], 0.0, MASK_FILL)
        scores -= scores.max(axis=-1, keepdims=True)
        e = np.exp(scores)
        att = e / e.sum(axis=-1, keepdims=True)
        self.att, self._q, self._k, self._v, self._scale = att, q, k, v, scale
        return self.o.forward(self._merge(att @ v))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        att, q, k, v = self.att, self._q, self._k, self._v
        g_ctx = self._split(self.o.backward(grad))
        g_att = g_ctx @ v.transpose(0, 1, 3, 2)
        g_v = att.transpose(0, 1, 3, 2) @ g_ctx
        g_scores = att * (g_att - (g_att * att).sum(axis=-1, keepdims=True))
        g_q = (g_scores @ k) * self._scale
        g_k = (g_scores.transpose(0, 1, 3, 2) @ q) * self._scale
        return (self.q.backward(self._merge(g_q))
                + self.k.backward(self._merge(g_k))
                + self.v.backward(self._merge(g_v)))

    def zero_grads(self) -> None:
        for lin in (self.q, self.k, self.v, self.o):
            lin.zero_grads()


class FeedForward:
    def __init__(self, rng: np.random.Generator, d_model: int, d_ff: int):
        self.lin1 = Linear(rng, d_model, d_ff)
        self.lin2 = Linear(rng, d_ff, d_model)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.lin1.forward(x)
        self._active = h > 0
        return self.lin2.forward(np.maximum(h, 0.0))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return self.lin1.backward(self.lin2.backward(grad) * self._active)

    def zero_grads(self) -> None:
        self.lin1.zero_grads()
        self.lin2.zero_grads()


class EncoderLayer:
    def __init__(self, rng: np.random.Generator, config: ModelConfig):
        self.attn = MultiHeadSelfAttention(rng, config.d_model, config.n_heads)
        self.ln1 = LayerNorm(config.d_model)
        self.ff = FeedForward(rng, config.d_model, config.d_ff)
        self.ln2 = LayerNorm(config.d_model)
        self.post_norm = config.norm_placement == "post"

    def forward(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        if self.post_norm:
            h = self.ln1.forward(x + self.attn.forward(x, mask))
            return self.ln2.forward(h + self.ff.forward(h))
        h = x + self.attn.forward(self.ln1.forward(x), mask)
        return h + self.ff.forward(self.ln2.forward(h))

    def backward(self, grad: np.ndarray) -> np.ndarray:
        if self.post_norm:
            g = self.ln2.backward(grad)
            g = g + self.ff.backward(g)
            g = self.ln1.backward(g)
            return g + self.attn.backward(g)
        g = grad + self.ln2.backward(self.ff.backward(grad))
        return g + self.ln1.backward(self.attn.backward(g))

    def zero_grads(self) -> None:
        for part in (self.attn, self.ln1, self.ff, self.ln2):
            part.zero_grads()


# ---------------------------------------------------------------------------
# Model


class SurrogateModel:
    """Encoder classifier plus everything inference needs to travel with it:
    the float-normalization statistics and the hash of the catalog whose
    vocabulary defines the input layout."""

    def __init__(self, config: ModelConfig, float_stats: FloatStats | None = None,
                 catalog_hash: bytes = b"\x00" * 32, init_seed: int = 0):
        if len(catalog_hash) != 32:
            raise ConfigError("catalog_hash must be 32 bytes")
        self.config = config
        self.float_stats = float_stats if float_stats is not None else FloatStats.identity()
        self.catalog_hash = bytes(catalog_hash)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(init_seed)))
        self.input_proj = Linear(rng, config.input_dim, config.d_model)
        self.layers = [EncoderLayer(rng, config) for _ in range(config.n_layers)]
        self.readout = Linear(rng, config.d_model, 1)
        self.pos_table = sinusoidal_encoding(config.max_seq_len, config.d_model)

    # -- parameter plumbing

    def _modules(self):
        yield "input_proj", self.input_proj
        for i, layer in enumerate(self.layers):
            prefix = f"layers.{i}"
            yield f"{prefix}.attn.q", layer.attn.q
            yield f"{prefix}.attn.k", layer.attn.k
            yield f"{prefix}.attn.v", layer.attn.v
            yield f"{prefix}.attn.o", layer.attn.o
            yield f"{prefix}.ln1", layer.ln1
            yield f"{prefix}.ff.lin1", layer.ff.lin1
            yield f"{prefix}.ff.lin2", layer.ff.lin2
            yield f"{prefix}.ln2", layer.ln2
        yield "readout", self.readout

    def parameters(self) -> dict:
        """Live parameter arrays, keyed by name, in checkpoint order."""
        out = {}
        for name, module in self._modules():
            if isinstance(module, Linear):
                out[f"{name}.W"] = module.W
                out[f"{name}.b"] = module.b
            else:
                out[f"{name}.gamma"] = module.gamma
                out[f"{name}.beta"] = module.beta
        return out

    def gradients(self) -> dict:
        out = {}
        for name, module in self._modules():
            if isinstance(module, Linear):
                out[f"{name}.W"] = module.gW
                out[f"{name}.b"] = module.gb
            else:
                out[f"{name}.gamma"] = module.ggamma
                out[f"{name}.beta"] = module.gbeta
        return out

    def zero_grads(self) -> None:
        self.input_proj.zero_grads()
        for layer in self.layers:
            layer.zero_grads()
        self.readout.zero_grads()

    @classmethod
    def from_parameters(cls, config: ModelConfig, float_stats: FloatStats,
                        catalog_hash: bytes, tensors: dict) -> "SurrogateModel":
        model = cls(config, float_stats, catalog_hash, init_seed=0)
        params = model.parameters()
        if set(tensors) != set(params):
            raise CheckpointError("parameter names do not match the model config")
        for name, live in params.items():
            if tensors[name].shape != live.shape:
                raise CheckpointError(
                    f"tensor {name}: shape {tensors[name].shape} != {live.shape}")
            np.copyto(live, tensors[name])
        return model

    # -- forward / backward

    def _check_batch(self, data: np.ndarray, mask: np.ndarray) -> None:
        if data.ndim != 3 or mask.ndim != 2 or data.shape[:2] != mask.shape:
            raise ValueError(
                f"expected data (batch, length, width) with matching mask, "
                f"got {data.shape} and {mask.shape}")
        if data.shape[2] != self.config.input_dim:
            raise ValueError(
                f"input width {data.shape[2]} != configured {self.config.input_dim}")
        if data.shape[1] > self.config.max_seq_len:
            raise ValueError(
                f"sequence length {data.shape[1]} exceeds max {self.config.max_seq_len}")
        if not mask.any(axis=1).all():
            raise ValueError("every sequence needs at least one unmasked position")

    def forward(self, data: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Logits (batch,) for embedded sequences (batch, length, input_dim)."""
        data = np.asarray(data, dtype=np.float64)
        mask = np.asarray(mask, dtype=bool)
        self._check_batch(data, mask)
        batch, length, _ = data.shape
        x = self.input_proj.forward(data) + self.pos_table[:length]
        for layer in self.layers:
            x = layer.forward(x, mask)
        last = length - 1 - np.argmax(mask[:, ::-1], axis=1)
        self._last = last
        self._shape = x.shape
        return self.readout.forward(x[np.arange(batch), last])[:, 0]

    def backward(self, grad_logits: np.ndarray) -> None:
        """Accumulate parameter gradients for the most recent forward."""
        g_h = self.readout.backward(grad_logits[:, None])
        g_x = np.zeros(self._shape)
        g_x[np.arange(self._shape[0]), self._last] = g_h
        for layer in reversed(self.layers):
            g_x = layer.backward(g_x)
        self.input_proj.backward(g_x)

    def predict_proba(self, data: np.ndarray, mask: np.ndarray) -> np.ndarray:
        z = self.forward(data, mask)
        return 1.0 / (1.0 + np.exp(-z))

    def loss(self, data: np.ndarray, mask: np.ndarray, labels: np.ndarray) -> float:
        z = self.forward(data, mask)
        return float(np.mean(_bce_with_logits(z, _check_labels(labels, len(z)))))

    def loss_and_gradients(self, data: np.ndarray, mask: np.ndarray,
                           labels: np.ndarray):
        """Mean BCE over the batch and gradients for every parameter."""
        z = self.forward(data, mask)
        y = _check_labels(labels, len(z))
        self.last_logits = z
        loss = float(np.mean(_bce_with_logits(z, y)))
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss {loss!r}")
        self.zero_grads()
        dz = (1.0 / (1.0 + np.exp(-z)) - y) / len(z)
        self.backward(dz)
        return loss, self.gradients()


def _check_labels(labels, n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (n,):
        raise ValueError(f"labels shape {y.shape} != ({n},)")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    return y


def _bce_with_logits(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # stable form of -[y*log(sigmoid) + (1-y)*log(1-sigmoid)]
    return np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))


# ---------------------------------------------------------------------------
# Checkpoints
#
# magic | u32 version | u32 config-JSON length + bytes | 32-byte catalog hash
# | u32 stats-JSON length + bytes | parameter tensors in declared order as
# little-endian float64 | sha256 of everything before it


def save_checkpoint(model: SurrogateModel, sink) -> None:
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(CHECKPOINT_VERSION.to_bytes(4, "little"))
    config_blob = json.dumps(model.config.to_dict(), sort_keys=True).encode()
    buf.write(len(config_blob).to_bytes(4, "little"))
    buf.write(config_blob)
    buf.write(model.catalog_hash)
    stats_blob = json.dumps(model.float_stats.to_json_dict(), sort_keys=True).encode()
    buf.write(len(stats_blob).to_bytes(4, "little"))
    buf.write(stats_blob)
    for tensor in model.parameters().values():
        buf.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    payload = buf.getvalue()
    payload += hashlib.sha256(payload).digest()
    if hasattr(sink, "write"):
        sink.write(payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(payload)


def load_checkpoint(source, catalog=None,
                    allow_hash_mismatch: bool = False) -> SurrogateModel:
    """Rebuild a model from its checkpoint bytes.

    When a catalog is given, its content hash must equal the one stored in
    the checkpoint unless `allow_hash_mismatch` is set: a model's input
    layout is only meaningful against the catalog it was trained with.
    """
    if hasattr(source, "read"):
        blob = source.read()
    elif isinstance(source, (bytes, bytearray)):
        blob = bytes(source)
    else:
        with open(source, "rb") as fh:
            blob = fh.read()

    if len(blob) < len(CHECKPOINT_MAGIC) + 4 + 32:
        raise CheckpointError("checkpoint truncated")
    if blob[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"magic mismatch: {blob[:8]!r}")
    digest = hashlib.sha256(blob[:-32]).digest()
    if digest != blob[-32:]:
        raise CheckpointError("checksum mismatch: checkpoint corrupted or truncated")

    view = memoryview(blob)[:-32]
    offset = 8

    def take(n: int, what: str) -> bytes:
        nonlocal offset
        if offset + n > len(view):
            raise CheckpointError(f"checkpoint truncated reading {what}")
        chunk = bytes(view[offset:offset + n])
        offset += n
        return chunk

    version = int.from_bytes(take(4, "version"), "little")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"version mismatch: {version} (supported: {CHECKPOINT_VERSION})")
    config_len = int.from_bytes(take(4, "config length"), "little")
    config = ModelConfig.from_dict(json.loads(take(config_len, "config")))
    catalog_hash = take(32, "catalog hash")
    stats_len = int.from_bytes(take(4, "stats length"), "little")
    stats = FloatStats.from_json_dict(json.loads(take(stats_len, "float stats")))

    if catalog is not None and catalog.content_hash != catalog_hash:
        if not allow_hash_mismatch:
            raise CheckpointError(
                "hash mismatch: checkpoint was built against a different catalog")

    probe = SurrogateModel(config, init_seed=0)
    tensors = {}
    for name, live in probe.parameters().items():
        raw = take(live.size * 8, f"tensor {name}")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(live.shape).copy()
    if offset != len(view):
        raise CheckpointError(f"{len(view) - offset} unexpected trailing bytes")
    return SurrogateModel.from_parameters(config, stats, catalog_hash, tensors)
