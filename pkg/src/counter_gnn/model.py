"""Graph classifier: gated residual message passing over player graphs.

Three convolution layers (each message is a sigmoid gate times a softplus
transform of the concatenated endpoint features and edge features, summed
into a residual update), global average pooling, one dense ReLU layer,
dropout, and a sigmoid head.  Forward and the exact reverse-mode gradient
are implemented directly on numpy arrays; batches of graphs are packed
into one block-diagonal graph for throughput.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import ChecksumError, DataError, FeatureWidthError, WeightFormatError
from .graphs import GraphSample

N_EDGE_FEATURES = 3
EPS_PROB = 1e-7

_MAGIC = b"CGNN"
_VERSION = 1


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return expit(x)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _scatter_add(out: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> None:
    """out[idx] += vals with repeated indices accumulated (rows of width F)."""
    n, width = out.shape
    flat = idx[:, None] * width + np.arange(width)
    out += np.bincount(flat.ravel(), weights=vals.ravel(), minlength=n * width).reshape(
        n, width
    )


@dataclass
class ModelParams:
    """All learnable weights; shapes are fixed by (F, S, H, n_layers)."""

    w_gate: list[np.ndarray]  # per layer: (2F+S, F)
    b_gate: list[np.ndarray]  # (F,)
    w_tran: list[np.ndarray]  # (2F+S, F)
    b_tran: list[np.ndarray]  # (F,)
    w_dense: np.ndarray  # (F, H)
    b_dense: np.ndarray  # (H,)
    w_out: np.ndarray  # (H,)
    b_out: np.ndarray  # (1,)

    @property
    def n_node_features(self) -> int:
        return self.w_dense.shape[0]

    @property
    def n_edge_features(self) -> int:
        return self.w_gate[0].shape[0] - 2 * self.n_node_features

    @property
    def dense_width(self) -> int:
        return self.w_dense.shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.w_gate)

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in canonical (serialization) order."""
        out: list[np.ndarray] = []
        for layer in range(self.n_layers):
            out.extend(
                [self.w_gate[layer], self.b_gate[layer], self.w_tran[layer], self.b_tran[layer]]
            )
        out.extend([self.w_dense, self.b_dense, self.w_out, self.b_out])
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            w_gate=[a.copy() for a in self.w_gate],
            b_gate=[a.copy() for a in self.b_gate],
            w_tran=[a.copy() for a in self.w_tran],
            b_tran=[a.copy() for a in self.b_tran],
            w_dense=self.w_dense.copy(),
            b_dense=self.b_dense.copy(),
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
        )

    def validate(self) -> None:
        for a in self.arrays():
            if not np.all(np.isfinite(a)):
                raise DataError("model parameters must be finite")

    @classmethod
    def init(
        cls,
        n_node_features: int,
        dense_width: int = 64,
        seed: int = 0,
        n_layers: int = 3,
        n_edge_features: int = N_EDGE_FEATURES,
    ) -> "ModelParams":
        rng = np.random.default_rng(seed)
        zdim = 2 * n_node_features + n_edge_features

        def normal(scale, shape):
            return rng.normal(0.0, scale, size=shape)

        # The residual sum aggregation grows node activations with depth, so
        # the output head starts near zero to keep initial probabilities close
        # to 0.5 (saturated initial logits would stall optimisation inside the
        # probability clamp).
        conv_scale = 0.2
        return cls(
            w_gate=[normal(conv_scale, (zdim, n_node_features)) for _ in range(n_layers)],
            b_gate=[np.zeros(n_node_features) for _ in range(n_layers)],
            w_tran=[normal(conv_scale, (zdim, n_node_features)) for _ in range(n_layers)],
            b_tran=[np.zeros(n_node_features) for _ in range(n_layers)],
            w_dense=normal(np.sqrt(2.0 / (n_node_features + dense_width)), (n_node_features, dense_width)),
            b_dense=np.zeros(dense_width),
            w_out=normal(0.01 * np.sqrt(2.0 / dense_width), (dense_width,)),
            b_out=np.zeros(1),
        )

    def zeros_like(self) -> "ModelParams":
        out = self.copy()
        for a in out.arrays():
            a.fill(0.0)
        return out


@dataclass
class PackedBatch:
    """Several graphs packed into one block-diagonal graph."""

    nodes: np.ndarray  # (N_total, F)
    edge_index: np.ndarray  # (M_total, 2) with node offsets applied
    edge_attr: np.ndarray  # (M_total, 3)
    graph_of_node: np.ndarray  # (N_total,)
    node_counts: np.ndarray  # (B,)
    labels: np.ndarray  # (B,)
    n_graphs: int


def pack(samples: list[GraphSample]) -> PackedBatch:
    if not samples:
        raise DataError("cannot pack an empty batch")
    nodes = np.concatenate([s.nodes for s in samples], axis=0)
    counts = np.array([s.n_nodes for s in samples], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    edges = []
    attrs = []
    for s, off in zip(samples, offsets):
        if s.edge_index.size:
            edges.append(s.edge_index + off)
            attrs.append(s.edge_attr)
    edge_index = (
        np.concatenate(edges, axis=0) if edges else np.zeros((0, 2), dtype=np.int64)
    )
    edge_attr = (
        np.concatenate(attrs, axis=0) if attrs else np.zeros((0, N_EDGE_FEATURES))
    )
    graph_of_node = np.repeat(np.arange(len(samples)), counts)
    labels = np.array([s.label for s in samples], dtype=np.float64)
    return PackedBatch(
        nodes=nodes,
        edge_index=edge_index,
        edge_attr=edge_attr,
        graph_of_node=graph_of_node,
        node_counts=counts,
        labels=labels,
        n_graphs=len(samples),
    )


def crystal_conv(
    w_gate: np.ndarray,
    b_gate: np.ndarray,
    w_tran: np.ndarray,
    b_tran: np.ndarray,
    nodes: np.ndarray,
    edge_index: np.ndarray,
    edge_attr: np.ndarray,
) -> np.ndarray:
    """One residual gated message-passing layer (width preserving)."""
    x, _ = _conv_forward(w_gate, b_gate, w_tran, b_tran, nodes, edge_index, edge_attr)
    return x


def _conv_forward(w_gate, b_gate, w_tran, b_tran, x, edge_index, edge_attr):
    if edge_index.shape[0] == 0:
        return x.copy(), (x, None, None, None, None)
    ei = edge_index[:, 0]
    ej = edge_index[:, 1]
    z = np.concatenate([x[ei], x[ej], edge_attr], axis=1)
    gate = _sigmoid(z @ w_gate + b_gate)
    pre_t = z @ w_tran + b_tran
    tran = _softplus(pre_t)
    out = x.copy()
    _scatter_add(out, ei, gate * tran)
    return out, (x, z, gate, tran, _sigmoid(pre_t))


def forward(
    params: ModelParams,
    batch: PackedBatch,
    dropout_mask: np.ndarray | None = None,
):
    """Forward pass over a packed batch.

    dropout_mask, when given, is a (B, H) matrix already scaled by
    1/(1-rate) on retained units; None means dropout inactive.

    Returns (probabilities (B,), cache for backward).
    """
    F = params.n_node_features
    if batch.nodes.shape[1] != F:
        raise FeatureWidthError(F, batch.nodes.shape[1])
    x = batch.nodes
    conv_caches = []
    for layer in range(params.n_layers):
        x, cache = _conv_forward(
            params.w_gate[layer],
            params.b_gate[layer],
            params.w_tran[layer],
            params.b_tran[layer],
            x,
            batch.edge_index,
            batch.edge_attr,
        )
        conv_caches.append(cache)

    pool = np.zeros((batch.n_graphs, F))
    _scatter_add(pool, batch.graph_of_node, x)
    pool /= batch.node_counts[:, None]

    pre = pool @ params.w_dense + params.b_dense
    relu = np.maximum(pre, 0.0)
    hidden = relu if dropout_mask is None else relu * dropout_mask
    logit = hidden @ params.w_out + params.b_out[0]
    prob = _sigmoid(logit)
    cache = (conv_caches, pool, pre, relu, hidden, dropout_mask)
    return prob, cache


def backward(
    params: ModelParams,
    batch: PackedBatch,
    cache,
    d_logit: np.ndarray,
) -> ModelParams:
    """Exact reverse-mode gradient; d_logit is dLoss/dlogit per graph."""
    conv_caches, pool, pre, relu, hidden, dropout_mask = cache
    grads = params.zeros_like()
    F = params.n_node_features

    grads.w_out[:] = hidden.T @ d_logit
    grads.b_out[0] = d_logit.sum()
    d_hidden = np.outer(d_logit, params.w_out)
    d_relu = d_hidden if dropout_mask is None else d_hidden * dropout_mask
    d_pre = d_relu * (pre > 0.0)
    grads.w_dense[:] = pool.T @ d_pre
    grads.b_dense[:] = d_pre.sum(axis=0)
    d_pool = d_pre @ params.w_dense.T

    d_x = d_pool[batch.graph_of_node] / batch.node_counts[batch.graph_of_node, None]
    ei = batch.edge_index[:, 0] if batch.edge_index.size else None
    ej = batch.edge_index[:, 1] if batch.edge_index.size else None
    for layer in reversed(range(params.n_layers)):
        x_in, z, gate, tran, sig_t = conv_caches[layer]
        if z is None:
            continue  # identity layer, gradient passes through unchanged
        d_msg = d_x[ei]
        d_gate = d_msg * tran
        d_tran = d_msg * gate
        d_a = d_gate * gate * (1.0 - gate)
        d_b = d_tran * sig_t
        grads.w_gate[layer][:] = z.T @ d_a
        grads.b_gate[layer][:] = d_a.sum(axis=0)
        grads.w_tran[layer][:] = z.T @ d_b
        grads.b_tran[layer][:] = d_b.sum(axis=0)
        d_z = d_a @ params.w_gate[layer].T + d_b @ params.w_tran[layer].T
        d_x_new = d_x.copy()
        _scatter_add(d_x_new, ei, d_z[:, :F])
        _scatter_add(d_x_new, ej, d_z[:, F : 2 * F])
        d_x = d_x_new
    return grads


def loss(p: float, y: int) -> float:
    """Binary cross-entropy with probability clamped to [1e-7, 1-1e-7]."""
    pc = min(max(p, EPS_PROB), 1.0 - EPS_PROB)
    return -(y * np.log(pc) + (1 - y) * np.log(1.0 - pc))


def batch_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    pc = np.clip(probs, EPS_PROB, 1.0 - EPS_PROB)
    return float(np.mean(-(labels * np.log(pc) + (1 - labels) * np.log(1.0 - pc))))


def gradient(
    params: ModelParams,
    samples: list[GraphSample],
    *,
    dropout_rate: float = 0.0,
    seed: int = 0,
    dropout_mask: np.ndarray | None = None,
) -> tuple[ModelParams, float]:
    """Gradient of the mean loss over a batch w.r.t. every parameter.

    The dropout mask is fixed by the seed within the call, so repeated
    calls with the same arguments produce identical gradients.
    """
    if not samples:
        raise DataError("gradient requires a non-empty batch")
    batch = pack(samples)
    if dropout_mask is None and dropout_rate > 0.0:
        rng = np.random.default_rng(seed)
        keep = rng.random((batch.n_graphs, params.dense_width)) >= dropout_rate
        dropout_mask = keep / (1.0 - dropout_rate)
    probs, cache = forward(params, batch, dropout_mask)
    mean_loss = batch_loss(probs, batch.labels)
    # dL/dlogit = p - y inside the clamp; zero where the clamp is active
    inside = (probs > EPS_PROB) & (probs < 1.0 - EPS_PROB)
    d_logit = np.where(inside, probs - batch.labels, 0.0) / batch.n_graphs
    grads = backward(params, batch, cache, d_logit)
    return grads, mean_loss


def predict(params: ModelParams, sample: GraphSample) -> float:
    """Deterministic probability for one graph (dropout inactive)."""
    probs, _ = forward(params, pack([sample]))
    return float(probs[0])


def predict_many(
    params: ModelParams, samples: list[GraphSample], batch_size: int = 512
) -> np.ndarray:
    out = np.empty(len(samples))
    for i in range(0, len(samples), batch_size):
        chunk = samples[i : i + batch_size]
        probs, _ = forward(params, pack(chunk))
        out[i : i + len(chunk)] = probs
    return out


def save_params(params: ModelParams, path: str | Path) -> None:
    """Versioned little-endian weight file with a trailing CRC-32."""
    params.validate()
    header = _MAGIC + struct.pack(
        "<5I",
        _VERSION,
        params.n_node_features,
        params.n_edge_features,
        params.dense_width,
        params.n_layers,
    )
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in params.arrays())
    body = header + payload
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body + struct.pack("<I", crc))


def load_params(path: str | Path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 28 or blob[:4] != _MAGIC:
        raise WeightFormatError(f"{path}: not a CGNN weight file")
    version, F, S, H, n_layers = struct.unpack("<5I", blob[4:24])
    if version != _VERSION:
        raise WeightFormatError(f"{path}: unsupported format version {version}")
    body, tail = blob[:-4], blob[-4:]
    if struct.unpack("<I", tail)[0] != (zlib.crc32(body) & 0xFFFFFFFF):
        raise ChecksumError(f"{path}: CRC mismatch (file truncated or corrupted)")
    zdim = 2 * F + S
    shapes: list[tuple[int, ...]] = []
    for _ in range(n_layers):
        shapes.extend([(zdim, F), (F,), (zdim, F), (F,)])
    shapes.extend([(F, H), (H,), (H,), (1,)])
    expected = sum(int(np.prod(s)) for s in shapes) * 8
    data = body[24:]
    if len(data) != expected:
        raise WeightFormatError(
            f"{path}: payload size {len(data)} does not match header shapes ({expected})"
        )
    arrays = []
    off = 0
    for shape in shapes:
        n = int(np.prod(shape)) * 8
        arrays.append(np.frombuffer(data[off : off + n], dtype="<f8").reshape(shape).copy())
        off += n
    w_gate, b_gate, w_tran, b_tran = [], [], [], []
    for layer in range(n_layers):
        w_gate.append(arrays[4 * layer])
        b_gate.append(arrays[4 * layer + 1])
        w_tran.append(arrays[4 * layer + 2])
        b_tran.append(arrays[4 * layer + 3])
    return ModelParams(
        w_gate=w_gate,
        b_gate=b_gate,
        w_tran=w_tran,
        b_tran=b_tran,
        w_dense=arrays[-4],
        b_dense=arrays[-3],
        w_out=arrays[-2],
        b_out=arrays[-1],
    )
