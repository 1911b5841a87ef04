"""The two-channel link predictor: a GCN stack over DRNL one-hot features
(topology channel) and a second GCN stack over semantic-embedding node
features (semantic channel), joined by shared-head attention fusion.

Batches pack many enclosing subgraphs into one block-diagonal system so a
minibatch is a single set of sparse/dense products.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import block_diag, csr_matrix

from ..errors import ParseError, ValidationError
from ..seeding import derive_seed
from ..subgraph import LABEL_CAP, EnclosingSubgraph, one_hot_labels
from . import autodiff as ad
from .layers import (FusionParams, GcnLayer, PairEmbedding, Readout,
                     attention_fuse, joint_loss, mean_pool_matrix,
                     normalized_adjacency)

_CKPT_MAGIC = b"BSALCKP1"
_CKPT_VERSION = 1

CHANNELS = ("fused", "topology", "semantic")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; widths follow the 32-wide default."""

    label_cap: int = LABEL_CAP
    semantic_dim: int = 128
    hidden: int = 32
    attn_hidden: int = 16
    gcn_layers: int = 3
    alpha: float = 1.0
    beta: float = 1.0

    @property
    def topo_in(self) -> int:
        return self.label_cap + 1


@dataclass
class PreparedExample:
    """Per-subgraph pieces precomputed once and reused every epoch."""

    norm_adj: csr_matrix
    x_topo: np.ndarray
    x_sem: np.ndarray
    size: int
    target_u: int
    target_v: int
    y: float


@dataclass
class Batch:
    norm_adj: csr_matrix
    x_topo: np.ndarray
    x_sem: np.ndarray
    mean_mat: csr_matrix
    rows_u: np.ndarray
    rows_v: np.ndarray
    y: np.ndarray  # (B, 1) float64


def prepare_example(sub: EnclosingSubgraph, semantic: np.ndarray, y: float,
                    label_cap: int = LABEL_CAP) -> PreparedExample:
    """Bind one labeled subgraph to its channel inputs."""
    if semantic.ndim != 2:
        raise ValidationError("semantic embedding matrix must be 2-D")
    if sub.nodes.max(initial=-1) >= semantic.shape[0]:
        raise ValidationError("subgraph references node beyond embedding rows")
    return PreparedExample(
        norm_adj=normalized_adjacency(sub.local_adjacency),
        x_topo=one_hot_labels(sub.labels, cap=label_cap),
        x_sem=semantic[sub.nodes],
        size=sub.size,
        target_u=sub.target_u,
        target_v=sub.target_v,
        y=float(y),
    )


def prepare_dataset(subgraphs, ys, semantic: np.ndarray,
                    label_cap: int = LABEL_CAP) -> list[PreparedExample]:
    if len(subgraphs) != len(ys):
        raise ValidationError("subgraph and label counts differ")
    return [prepare_example(s, semantic, y, label_cap) for s, y in zip(subgraphs, ys)]


def make_batch(examples: list[PreparedExample]) -> Batch:
    if not examples:
        raise ValidationError("empty batch")
    sizes = np.array([e.size for e in examples], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return Batch(
        norm_adj=block_diag([e.norm_adj for e in examples], format="csr"),
        x_topo=np.concatenate([e.x_topo for e in examples], axis=0),
        x_sem=np.concatenate([e.x_sem for e in examples], axis=0),
        mean_mat=mean_pool_matrix(sizes),
        rows_u=offsets[:-1] + np.array([e.target_u for e in examples], dtype=np.int64),
        rows_v=offsets[:-1] + np.array([e.target_v for e in examples], dtype=np.int64),
        y=np.array([[e.y] for e in examples], dtype=np.float64),
    )


class GnnChannel:
    """GCN stack plus readout mapping one subgraph batch to (B, hidden)."""

    def __init__(self, d_in: int, hidden: int, n_layers: int, rng: np.random.Generator):
        widths = [d_in] + [hidden] * n_layers
        self.layers = [GcnLayer(widths[i], widths[i + 1], rng) for i in range(n_layers)]
        self.readout = Readout(hidden, hidden, rng)

    def parameters(self) -> list[ad.Parameter]:
        out = []
        for layer in self.layers:
            out.extend(layer.parameters())
        out.extend(self.readout.parameters())
        return out

    def forward(self, norm_adj, x, mean_mat, rows_u, rows_v) -> ad.Tensor:
        h = ad.Tensor(x)
        for layer in self.layers:
            h = layer(norm_adj, h)
        return self.readout.batch(h, mean_mat, rows_u, rows_v)


class LinkPredictor:
    """Both channels plus fusion; scores pairs and computes the joint loss."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(derive_seed(seed, "model.init"))
        self.channel_t = GnnChannel(cfg.topo_in, cfg.hidden, cfg.gcn_layers, rng)
        self.channel_s = GnnChannel(cfg.semantic_dim, cfg.hidden, cfg.gcn_layers, rng)
        self.fusion = FusionParams(cfg.hidden, cfg.attn_hidden, rng,
                                   alpha=cfg.alpha, beta=cfg.beta)

    def named_parameters(self) -> list[tuple[str, ad.Parameter]]:
        out = []
        for cname, channel in (("topo", self.channel_t), ("sem", self.channel_s)):
            for i, layer in enumerate(channel.layers):
                out.append((f"{cname}.gcn{i}.weight", layer.weight))
                out.append((f"{cname}.gcn{i}.bias", layer.bias))
            out.append((f"{cname}.readout.weight", channel.readout.weight))
            out.append((f"{cname}.readout.bias", channel.readout.bias))
        f = self.fusion
        out.extend([("fusion.W", f.W), ("fusion.b", f.b), ("fusion.q", f.q),
                    ("fusion.head.weight", f.head_weight),
                    ("fusion.head.bias", f.head_bias)])
        return out

    def parameters(self) -> list[ad.Parameter]:
        return [p for _, p in self.named_parameters()]

    def forward(self, batch: Batch) -> PairEmbedding:
        z_t = self.channel_t.forward(batch.norm_adj, batch.x_topo, batch.mean_mat,
                                     batch.rows_u, batch.rows_v)
        z_s = self.channel_s.forward(batch.norm_adj, batch.x_sem, batch.mean_mat,
                                     batch.rows_u, batch.rows_v)
        return attention_fuse(self.fusion, z_t, z_s)

    def loss(self, batch: Batch) -> tuple[ad.Tensor, PairEmbedding]:
        pair = self.forward(batch)
        return joint_loss(pair, batch.y, self.fusion), pair

    def scores(self, examples: list[PreparedExample], channel: str = "fused",
               chunk: int = 256) -> np.ndarray:
        """Link probabilities sigma(head(z)) for the chosen channel."""
        if channel not in CHANNELS:
            raise ValidationError(f"unknown channel {channel!r}; expected {CHANNELS}")
        out = np.empty(len(examples), dtype=np.float64)
        for lo in range(0, len(examples), chunk):
            part = examples[lo:lo + chunk]
            pair = self.forward(make_batch(part))
            z = {"fused": pair.fused, "topology": pair.z_t, "semantic": pair.z_s}[channel]
            logits = self.fusion.head(z).data.ravel()
            out[lo:lo + len(part)] = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
        return out

    # -- checkpointing ---------------------------------------------------
    def save_checkpoint(self, path, extra_arrays: dict[str, np.ndarray] | None = None,
                        meta: dict | None = None) -> None:
        """Versioned binary checkpoint: header JSON (config + metadata),
        then named arrays as shape-prefixed little-endian float64."""
        arrays = [(name, p.data) for name, p in self.named_parameters()]
        for name in sorted(extra_arrays or {}):
            arrays.append((f"extra.{name}", np.asarray(extra_arrays[name], dtype=np.float64)))
        header = {
            "config": asdict(self.cfg),
            "meta": meta or {},
            "arrays": [name for name, _ in arrays],
        }
        blob = json.dumps(header, sort_keys=True).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(_CKPT_MAGIC)
            fh.write(struct.pack("<II", _CKPT_VERSION, len(blob)))
            fh.write(blob)
            for name, arr in arrays:
                nb = name.encode("utf-8")
                fh.write(struct.pack("<H", len(nb)))
                fh.write(nb)
                fh.write(struct.pack("<B", arr.ndim))
                fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load_checkpoint(cls, path) -> tuple["LinkPredictor", dict[str, np.ndarray], dict]:
        with open(path, "rb") as fh:
            if fh.read(8) != _CKPT_MAGIC:
                raise ParseError("bad checkpoint magic")
            version, blob_len = struct.unpack("<II", fh.read(8))
            if version != _CKPT_VERSION:
                raise ParseError(f"unsupported checkpoint version {version}")
            header = json.loads(fh.read(blob_len).decode("utf-8"))
            arrays: dict[str, np.ndarray] = {}
            for _ in header["arrays"]:
                (name_len,) = struct.unpack("<H", fh.read(2))
                name = fh.read(name_len).decode("utf-8")
                (ndim,) = struct.unpack("<B", fh.read(1))
                shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
                count = int(np.prod(shape)) if ndim else 1
                data = np.frombuffer(fh.read(count * 8), dtype="<f8")
                if data.size != count:
                    raise ParseError("checkpoint truncated")
                arrays[name] = data.reshape(shape).astype(np.float64)
        model = cls(ModelConfig(**header["config"]))
        for name, p in model.named_parameters():
            if name not in arrays:
                raise ParseError(f"checkpoint missing array {name!r}")
            if arrays[name].shape != p.data.shape:
                raise ParseError(f"checkpoint shape mismatch for {name!r}")
            p.data = arrays[name]
        extra = {name[len("extra."):]: arr for name, arr in arrays.items()
                 if name.startswith("extra.")}
        return model, extra, header["meta"]

    def state_arrays(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def load_state_arrays(self, arrays: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise ValidationError("state array count mismatch")
        for p, a in zip(params, arrays):
            if a.shape != p.data.shape:
                raise ValidationError("state array shape mismatch")
            p.data = a.copy()
