"""Learnable building blocks: graph-convolution layers, the mean+targets
readout, shared-head attention fusion of the two channel embeddings, and
the three-term joint loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from ..errors import ValidationError
from ..graph import Graph
from . import autodiff as ad
from .autodiff import Parameter, Tensor, as_tensor

PROB_CLAMP = 1e-12


def glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def normalized_adjacency(graph: Graph) -> csr_matrix:
    """Symmetric normalization with self-loops: D^-1/2 (A + I) D^-1/2."""
    n = graph.node_count
    deg = graph.degrees + 1
    dinv = 1.0 / np.sqrt(deg.astype(np.float64))
    rows = np.concatenate(
        [np.repeat(np.arange(n, dtype=np.int64), graph.degrees), np.arange(n, dtype=np.int64)])
    cols = np.concatenate([graph.neighbors, np.arange(n, dtype=np.int64)])
    data = dinv[rows] * dinv[cols]
    return csr_matrix((data, (rows, cols)), shape=(n, n))


class GcnLayer:
    """One graph-convolution layer: ReLU(norm_adj @ H @ W + b)."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.weight = Parameter(glorot(rng, (d_in, d_out)))
        self.bias = Parameter(np.zeros(d_out))

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def __call__(self, norm_adj, H):
        return gcn_forward(self, norm_adj, H)


def gcn_forward(layer: GcnLayer, norm_adj, H) -> Tensor:
    H = as_tensor(H)
    if H.data.ndim != 2 or H.data.shape[1] != layer.weight.data.shape[0]:
        raise ValidationError(
            f"input width {H.data.shape} does not match layer d_in "
            f"{layer.weight.data.shape[0]}")
    return ad.relu(ad.add(ad.matmul(ad.spmm(norm_adj, H), layer.weight), layer.bias))


def mean_pool_matrix(sizes) -> csr_matrix:
    """(num_graphs x total_nodes) averaging operator for stacked node
    states: row g holds 1/n_g over graph g's node block."""
    sizes = np.asarray(sizes, dtype=np.int64)
    total = int(sizes.sum())
    rows = np.repeat(np.arange(sizes.shape[0], dtype=np.int64), sizes)
    cols = np.arange(total, dtype=np.int64)
    data = np.repeat(1.0 / sizes.astype(np.float64), sizes)
    return csr_matrix((data, (rows, cols)), shape=(sizes.shape[0], total))


class Readout:
    """Pair embedding from node states: linear([mean; H[u]; H[v]])."""

    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator):
        self.weight = Parameter(glorot(rng, (3 * d_in, d_out)))
        self.bias = Parameter(np.zeros(d_out))

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def batch(self, H, mean_mat, rows_u, rows_v) -> Tensor:
        pooled = ad.spmm(mean_mat, H)
        hu = ad.gather_rows(H, rows_u)
        hv = ad.gather_rows(H, rows_v)
        stacked = ad.concat([pooled, hu, hv], axis=1)
        return ad.add(ad.matmul(stacked, self.weight), self.bias)

    def single(self, H, targets: tuple[int, int]) -> Tensor:
        H = as_tensor(H)
        n = H.data.shape[0]
        if n < 2:
            raise ValidationError("readout needs at least two node rows")
        u, v = targets
        return self.batch(H, mean_pool_matrix([n]), np.array([u]), np.array([v]))


def readout(layer: Readout, H, targets: tuple[int, int]) -> Tensor:
    return layer.single(H, targets)


@dataclass
class PairEmbedding:
    """Channel embeddings for a pair batch plus their fused combination.

    ``weights`` rows are the two softmax attention coefficients; they sum
    to 1 and live in [0, 1].
    """

    z_t: Tensor
    z_s: Tensor
    fused: Tensor
    weights: Tensor


class FusionParams:
    """Shared attention head over the two channels plus the classifier.

    W (attn_hidden x h), b and q implement q . tanh(W z + b); the scalar
    classifier head is shared by both channel embeddings and the fused
    one, which keeps the three loss terms in a single embedding space.
    """

    def __init__(self, h: int, attn_hidden: int, rng: np.random.Generator,
                 alpha: float = 1.0, beta: float = 1.0):
        if alpha < 0 or beta < 0:
            raise ValidationError("loss weights must be non-negative")
        self.W = Parameter(glorot(rng, (attn_hidden, h)))
        self.b = Parameter(np.zeros(attn_hidden))
        self.q = Parameter(glorot(rng, (attn_hidden, 1)))
        self.head_weight = Parameter(glorot(rng, (h, 1)))
        self.head_bias = Parameter(np.zeros(1))
        self.alpha_loss = float(alpha)
        self.beta_loss = float(beta)

    def parameters(self) -> list[Parameter]:
        return [self.W, self.b, self.q, self.head_weight, self.head_bias]

    def head(self, z) -> Tensor:
        return ad.add(ad.matmul(as_tensor(z), self.head_weight), self.head_bias)


def attention_fuse(params: FusionParams, z_t, z_s) -> PairEmbedding:
    """Shared-attention softmax combination of the channel embeddings.

    Each channel score is q . tanh(W z + b) with the same (W, b, q); the
    two scores pass through a softmax and weight a convex combination.
    Accepts single vectors or (batch, h) matrices.
    """
    z_t, z_s = as_tensor(z_t), as_tensor(z_s)
    if z_t.data.shape != z_s.data.shape:
        raise ValidationError("channel embeddings must share a shape")
    if z_t.data.ndim == 1:
        z_t = ad.reshape(z_t, (1, -1))
        z_s = ad.reshape(z_s, (1, -1))
    if z_t.data.shape[-1] != params.W.data.shape[1]:
        raise ValidationError("embedding width does not match attention W")
    wt = ad.transpose(params.W)
    score_t = ad.matmul(ad.tanh(ad.add(ad.matmul(z_t, wt), params.b)), params.q)
    score_s = ad.matmul(ad.tanh(ad.add(ad.matmul(z_s, wt), params.b)), params.q)
    weights = ad.softmax(ad.concat([score_t, score_s], axis=1), axis=1)
    a_t = ad.slice_cols(weights, 0, 1)
    a_s = ad.slice_cols(weights, 1, 2)
    fused = ad.add(ad.mul(a_t, z_t), ad.mul(a_s, z_s))
    return PairEmbedding(z_t=z_t, z_s=z_s, fused=fused, weights=weights)


def bce_with_logits(logits: Tensor, y: np.ndarray) -> Tensor:
    """Elementwise BCE on sigmoid(logits), probabilities clamped away from
    0 and 1 so saturated logits stay finite."""
    p = ad.clip(ad.sigmoid(logits), PROB_CLAMP, 1.0 - PROB_CLAMP)
    pos = ad.mul(Tensor(y), ad.log(p))
    neg = ad.mul(Tensor(1.0 - y), ad.log(ad.sub(1.0, p)))
    return ad.mul(ad.add(pos, neg), -1.0)


def joint_loss(pair: PairEmbedding, y, params: FusionParams) -> Tensor:
    """alpha * BCE(topology) + beta * BCE(semantic) + BCE(fused), averaged
    over the batch (a single pair gives the plain three-term sum)."""
    arr = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise ValidationError("labels must be 0 or 1")
    if arr.shape[0] != pair.z_t.data.shape[0]:
        raise ValidationError("label count does not match batch size")
    loss_t = bce_with_logits(params.head(pair.z_t), arr)
    loss_s = bce_with_logits(params.head(pair.z_s), arr)
    loss_f = bce_with_logits(params.head(pair.fused), arr)
    per_example = ad.add(
        ad.add(ad.mul(loss_t, params.alpha_loss), ad.mul(loss_s, params.beta_loss)),
        loss_f)
    return ad.tmean(per_example)
