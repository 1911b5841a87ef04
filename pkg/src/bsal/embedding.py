"""node2vec: biased second-order random walks plus skip-gram with negative
sampling.  Serves both as a stand-alone baseline (inner-product link
scoring) and as the encoder that turns the semantic kNN graph into the
per-node embedding matrix consumed by the semantic channel.

The SGD inner loops are JIT-compiled; the default single-threaded path is
bit-reproducible for a fixed seed.  A hogwild-style parallel path exists
behind ``SkipGramConfig.parallel`` and is *not* deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np
from numba import njit, prange

from .errors import ParseError, ValidationError
from .graph import Graph
from .seeding import derive_seed

_MASK64 = (1 << 64) - 1

# splitmix64 / xorshift64* constants (module-level so the JIT sees true uint64)
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_C1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_C2 = np.uint64(0x94D049BB133111EB)
_XS_MULT = np.uint64(0x2545F4914F6CDD1D)
_U53 = np.float64(1.0 / 9007199254740992.0)  # 2^-53

_EMB_MAGIC = b"BSALEMB1"


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.walks_per_node < 1:
            raise ValidationError("walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValidationError("walk_length must be >= 2")
        if self.p <= 0 or self.q <= 0:
            raise ValidationError("p and q must be positive")


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 128
    window: int = 5
    negatives_per_positive: int = 5
    learning_rate: float = 0.025
    epochs: int = 5
    seed: int = 0
    parallel: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")
        if self.window < 1:
            raise ValidationError("window must be >= 1")
        if self.negatives_per_positive < 0:
            raise ValidationError("negatives_per_positive must be >= 0")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense per-node embedding matrix; row i belongs to node i."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ValidationError("embedding matrix contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def save(self, path) -> None:
        """Binary layout: 8-byte magic, rows and dim as little-endian
        uint64, then row-major float64 data."""
        with open(path, "wb") as fh:
            fh.write(_EMB_MAGIC)
            fh.write(struct.pack("<QQ", self.rows, self.dim))
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "EmbeddingMatrix":
        with open(path, "rb") as fh:
            magic = fh.read(8)
            if magic != _EMB_MAGIC:
                raise ParseError(f"bad embedding file magic {magic!r}")
            rows, dim = struct.unpack("<QQ", fh.read(16))
            data = np.frombuffer(fh.read(rows * dim * 8), dtype="<f8")
            if data.size != rows * dim:
                raise ParseError("embedding file truncated")
        return cls(data.reshape(rows, dim).astype(np.float64))

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class Walks:
    """Walk corpus as a flat token array with per-walk offsets."""

    tokens: np.ndarray
    offsets: np.ndarray

    def __len__(self) -> int:
        return self.offsets.shape[0] - 1

    def walk(self, i: int) -> np.ndarray:
        return self.tokens[self.offsets[i]:self.offsets[i + 1]]

    def __iter__(self):
        for i in range(len(self)):
            yield self.walk(i)


def _splitmix_py(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@njit(cache=True, inline="always")
def _next_u64(state):
    state ^= state >> np.uint64(12)
    state ^= (state << np.uint64(25)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    state ^= state >> np.uint64(27)
    return state, (state * _XS_MULT) & np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _u01(r):
    return np.float64(r >> np.uint64(11)) * _U53


@njit(cache=True, inline="always")
def _csr_has(offsets, neighbors, u, x):
    lo = offsets[u]
    hi = offsets[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        val = neighbors[mid]
        if val == x:
            return True
        if val < x:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True)
def _walk_kernel(offsets, neighbors, starts, seeds, walk_length, p, q, out):
    unbiased = p == 1.0 and q == 1.0
    inv_p = 1.0 / p
    inv_q = 1.0 / q
    for w in range(starts.shape[0]):
        state = seeds[w]
        cur = starts[w]
        prev = np.int64(-1)
        out[w, 0] = cur
        for step in range(1, walk_length):
            beg = offsets[cur]
            deg = offsets[cur + 1] - beg
            if deg == 0:
                break
            if unbiased or prev < 0:
                state, r = _next_u64(state)
                nxt = neighbors[beg + np.int64(r % np.uint64(deg))]
            else:
                total = 0.0
                for t in range(deg):
                    x = neighbors[beg + t]
                    if x == prev:
                        total += inv_p
                    elif _csr_has(offsets, neighbors, prev, x):
                        total += 1.0
                    else:
                        total += inv_q
                state, r = _next_u64(state)
                target = _u01(r) * total
                acc = 0.0
                nxt = neighbors[beg + deg - 1]
                for t in range(deg):
                    x = neighbors[beg + t]
                    if x == prev:
                        acc += inv_p
                    elif _csr_has(offsets, neighbors, prev, x):
                        acc += 1.0
                    else:
                        acc += inv_q
                    if acc >= target:
                        nxt = x
                        break
            out[w, step] = nxt
            prev = cur
            cur = nxt


def generate_walks(graph: Graph, cfg: WalkConfig) -> Walks:
    """Run ``walks_per_node`` biased walks from every non-isolated node.

    From the second step on, the unnormalized transition weight is 1/p
    back to the previous node, 1 to a common neighbor of the previous
    node, and 1/q otherwise.  Each walk has its own RNG stream derived
    from (seed, start node, repeat index), so output is independent of
    scheduling.
    """
    if graph.node_count == 0:
        raise ValidationError("graph is empty")
    active = np.flatnonzero(graph.degrees > 0).astype(np.int64)
    if active.size == 0:
        return Walks(tokens=np.empty(0, dtype=np.int64),
                     offsets=np.zeros(1, dtype=np.int64))
    starts = np.repeat(active, cfg.walks_per_node)
    base = _splitmix_py(cfg.seed & _MASK64)
    seeds = np.empty(starts.shape[0], dtype=np.uint64)
    g = 0
    for node in active.tolist():
        mixed = _splitmix_py(base ^ ((node + 1) * 0x9E3779B97F4A7C15 & _MASK64))
        for t in range(cfg.walks_per_node):
            s = _splitmix_py(mixed + t)
            seeds[g] = s if s != 0 else 0x0123456789ABCDEF
            g += 1
    out = np.full((starts.shape[0], cfg.walk_length), -1, dtype=np.int64)
    _walk_kernel(graph.offsets, graph.neighbors, starts, seeds,
                 cfg.walk_length, float(cfg.p), float(cfg.q), out)
    lengths = np.sum(out >= 0, axis=1).astype(np.int64)
    offsets = np.zeros(starts.shape[0] + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    tokens = out[out >= 0]
    return Walks(tokens=tokens, offsets=offsets)


def _alias_table(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table; zero-probability entries are never sampled."""
    n = probs.shape[0]
    prob = np.zeros(n, dtype=np.float64)
    alias = np.zeros(n, dtype=np.int64)
    scaled = probs * n
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    scaled = scaled.copy()
    while small and large:
        s = small.pop()
        l = large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] - (1.0 - scaled[s])
        if scaled[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in large:
        prob[i] = 1.0
    for i in small:
        prob[i] = 1.0
    return prob, alias


@njit(cache=True, inline="always")
def _sigmoid(f):
    if f > 30.0:
        return 1.0
    if f < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-f))


@njit(cache=True)
def _sgns_walk(tokens, beg, end, emb_in, emb_out, alias_prob, alias_idx,
               window, negatives, lr0, lr_min, progress0, total, state, neu):
    """One walk's worth of skip-gram updates; returns the RNG state."""
    dim = emb_in.shape[1]
    n_table = alias_prob.shape[0]
    for i in range(beg, end):
        c = tokens[i]
        lr = lr0 * (1.0 - (progress0 + (i - beg)) / total)
        if lr < lr_min:
            lr = lr_min
        state, r = _next_u64(state)
        span = 1 + np.int64(r % np.uint64(window))
        j0 = i - span if i - span >= beg else beg
        j1 = i + span if i + span <= end - 1 else end - 1
        for j in range(j0, j1 + 1):
            if j == i:
                continue
            w = tokens[j]
            for d in range(dim):
                neu[d] = 0.0
            for s in range(negatives + 1):
                if s == 0:
                    target = w
                    label = 1.0
                else:
                    state, r1 = _next_u64(state)
                    state, r2 = _next_u64(state)
                    cell = np.int64(r1 % np.uint64(n_table))
                    target = cell if _u01(r2) < alias_prob[cell] else alias_idx[cell]
                    if target == w:
                        continue
                    label = 0.0
                f = 0.0
                for d in range(dim):
                    f += emb_in[c, d] * emb_out[target, d]
                g = (label - _sigmoid(f)) * lr
                for d in range(dim):
                    neu[d] += g * emb_out[target, d]
                    emb_out[target, d] += g * emb_in[c, d]
            for d in range(dim):
                emb_in[c, d] += neu[d]
    return state


@njit(cache=True)
def _sgns_kernel(tokens, offsets, emb_in, emb_out, alias_prob, alias_idx,
                 window, negatives, lr0, lr_min, epochs, seed):
    n_tokens = tokens.shape[0]
    total = np.float64(epochs) * n_tokens + 1.0
    neu = np.empty(emb_in.shape[1], dtype=np.float64)
    state = seed
    for epoch in range(epochs):
        for wk in range(offsets.shape[0] - 1):
            beg = offsets[wk]
            end = offsets[wk + 1]
            progress0 = np.float64(epoch) * n_tokens + beg
            state = _sgns_walk(tokens, beg, end, emb_in, emb_out, alias_prob,
                               alias_idx, window, negatives, lr0, lr_min,
                               progress0, total, state, neu)


@njit(cache=True, parallel=True)
def _sgns_kernel_parallel(tokens, offsets, emb_in, emb_out, alias_prob, alias_idx,
                          window, negatives, lr0, lr_min, epochs, seed):
    # Hogwild-style: concurrent unsynchronized updates; not reproducible.
    n_tokens = tokens.shape[0]
    n_walks = offsets.shape[0] - 1
    total = np.float64(epochs) * n_tokens + 1.0
    for epoch in range(epochs):
        for wk in prange(n_walks):
            beg = offsets[wk]
            end = offsets[wk + 1]
            neu = np.empty(emb_in.shape[1], dtype=np.float64)
            state = (seed ^ np.uint64(wk * 0x9E3779B9 + epoch * 0x85EBCA6B)) | np.uint64(1)
            progress0 = np.float64(epoch) * n_tokens + beg
            _sgns_walk(tokens, beg, end, emb_in, emb_out, alias_prob,
                       alias_idx, window, negatives, lr0, lr_min,
                       progress0, total, state, neu)


def _init_embeddings(node_count: int, cfg: SkipGramConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(derive_seed(cfg.seed, "skipgram.init"))
    emb_in = (rng.random((node_count, cfg.dim)) - 0.5) / cfg.dim
    emb_out = np.zeros((node_count, cfg.dim), dtype=np.float64)
    return emb_in, emb_out


def _train_arrays(corpus: Walks, node_count: int,
                  cfg: SkipGramConfig) -> tuple[np.ndarray, np.ndarray]:
    tokens = corpus.tokens
    if tokens.size == 0:
        raise ValidationError("walk corpus is empty")
    if int(tokens.min()) < 0 or int(tokens.max()) >= node_count:
        raise ValidationError(
            f"corpus token out of range [0, {node_count})")
    emb_in, emb_out = _init_embeddings(node_count, cfg)
    if cfg.epochs == 0:
        return emb_in, emb_out
    freq = np.bincount(tokens, minlength=node_count).astype(np.float64)
    noise = freq ** 0.75
    noise /= noise.sum()
    alias_prob, alias_idx = _alias_table(noise)
    seed = np.uint64(_splitmix_py(derive_seed(cfg.seed, "skipgram.sgd")) | 1)
    kernel = _sgns_kernel_parallel if cfg.parallel else _sgns_kernel
    kernel(tokens, corpus.offsets, emb_in, emb_out, alias_prob, alias_idx,
           cfg.window, cfg.negatives_per_positive, cfg.learning_rate,
           cfg.learning_rate * 1e-4, cfg.epochs, seed)
    return emb_in, emb_out


def train_skipgram(corpus: Walks, node_count: int, cfg: SkipGramConfig) -> EmbeddingMatrix:
    """SGD on the negative-sampling objective over the walk corpus.

    For each center/context pair within the (randomly shrunk) window, the
    update ascends log sigma(z_c . z'_w) + sum_neg log sigma(-z_c . z'_n)
    with negatives drawn proportional to corpus frequency^0.75.  Returns
    the center vectors.
    """
    emb_in, _ = _train_arrays(corpus, node_count, cfg)
    return EmbeddingMatrix(emb_in)


def node2vec(graph: Graph, walk_cfg: WalkConfig, sg_cfg: SkipGramConfig) -> EmbeddingMatrix:
    """generate_walks followed by train_skipgram; an edgeless graph yields
    the untouched random initialization."""
    corpus = generate_walks(graph, walk_cfg)
    if corpus.tokens.size == 0:
        emb_in, _ = _init_embeddings(graph.node_count, sg_cfg)
        return EmbeddingMatrix(emb_in)
    return train_skipgram(corpus, graph.node_count, sg_cfg)


def inner_product_scores(embedding: EmbeddingMatrix, pairs) -> np.ndarray:
    """Link scores as z_u . z_v, the usual embedding-baseline decoder."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= embedding.rows):
        raise ValidationError("pair id out of embedding range")
    Z = embedding.values
    return np.einsum("ij,ij->i", Z[arr[:, 0]], Z[arr[:, 1]])
