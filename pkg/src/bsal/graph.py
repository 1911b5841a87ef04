"""Undirected graph core: CSR storage, file ingestion, edge splitting and
negative sampling shared by every other module.

Edge-list files are whitespace-separated 0-based id pairs with ``#``
comments; feature files are CSV with one row per node in id order.
``edge_count`` counts each undirected edge once (degree sums are twice
that).
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .seeding import derive_seed

DEFAULT_RATIOS = (0.85, 0.05, 0.10)

# Give up on rejection sampling after this many draws per requested pair
# and enumerate the complement instead (only dense graphs get there).
_REJECTION_DRAWS_PER_PAIR = 200


class Graph:
    """Immutable undirected graph in compressed sparse row form.

    ``offsets`` has length ``node_count + 1``; ``neighbors[offsets[u]:
    offsets[u + 1]]`` is the sorted, duplicate-free neighbor list of
    ``u``.  Self-loops are rejected at construction.
    """

    __slots__ = ("node_count", "offsets", "neighbors", "edge_count")

    def __init__(self, node_count: int, offsets: np.ndarray, neighbors: np.ndarray):
        self.node_count = int(node_count)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.neighbors = np.asarray(neighbors, dtype=np.int64)
        if self.neighbors.shape[0] % 2 != 0:
            raise ValidationError("adjacency is not symmetric (odd entry count)")
        self.edge_count = self.neighbors.shape[0] // 2

    @classmethod
    def from_edges(cls, edges: Sequence | np.ndarray, node_count: int | None = None) -> "Graph":
        """Build a graph from (u, v) pairs; symmetrizes, deduplicates and
        drops self-loops."""
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if arr.size and arr.min() < 0:
            raise ValidationError("negative node id in edge list")
        inferred = int(arr.max()) + 1 if arr.size else 0
        n = inferred if node_count is None else max(int(node_count), inferred)
        if arr.size:
            both = np.concatenate([arr, arr[:, ::-1]])
            both = both[both[:, 0] != both[:, 1]]
            keys = np.unique(both[:, 0] * n + both[:, 1])
            src = keys // n
            dst = keys % n
        else:
            src = dst = np.empty(0, dtype=np.int64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        return cls(n, offsets, dst)

    @property
    def degrees(self) -> np.ndarray:
        return self.offsets[1:] - self.offsets[:-1]

    def degree(self, u: int) -> int:
        self._check_node(u)
        return int(self.offsets[u + 1] - self.offsets[u])

    def neighbors_of(self, u: int) -> np.ndarray:
        """Sorted neighbor ids of ``u`` (a read-only view)."""
        self._check_node(u)
        return self.neighbors[self.offsets[u]:self.offsets[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors_of(u)
        self._check_node(v)
        i = np.searchsorted(nbrs, v)
        return i < nbrs.shape[0] and nbrs[i] == v

    def edges(self) -> np.ndarray:
        """All undirected edges as an (m, 2) array with u < v, sorted."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degrees)
        keep = src < self.neighbors
        return np.column_stack([src[keep], self.neighbors[keep]])

    def edge_keys(self) -> set[int]:
        """Edges encoded as ``u * n + v`` with u < v, for fast membership."""
        e = self.edges()
        return set((e[:, 0] * self.node_count + e[:, 1]).tolist())

    def to_csr_matrix(self):
        """Adjacency as a scipy CSR matrix of ones (float64)."""
        from scipy.sparse import csr_matrix

        data = np.ones(self.neighbors.shape[0], dtype=np.float64)
        return csr_matrix((data, self.neighbors, self.offsets),
                          shape=(self.node_count, self.node_count))

    def save_edge_list(self, dest: str | os.PathLike | IO[str]) -> None:
        """Write one ``u v`` line per undirected edge."""
        stream, close = _open_for_write(dest)
        try:
            for u, v in self.edges():
                stream.write(f"{u} {v}\n")
        finally:
            if close:
                stream.close()

    def validate(self) -> None:
        """Check the structural invariants; raises ValidationError."""
        n = self.node_count
        if self.offsets.shape[0] != n + 1 or self.offsets[0] != 0:
            raise ValidationError("bad offset array")
        if np.any(np.diff(self.offsets) < 0):
            raise ValidationError("offsets not monotone")
        if self.offsets[-1] != self.neighbors.shape[0]:
            raise ValidationError("offsets do not cover neighbor array")
        for u in range(n):
            nbrs = self.neighbors_of(u)
            if nbrs.size == 0:
                continue
            if nbrs.min() < 0 or nbrs.max() >= n:
                raise ValidationError(f"neighbor id out of range at node {u}")
            if np.any(np.diff(nbrs) <= 0):
                raise ValidationError(f"neighbor list of {u} not strictly ascending")
            if np.any(nbrs == u):
                raise ValidationError(f"self-loop at node {u}")
        for u in range(n):
            for v in self.neighbors_of(u):
                if not self.has_edge(int(v), u):
                    raise ValidationError(f"asymmetric edge {u}-{v}")
        if int(self.degrees.sum()) != 2 * self.edge_count:
            raise ValidationError("degree sum does not match edge count")

    def __eq__(self, other) -> bool:
        return (isinstance(other, Graph)
                and self.node_count == other.node_count
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.neighbors, other.neighbors))

    def __hash__(self):  # pragma: no cover - identity hashing is enough
        return id(self)

    def __repr__(self) -> str:
        return f"Graph(n={self.node_count}, m={self.edge_count})"

    def _check_node(self, u: int) -> None:
        if not 0 <= u < self.node_count:
            raise ValidationError(f"node id {u} out of range [0, {self.node_count})")


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense per-node attribute matrix; row i is node i's vector."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValidationError("feature matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ValidationError("feature matrix contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class EdgeSplit:
    """Train/validation/test positives with size-matched sampled negatives.

    ``observed_graph`` holds exactly the training positives; scorers and
    subgraph extraction must run on it so held-out edges never leak.
    """

    train_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    train_neg: np.ndarray
    val_neg: np.ndarray
    test_neg: np.ndarray
    observed_graph: Graph
    seed: int

    def positives(self, which: str) -> np.ndarray:
        return {"train": self.train_pos, "val": self.val_pos, "test": self.test_pos}[which]

    def negatives(self, which: str) -> np.ndarray:
        return {"train": self.train_neg, "val": self.val_neg, "test": self.test_neg}[which]

    @property
    def node_count(self) -> int:
        return self.observed_graph.node_count

    def save_manifest(self, dest: str | os.PathLike | IO[str]) -> None:
        """Persist the split as JSON for exact reproduction."""
        payload = {
            "node_count": self.node_count,
            "seed": self.seed,
            "train_pos": self.train_pos.tolist(),
            "val_pos": self.val_pos.tolist(),
            "test_pos": self.test_pos.tolist(),
            "train_neg": self.train_neg.tolist(),
            "val_neg": self.val_neg.tolist(),
            "test_neg": self.test_neg.tolist(),
        }
        stream, close = _open_for_write(dest)
        try:
            json.dump(payload, stream, sort_keys=True, indent=1)
            stream.write("\n")
        finally:
            if close:
                stream.close()

    @classmethod
    def load_manifest(cls, source: str | os.PathLike | IO[str]) -> "EdgeSplit":
        stream, close = _open_for_read(source)
        try:
            payload = json.load(stream)
        finally:
            if close:
                stream.close()
        try:
            arrays = {k: np.asarray(payload[k], dtype=np.int64).reshape(-1, 2)
                      for k in ("train_pos", "val_pos", "test_pos",
                                "train_neg", "val_neg", "test_neg")}
            node_count = int(payload["node_count"])
            seed = int(payload["seed"])
        except KeyError as exc:
            raise ValidationError(f"manifest missing key {exc}") from exc
        observed = Graph.from_edges(arrays["train_pos"], node_count=node_count)
        return cls(observed_graph=observed, seed=seed, **arrays)

    def full_graph(self) -> Graph:
        """The original graph (all positive splits recombined)."""
        all_pos = np.concatenate([self.train_pos, self.val_pos, self.test_pos])
        return Graph.from_edges(all_pos, node_count=self.node_count)


def load_edge_list(source: str | os.PathLike | IO[str],
                   node_count_hint: int | None = None) -> Graph:
    """Parse a whitespace-separated edge list into a Graph.

    Duplicates (including reversed duplicates) and self-loops are dropped;
    ``#`` starts a comment.  node_count is max id + 1, or the hint if
    larger.
    """
    stream, close = _open_for_read(source)
    pairs: list[tuple[int, int]] = []
    max_id = -1
    try:
        for lineno, raw in enumerate(stream, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ParseError(f"expected two node ids, got {len(parts)} fields", lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"non-integer node id in {parts!r}", lineno) from None
            if u < 0 or v < 0:
                raise ValidationError(f"line {lineno}: negative node id")
            pairs.append((u, v))
            max_id = max(max_id, u, v)
    finally:
        if close:
            stream.close()
    n = max_id + 1
    if node_count_hint is not None:
        n = max(n, int(node_count_hint))
    return Graph.from_edges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), node_count=n)


def load_features(source: str | os.PathLike | IO[str], graph: Graph) -> FeatureMatrix:
    """Parse a CSV feature file; row i belongs to node i of ``graph``."""
    stream, close = _open_for_read(source)
    rows: list[list[float]] = []
    width = None
    try:
        for lineno, raw in enumerate(stream, start=1):
            text = raw.strip()
            if not text:
                continue
            cells = text.split(",")
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise ParseError(f"expected {width} columns, got {len(cells)}", lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise ParseError(f"non-numeric cell in {text!r}", lineno) from None
    finally:
        if close:
            stream.close()
    if len(rows) != graph.node_count:
        raise ValidationError(
            f"feature rows ({len(rows)}) != graph node count ({graph.node_count})")
    return FeatureMatrix(np.asarray(rows, dtype=np.float64))


def sample_negatives(graph: Graph, count: int, seed: int,
                     exclude: Iterable[tuple[int, int]] = ()) -> np.ndarray:
    """Draw ``count`` distinct uniform non-edges, avoiding ``exclude``.

    Rejection sampling against the full graph; falls back to enumerating
    the complement when the graph is nearly complete (same distribution,
    still deterministic for a fixed seed).
    """
    n = graph.node_count
    if count < 0:
        raise ValidationError("negative sample count")
    excl_keys = set()
    for u, v in exclude:
        a, b = (u, v) if u < v else (v, u)
        if a != b:
            excl_keys.add(int(a) * n + int(b))
    total = n * (n - 1) // 2
    available = total - graph.edge_count - len(excl_keys)
    if count > available:
        raise ValidationError(
            f"requested {count} negatives but only {available} non-edges are available")
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    seen: set[int] = set()
    budget = max(100_000, _REJECTION_DRAWS_PER_PAIR * count)
    draws = 0
    while len(chosen) < count and draws < budget:
        chunk = min(4096, budget - draws)
        us = rng.integers(0, n, size=chunk)
        vs = rng.integers(0, n, size=chunk)
        draws += chunk
        for u, v in zip(us.tolist(), vs.tolist()):
            if u == v:
                continue
            a, b = (u, v) if u < v else (v, u)
            key = a * n + b
            if key in seen or key in excl_keys or graph.has_edge(a, b):
                continue
            seen.add(key)
            chosen.append(key)
            if len(chosen) == count:
                break
    if len(chosen) < count:
        # Dense graph: enumerate the remaining complement and draw without
        # replacement (uniform over subsets, like rejection sampling).
        remaining = [u * n + v
                     for u in range(n)
                     for v in _complement_after(graph, u)
                     if (u * n + v) not in seen and (u * n + v) not in excl_keys]
        take = count - len(chosen)
        idx = rng.choice(len(remaining), size=take, replace=False)
        chosen.extend(remaining[i] for i in sorted(idx.tolist()))
    keys = np.asarray(chosen, dtype=np.int64)
    return np.column_stack([keys // n, keys % n])


def _complement_after(graph: Graph, u: int) -> list[int]:
    """Nodes v > u with no edge u-v."""
    nbrs = set(graph.neighbors_of(u).tolist())
    return [v for v in range(u + 1, graph.node_count) if v not in nbrs]


def split_edges(graph: Graph, ratios: tuple[float, float, float] = DEFAULT_RATIOS,
                seed: int = 2) -> EdgeSplit:
    """Partition edges into train/val/test positives and sample matched
    negatives.

    Set sizes are round(m * ratio) for val and test with train taking the
    remainder; negatives are drawn once against the full graph so no
    held-out edge can appear as a negative, and the three negative sets
    are pairwise disjoint by construction.
    """
    tr, va, te = ratios
    if min(tr, va, te) <= 0:
        raise ValidationError("split ratios must be positive")
    if abs(tr + va + te - 1.0) > 1e-9:
        raise ValidationError("split ratios must sum to 1")
    m = graph.edge_count
    if m < 10:
        raise ValidationError(f"graph has only {m} edges; split would be degenerate")
    edges = graph.edges()
    rng = np.random.default_rng(derive_seed(seed, "split.order"))
    perm = rng.permutation(m)
    n_val = int(round(m * va))
    n_test = int(round(m * te))
    n_train = m - n_val - n_test
    if n_train <= 0:
        raise ValidationError("train ratio leaves no training edges")
    val_pos = edges[np.sort(perm[:n_val])]
    test_pos = edges[np.sort(perm[n_val:n_val + n_test])]
    train_pos = edges[np.sort(perm[n_val + n_test:])]
    negs = sample_negatives(graph, m, derive_seed(seed, "split.negatives"))
    return EdgeSplit(
        train_pos=train_pos,
        val_pos=val_pos,
        test_pos=test_pos,
        train_neg=negs[:n_train],
        val_neg=negs[n_train:n_train + n_val],
        test_neg=negs[n_train + n_val:],
        observed_graph=Graph.from_edges(train_pos, node_count=graph.node_count),
        seed=seed,
    )


def _open_for_read(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return source, False
    raise TypeError(f"cannot read from {type(source).__name__}")


def _open_for_write(dest) -> tuple[IO[str], bool]:
    if isinstance(dest, (str, os.PathLike)):
        return open(dest, "w", encoding="utf-8"), True
    if isinstance(dest, io.IOBase) or hasattr(dest, "write"):
        return dest, False
    raise TypeError(f"cannot write to {type(dest).__name__}")
