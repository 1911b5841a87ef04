"""Enclosing-subgraph extraction around target pairs with distance-based
node labels (the topology channel's raw input).

A subgraph covers every node within ``hop`` hops of either endpoint in
the observed graph; the target edge itself is always removed so the label
being predicted cannot leak into the structure.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import ValidationError
from .graph import Graph, _open_for_read, _open_for_write
from .seeding import derive_seed

DEFAULT_HOP = 1
DEFAULT_MAX_NODES = 200
LABEL_CAP = 60  # labels >= cap share the final one-hot bucket


@dataclass
class EnclosingSubgraph:
    """Local neighborhood of a candidate link.

    ``nodes`` holds global ids sorted ascending; positions define local
    ids.  ``local_adjacency`` never contains the target edge, even when it
    exists globally.  Both targets carry label 1; nodes cut off from
    either target (after removing the other) carry label 0.
    """

    nodes: np.ndarray
    local_adjacency: Graph
    target_u: int
    target_v: int
    labels: np.ndarray
    hop: int

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    def validate(self) -> None:
        self.local_adjacency.validate()
        if self.local_adjacency.node_count != self.size:
            raise ValidationError("local adjacency size mismatch")
        if self.local_adjacency.has_edge(self.target_u, self.target_v):
            raise ValidationError("target edge present in local adjacency")
        if self.labels[self.target_u] != 1 or self.labels[self.target_v] != 1:
            raise ValidationError("targets must carry label 1")
        if np.any(self.labels < 0):
            raise ValidationError("negative label")


def _bfs_within(graph: Graph, start: int, hop: int) -> np.ndarray:
    """Nodes within ``hop`` hops of start (start included), ascending."""
    visited = np.zeros(graph.node_count, dtype=bool)
    visited[start] = True
    frontier = np.array([start], dtype=np.int64)
    for _ in range(hop):
        if frontier.size == 0:
            break
        nxt = []
        for u in frontier:
            nbrs = graph.neighbors_of(int(u))
            fresh = nbrs[~visited[nbrs]]
            if fresh.size:
                visited[fresh] = True
                nxt.append(fresh)
        frontier = np.concatenate(nxt) if nxt else np.empty(0, dtype=np.int64)
    return np.flatnonzero(visited)


def _local_distances(graph: Graph, start: int, skip: int) -> np.ndarray:
    """BFS distances from start with one node removed; -1 if unreachable."""
    n = graph.node_count
    dist = np.full(n, -1, dtype=np.int64)
    dist[start] = 0
    dist[skip] = -2  # blocked
    frontier = [start]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for u in frontier:
            for v in graph.neighbors_of(u):
                v = int(v)
                if dist[v] == -1:
                    dist[v] = d
                    nxt.append(v)
        frontier = nxt
    dist[skip] = -1
    return dist


def drnl_label(sub: EnclosingSubgraph) -> np.ndarray:
    """Double-radius labels from distances to the two targets.

    d_u is the distance to target u with v removed (and vice versa); with
    d = d_u + d_v the label is 1 + min(d_u, d_v) + (d//2) * (d//2 + d%2 - 1).
    Targets are fixed at 1; nodes with either distance infinite get 0.
    """
    g = sub.local_adjacency
    du = _local_distances(g, sub.target_u, skip=sub.target_v)
    dv = _local_distances(g, sub.target_v, skip=sub.target_u)
    labels = np.zeros(g.node_count, dtype=np.int64)
    reachable = (du >= 0) & (dv >= 0)
    d = du + dv
    half = d // 2
    f = 1 + np.minimum(du, dv) + half * (half + d % 2 - 1)
    labels[reachable] = f[reachable]
    labels[sub.target_u] = 1
    labels[sub.target_v] = 1
    return labels


def extract_enclosing(graph: Graph, u: int, v: int, hop: int = DEFAULT_HOP,
                      max_nodes: int = DEFAULT_MAX_NODES, seed: int = 0) -> EnclosingSubgraph:
    """Extract the labeled hop-neighborhood around the pair (u, v).

    Oversized node sets are thinned by uniformly subsampling non-target
    nodes with a pair-derived seed, so extraction is reproducible
    pair-by-pair regardless of batch order.
    """
    graph._check_node(u)
    graph._check_node(v)
    if u == v:
        raise ValidationError("target nodes must differ")
    if hop < 1:
        raise ValidationError("hop must be >= 1")
    if max_nodes < 2:
        raise ValidationError("max_nodes must be >= 2")
    reach_u = _bfs_within(graph, u, hop)
    reach_v = _bfs_within(graph, v, hop)
    nodes = np.union1d(reach_u, reach_v)
    if nodes.shape[0] > max_nodes:
        a, b = (u, v) if u < v else (v, u)
        rng = np.random.default_rng(derive_seed(seed, f"subsample:{a}:{b}"))
        others = nodes[(nodes != u) & (nodes != v)]
        keep = rng.choice(others.shape[0], size=max_nodes - 2, replace=False)
        nodes = np.sort(np.concatenate([[u, v], others[keep]]))
    local_of = {int(g): i for i, g in enumerate(nodes)}
    lu, lv = local_of[u], local_of[v]
    pairs = []
    for li, g in enumerate(nodes):
        nbrs = graph.neighbors_of(int(g))
        pos = np.searchsorted(nodes, nbrs)
        inside = (pos < nodes.shape[0])
        inside[inside] &= nodes[pos[inside]] == nbrs[inside]
        for lj in pos[inside]:
            lj = int(lj)
            if {li, lj} == {lu, lv}:
                continue  # target edge stays out
            if li < lj:
                pairs.append((li, lj))
    local = Graph.from_edges(np.asarray(pairs, dtype=np.int64).reshape(-1, 2),
                             node_count=nodes.shape[0])
    sub = EnclosingSubgraph(nodes=nodes, local_adjacency=local, target_u=lu,
                            target_v=lv, labels=np.zeros(nodes.shape[0], dtype=np.int64),
                            hop=hop)
    sub.labels = drnl_label(sub)
    return sub


def batch_extract(graph: Graph, pairs, hop: int = DEFAULT_HOP,
                  max_nodes: int = DEFAULT_MAX_NODES, seed: int = 0) -> list[EnclosingSubgraph]:
    """Map extract_enclosing over pairs, order-preserving; extraction
    failures carry the offending pair index."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = []
    for idx, (u, v) in enumerate(arr):
        try:
            out.append(extract_enclosing(graph, int(u), int(v), hop, max_nodes, seed))
        except ValidationError as exc:
            raise ValidationError(f"pair {idx} ({u}, {v}): {exc}") from exc
    return out


def one_hot_labels(labels: np.ndarray, cap: int = LABEL_CAP) -> np.ndarray:
    """One-hot encode labels into cap+1 buckets; values >= cap share the
    last bucket (fixed input width for the topology GNN)."""
    idx = np.minimum(np.asarray(labels, dtype=np.int64), cap)
    out = np.zeros((idx.shape[0], cap + 1), dtype=np.float64)
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out


def save_jsonl(subgraphs: Sequence[EnclosingSubgraph],
               dest: str | os.PathLike | IO[str]) -> None:
    """Persist one subgraph per line for training reruns without
    re-extraction."""
    stream, close = _open_for_write(dest)
    try:
        for sub in subgraphs:
            record = {
                "nodes": sub.nodes.tolist(),
                "edges": sub.local_adjacency.edges().tolist(),
                "targets": [sub.target_u, sub.target_v],
                "labels": sub.labels.tolist(),
                "hop": sub.hop,
            }
            stream.write(json.dumps(record, sort_keys=True) + "\n")
    finally:
        if close:
            stream.close()


def load_jsonl(source: str | os.PathLike | IO[str]) -> list[EnclosingSubgraph]:
    stream, close = _open_for_read(source)
    out = []
    try:
        for lineno, line in enumerate(stream, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            nodes = np.asarray(rec["nodes"], dtype=np.int64)
            local = Graph.from_edges(np.asarray(rec["edges"], dtype=np.int64).reshape(-1, 2),
                                     node_count=nodes.shape[0])
            out.append(EnclosingSubgraph(
                nodes=nodes,
                local_adjacency=local,
                target_u=int(rec["targets"][0]),
                target_v=int(rec["targets"][1]),
                labels=np.asarray(rec["labels"], dtype=np.int64),
                hop=int(rec["hop"]),
            ))
    finally:
        if close:
            stream.close()
    return out
