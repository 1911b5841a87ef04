"""Semantic topology: a kNN graph built from node-attribute similarity,
translating feature information into structure that graph embedders can
consume."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import FeatureMatrix, Graph

MEASURES = ("inner_product", "euclidean_distance", "cosine", "gaussian_kernel")


@dataclass(frozen=True)
class SimilarityMeasure:
    """Pairwise feature similarity; higher means more similar.

    ``gaussian_kernel`` uses exp(-||x_i - x_j|| / t) with an *unsquared*
    norm in the exponent; ``t`` is its bandwidth and is ignored by the
    other measures.
    """

    name: str = "euclidean_distance"
    t: float | None = None

    def __post_init__(self):
        if self.name not in MEASURES:
            raise ValidationError(f"unknown measure {self.name!r}; expected one of {MEASURES}")
        if self.t is not None and self.t <= 0:
            raise ValidationError("gaussian bandwidth t must be positive")


@dataclass(frozen=True)
class SemanticGraphConfig:
    k: int = 1
    measure: SimilarityMeasure = SimilarityMeasure()

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be >= 1")


def similarity(x_i, x_j, measure: SimilarityMeasure) -> float:
    """Score one feature-vector pair under the chosen measure."""
    a = np.asarray(x_i, dtype=np.float64).ravel()
    b = np.asarray(x_j, dtype=np.float64).ravel()
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if measure.name == "inner_product":
        return float(np.dot(a, b))
    if measure.name == "euclidean_distance":
        d = a - b
        return -float(np.dot(d, d))
    if measure.name == "cosine":
        na = float(np.linalg.norm(a))
        nb = float(np.linalg.norm(b))
        if na == 0.0 or nb == 0.0:
            raise ValidationError("cosine similarity undefined for zero vectors")
        return float(np.dot(a, b) / (na * nb))
    # gaussian_kernel
    if measure.t is None:
        raise ValidationError("gaussian_kernel needs a bandwidth t")
    d = a - b
    return float(np.exp(-np.sqrt(np.dot(d, d)) / measure.t))


def default_k(graph: Graph) -> int:
    """Average degree of the graph, conventionally rounded, at least 1."""
    if graph.node_count == 0:
        raise ValidationError("graph is empty")
    avg = 2.0 * graph.edge_count / graph.node_count
    return max(1, int(avg + 0.5))


def median_bandwidth(features: FeatureMatrix, sample: int = 1000) -> float:
    """Median pairwise Euclidean distance over an evenly spaced row sample;
    the standard default bandwidth for the Gaussian kernel."""
    X = features.values
    n = X.shape[0]
    if n < 2:
        return 1.0
    idx = np.unique(np.linspace(0, n - 1, num=min(n, sample)).astype(np.int64))
    S = X[idx]
    sq = np.sum(S * S, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (S @ S.T), 0.0)
    dists = np.sqrt(d2[np.triu_indices(len(idx), k=1)])
    med = float(np.median(dists)) if dists.size else 0.0
    if med <= 0.0:
        positive = dists[dists > 0]
        med = float(positive.min()) if positive.size else 1.0
    return med


def _row_scores(X: np.ndarray, i: int, measure: SimilarityMeasure,
                norms: np.ndarray | None) -> np.ndarray:
    """Similarity of row i against every row (row i itself included)."""
    if measure.name == "inner_product":
        return X @ X[i]
    if measure.name == "cosine":
        return (X @ X[i]) / (norms * norms[i])
    diff = X - X[i]
    sq = np.einsum("ij,ij->i", diff, diff)
    if measure.name == "euclidean_distance":
        return -sq
    return np.exp(-np.sqrt(sq) / measure.t)


def build_semantic_graph(features: FeatureMatrix, cfg: SemanticGraphConfig) -> Graph:
    """Connect each node to its k most similar peers, then symmetrize.

    Ties at the selection boundary resolve toward the smaller node id; the
    union of the directed selections forms the undirected edge set, so
    every node ends with degree >= k.
    """
    X = features.values
    n = X.shape[0]
    if cfg.k >= n:
        raise ValidationError(f"k={cfg.k} must be smaller than node count {n}")
    measure = cfg.measure
    if measure.name == "gaussian_kernel" and measure.t is None:
        measure = SimilarityMeasure("gaussian_kernel", t=median_bandwidth(features))
    norms = None
    if measure.name == "cosine":
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0.0):
            raise ValidationError("cosine measure undefined: zero feature row present")
    k = cfg.k
    src = np.empty(n * k, dtype=np.int64)
    dst = np.empty(n * k, dtype=np.int64)
    for i in range(n):
        s = _row_scores(X, i, measure, norms)
        s[i] = -np.inf
        # boundary value of the k strongest scores, then exact tie handling
        kth = -np.partition(-s, k - 1)[k - 1]
        better = np.flatnonzero(s > kth)
        tied = np.flatnonzero(s == kth)
        chosen = np.concatenate([better, tied[:k - better.size]])
        src[i * k:(i + 1) * k] = i
        dst[i * k:(i + 1) * k] = chosen
    return Graph.from_edges(np.column_stack([src, dst]), node_count=n)
