"""Similarity-score baselines over the observed graph: common neighbors,
Adamic-Adar, personalized PageRank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .errors import ConvergenceError, ValidationError
from .graph import Graph

SCORERS = ("cn", "aa", "ppr")


@dataclass(frozen=True)
class PprConfig:
    damping: float = 0.85
    tolerance: float = 1e-6
    max_iters: int = 1000

    def __post_init__(self):
        if not 0.0 < self.damping < 1.0:
            raise ValidationError(f"damping must be in (0, 1), got {self.damping}")
        if self.tolerance <= 0.0:
            raise ValidationError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


def common_neighbors(graph: Graph, u: int, v: int) -> float:
    """|N(u) ∩ N(v)| via sorted-list intersection."""
    nu = graph.neighbors_of(u)
    nv = graph.neighbors_of(v)
    return float(np.intersect1d(nu, nv, assume_unique=True).size)


def adamic_adar(graph: Graph, u: int, v: int) -> float:
    """Sum of 1/ln(deg(w)) over shared neighbors w.

    A shared neighbor has degree >= 2 in a well-formed graph; degree-1
    entries (possible only on malformed input) contribute 0.
    """
    shared = np.intersect1d(graph.neighbors_of(u), graph.neighbors_of(v),
                            assume_unique=True)
    if shared.size == 0:
        return 0.0
    degs = graph.degrees[shared]
    degs = degs[degs >= 2]
    return float(np.sum(1.0 / np.log(degs.astype(np.float64))))


def _transition_transpose(graph: Graph) -> csr_matrix:
    """P^T where P is the row-stochastic walk matrix over neighbor lists.

    Row v of the result holds 1/deg(u) at column u for each neighbor u, so
    (P^T x)[v] = sum_u x[u]/deg(u).  Dangling nodes contribute nothing here
    and are redirected to the source in the iteration.
    """
    degs = graph.degrees.astype(np.float64)
    inv = np.zeros_like(degs)
    nz = degs > 0
    inv[nz] = 1.0 / degs[nz]
    data = inv[graph.neighbors]
    return csr_matrix((data, graph.neighbors, graph.offsets),
                      shape=(graph.node_count, graph.node_count))


def personalized_pagerank(graph: Graph, source: int, cfg: PprConfig = PprConfig(),
                          _pt: csr_matrix | None = None) -> np.ndarray:
    """Power iteration for pi = (1-d) e_s + d pi P, dangling mass to source.

    Stops when the L1 residual drops below cfg.tolerance; raises
    ConvergenceError (carrying the final residual) if max_iters is hit.
    """
    if graph.node_count == 0:
        raise ValidationError("graph is empty")
    graph._check_node(source)
    pt = _transition_transpose(graph) if _pt is None else _pt
    dangling = graph.degrees == 0
    d = cfg.damping
    pi = np.zeros(graph.node_count, dtype=np.float64)
    pi[source] = 1.0
    residual = np.inf
    for _ in range(cfg.max_iters):
        nxt = d * (pt @ pi)
        nxt[source] += (1.0 - d) + d * float(pi[dangling].sum())
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < cfg.tolerance:
            return pi
    raise ConvergenceError(
        f"PPR did not converge in {cfg.max_iters} iterations (residual {residual:.3e})",
        residual=residual)


def ppr_pair_score(graph: Graph, u: int, v: int, cfg: PprConfig = PprConfig(),
                   cache: dict[int, np.ndarray] | None = None) -> float:
    """Symmetrized pair score pi_u(v) + pi_v(u)."""
    if cache is None:
        cache = {}
    pt = _transition_transpose(graph)
    for s in (u, v):
        if s not in cache:
            cache[s] = personalized_pagerank(graph, s, cfg, _pt=pt)
    return float(cache[u][v] + cache[v][u])


def score_edges(graph: Graph, scorer: str, edges, ppr_cfg: PprConfig | None = None) -> np.ndarray:
    """Score each (u, v) pair with the named heuristic, order-preserving.

    PPR vectors are computed once per distinct endpoint and reused.
    """
    if scorer not in SCORERS:
        raise ValidationError(f"unknown scorer {scorer!r}; expected one of {SCORERS}")
    pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    out = np.empty(pairs.shape[0], dtype=np.float64)
    if scorer == "cn":
        for i, (u, v) in enumerate(pairs):
            out[i] = common_neighbors(graph, int(u), int(v))
    elif scorer == "aa":
        for i, (u, v) in enumerate(pairs):
            out[i] = adamic_adar(graph, int(u), int(v))
    else:
        cfg = ppr_cfg or PprConfig()
        pt = _transition_transpose(graph)
        cache: dict[int, np.ndarray] = {}
        for s in np.unique(pairs):
            cache[int(s)] = personalized_pagerank(graph, int(s), cfg, _pt=pt)
        for i, (u, v) in enumerate(pairs):
            out[i] = cache[int(u)][v] + cache[int(v)][u]
    return out
