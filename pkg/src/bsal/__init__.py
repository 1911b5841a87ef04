"""Link prediction toolkit: two-channel subgraph learning (topology +
semantic kNN graph) with attention fusion, alongside heuristic and
embedding baselines and a ranking-metric evaluation protocol."""

from .errors import ConvergenceError, NumericalError, ParseError, ValidationError
from .eval import EvalReport, auc, average_precision, evaluate
from .graph import (EdgeSplit, FeatureMatrix, Graph, load_edge_list,
                    load_features, sample_negatives, split_edges)
from .heuristics import (PprConfig, adamic_adar, common_neighbors,
                         personalized_pagerank, ppr_pair_score, score_edges)
from .embedding import (EmbeddingMatrix, SkipGramConfig, WalkConfig, Walks,
                        generate_walks, inner_product_scores, node2vec,
                        train_skipgram)
from .semantic import (SemanticGraphConfig, SimilarityMeasure,
                       build_semantic_graph, default_k, median_bandwidth,
                       similarity)
from .subgraph import (EnclosingSubgraph, batch_extract, drnl_label,
                       extract_enclosing, one_hot_labels)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "EdgeSplit", "EmbeddingMatrix", "EnclosingSubgraph",
    "EvalReport", "FeatureMatrix", "Graph", "NumericalError", "ParseError",
    "PprConfig", "SemanticGraphConfig", "SimilarityMeasure", "SkipGramConfig",
    "ValidationError", "WalkConfig", "Walks", "adamic_adar", "auc",
    "average_precision", "batch_extract", "build_semantic_graph",
    "common_neighbors", "default_k", "drnl_label", "evaluate",
    "extract_enclosing", "generate_walks", "inner_product_scores",
    "load_edge_list", "load_features", "median_bandwidth", "node2vec",
    "one_hot_labels", "personalized_pagerank", "ppr_pair_score",
    "sample_negatives", "score_edges", "similarity", "split_edges",
    "train_skipgram",
]
