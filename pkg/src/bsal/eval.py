"""Ranking metrics (AUC, average precision) and benchmark reports."""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict, dataclass
from typing import IO, Callable, Iterable

import numpy as np

from .errors import ValidationError
from .graph import EdgeSplit, _open_for_read, _open_for_write


def _ranks_with_ties(scores: np.ndarray) -> np.ndarray:
    """1-based average ranks; tied scores share their mean rank."""
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    new_group = np.empty(s.shape[0], dtype=bool)
    new_group[0] = True
    new_group[1:] = s[1:] != s[:-1]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts).astype(np.float64)
    avg = ends - (counts - 1) / 2.0
    ranks = np.empty(s.shape[0], dtype=np.float64)
    ranks[order] = avg[group]
    return ranks


def auc(pos_scores, neg_scores) -> float:
    """Probability a random positive outscores a random negative, ties
    counted half; rank-based, O((m+n) log(m+n))."""
    pos = np.asarray(pos_scores, dtype=np.float64).ravel()
    neg = np.asarray(neg_scores, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValidationError("auc needs non-empty positive and negative score lists")
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(neg))):
        raise ValidationError("auc scores must be finite")
    ranks = _ranks_with_ties(np.concatenate([pos, neg]))
    m, n = pos.size, neg.size
    return float((ranks[:m].sum() - m * (m + 1) / 2.0) / (m * n))


def average_precision(scores, labels) -> float:
    """Threshold-sum AP over descending scores; tied scores form a single
    threshold group."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape[0] != y.shape[0]:
        raise ValidationError("scores and labels differ in length")
    if s.size == 0:
        raise ValidationError("empty score list")
    if not np.all(np.isfinite(s)):
        raise ValidationError("scores must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 or 1")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValidationError("average precision undefined without positives")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order].astype(np.float64)
    # last index of each tie group
    boundary = np.nonzero(np.diff(s_sorted))[0]
    ends = np.append(boundary, s_sorted.shape[0] - 1)
    tp = np.cumsum(y_sorted)[ends]
    seen = (ends + 1).astype(np.float64)
    precision = tp / seen
    recall = tp / n_pos
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


@dataclass(frozen=True)
class EvalReport:
    """One evaluation run of one method on one dataset split."""

    method: str
    dataset: str
    auc: float
    ap: float
    n_pos: int
    n_neg: int
    seed: int
    wall_time: float

    def __post_init__(self):
        if not (0.0 <= self.auc <= 1.0 and 0.0 <= self.ap <= 1.0):
            raise ValidationError("metrics must lie in [0, 1]")
        if self.n_pos <= 0 or self.n_neg <= 0:
            raise ValidationError("evaluation needs positive example counts")

    def save(self, dest: str | os.PathLike | IO[str]) -> None:
        stream, close = _open_for_write(dest)
        try:
            json.dump(asdict(self), stream, sort_keys=True, indent=1)
            stream.write("\n")
        finally:
            if close:
                stream.close()

    @classmethod
    def load(cls, source: str | os.PathLike | IO[str]) -> "EvalReport":
        stream, close = _open_for_read(source)
        try:
            payload = json.load(stream)
        finally:
            if close:
                stream.close()
        return cls(**payload)


def evaluate(scorer: Callable[[int, int], float], split: EdgeSplit, which: str,
             method: str = "custom", dataset: str = "unknown",
             seed: int | None = None) -> EvalReport:
    """Score the chosen positive/negative pair sets and report AUC and AP."""
    if which not in ("val", "test"):
        raise ValidationError(f"which must be 'val' or 'test', got {which!r}")
    pos = split.positives(which)
    neg = split.negatives(which)
    start = time.monotonic()
    pos_scores = np.array([scorer(int(u), int(v)) for u, v in pos], dtype=np.float64)
    neg_scores = np.array([scorer(int(u), int(v)) for u, v in neg], dtype=np.float64)
    wall = time.monotonic() - start
    return report_from_scores(pos_scores, neg_scores, method=method, dataset=dataset,
                              seed=split.seed if seed is None else seed, wall_time=wall)


def report_from_scores(pos_scores: np.ndarray, neg_scores: np.ndarray, *, method: str,
                       dataset: str, seed: int, wall_time: float) -> EvalReport:
    scores = np.concatenate([pos_scores, neg_scores])
    labels = np.concatenate([np.ones(len(pos_scores), dtype=np.int64),
                             np.zeros(len(neg_scores), dtype=np.int64)])
    return EvalReport(
        method=method,
        dataset=dataset,
        auc=auc(pos_scores, neg_scores),
        ap=average_precision(scores, labels),
        n_pos=int(len(pos_scores)),
        n_neg=int(len(neg_scores)),
        seed=int(seed),
        wall_time=float(wall_time),
    )


def aggregate_reports(reports: Iterable[EvalReport]) -> dict[tuple[str, str], dict[str, float]]:
    """Group by (method, dataset) and return mean/std for both metrics."""
    groups: dict[tuple[str, str], list[EvalReport]] = {}
    for r in reports:
        groups.setdefault((r.method, r.dataset), []).append(r)
    if not groups:
        raise ValidationError("no reports to aggregate")
    out = {}
    for key, rs in groups.items():
        aucs = np.array([r.auc for r in rs])
        aps = np.array([r.ap for r in rs])
        out[key] = {
            "runs": len(rs),
            "auc_mean": float(aucs.mean()),
            "auc_std": float(aucs.std()),
            "ap_mean": float(aps.mean()),
            "ap_std": float(aps.std()),
        }
    return out


def format_table(stats: dict[tuple[str, str], dict[str, float]]) -> str:
    """Aligned text table: one AUC block and one AP block, methods as rows,
    datasets as columns, cells 'mean ± std' in percent."""
    methods = sorted({m for m, _ in stats})
    datasets = sorted({d for _, d in stats})
    lines = []
    for metric, label in (("auc", "AUC"), ("ap", "AP")):
        header = [label.ljust(12)] + [d.rjust(18) for d in datasets]
        lines.append("".join(header))
        for m in methods:
            row = [m.ljust(12)]
            for d in datasets:
                cell = stats.get((m, d))
                if cell is None:
                    row.append("-".rjust(18))
                else:
                    row.append(f"{100 * cell[f'{metric}_mean']:.2f} ± "
                               f"{100 * cell[f'{metric}_std']:.2f}".rjust(18))
            lines.append("".join(row))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def format_csv(stats: dict[tuple[str, str], dict[str, float]]) -> str:
    lines = ["method,dataset,runs,auc_mean,auc_std,ap_mean,ap_std"]
    for (m, d) in sorted(stats):
        c = stats[(m, d)]
        lines.append(f"{m},{d},{c['runs']},{c['auc_mean']:.6f},{c['auc_std']:.6f},"
                     f"{c['ap_mean']:.6f},{c['ap_std']:.6f}")
    return "\n".join(lines) + "\n"
