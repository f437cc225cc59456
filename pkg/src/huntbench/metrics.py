"""The six task metrics plus the span diagnostics (exact match, IoU).

All scores are in [0, 1]. Every function is pure and returns a
MetricResult carrying a diagnostics payload for auditability.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .gateway import cosine, trigram_embedding
from .ops.llm import SpanResult
from .registry import MetricKind


@dataclass
class MetricResult:
    task: str
    kind: MetricKind
    score: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


def _norm_item(item: str) -> str:
    return re.sub(r"\s+", " ", item.strip().lower())


def f1(pred: Iterable[str], gold: Iterable[str], task: str = "") -> MetricResult:
    """Set F1 over normalized items; both-empty counts as perfect agreement."""
    pred_set = {_norm_item(x) for x in pred if _norm_item(x)}
    gold_set = {_norm_item(x) for x in gold if _norm_item(x)}
    if not pred_set and not gold_set:
        return MetricResult(task, MetricKind.F1, 1.0,
                            {"precision": 1.0, "recall": 1.0, "tp": 0})
    tp = len(pred_set & gold_set)
    precision = tp / len(pred_set) if pred_set else 0.0
    recall = tp / len(gold_set) if gold_set else 0.0
    score = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricResult(task, MetricKind.F1, score,
                        {"precision": precision, "recall": recall, "tp": tp,
                         "fp": len(pred_set - gold_set), "fn": len(gold_set - pred_set)})


def accuracy(pred: str, gold: str, task: str = "") -> MetricResult:
    """Exact match after case/punctuation normalization."""
    norm = lambda s: re.sub(r"[^a-z0-9]", "", s.lower())
    score = 1.0 if norm(pred) == norm(gold) and norm(gold) else 0.0
    return MetricResult(task, MetricKind.ACCURACY, score,
                        {"pred": pred, "gold": gold})


Embedder = Callable[[str], Sequence[float]]


def _sim_tokens(text: str) -> list[str]:
    return [t for t in re.findall(r"\S+", text)]


def sim(
    pred_text: str,
    gold_text: str,
    embedder: Embedder | None = None,
    task: str = "",
) -> MetricResult:
    """Average over candidate tokens of the max cosine to any reference token."""
    embedder = embedder or trigram_embedding
    pred_tokens = _sim_tokens(pred_text)
    gold_tokens = _sim_tokens(gold_text)
    if not pred_tokens or not gold_tokens:
        score = 1.0 if not pred_tokens and not gold_tokens else 0.0
        return MetricResult(task, MetricKind.SIM, score, {"tokens": 0})
    gold_vecs = [embedder(t) for t in gold_tokens]
    total = 0.0
    for tok in pred_tokens:
        vec = embedder(tok)
        total += max(cosine(vec, gv) for gv in gold_vecs)
    score = min(1.0, max(0.0, total / len(pred_tokens)))
    return MetricResult(task, MetricKind.SIM, score,
                        {"tokens": len(pred_tokens)})


def hit_at_k(
    ranked: Sequence[str], gold: Iterable[str], k: int = 10, task: str = ""
) -> MetricResult:
    if k < 1:
        raise ValueError("k must be >= 1")
    gold_set = {_norm_item(g) for g in gold}
    matched = [item for item in ranked[:k] if _norm_item(item) in gold_set]
    return MetricResult(task, MetricKind.HIT_AT_K, 1.0 if matched else 0.0,
                        {"k": k, "matched": matched})


def pass_rate(per_test: Sequence[tuple[str, str]], task: str = "") -> MetricResult:
    """passed / total over (name, outcome) pairs; no tests scores 0."""
    total = len(per_test)
    if total == 0:
        return MetricResult(task, MetricKind.PASS, 0.0, {"note": "no-tests"})
    passed = sum(1 for _, outcome in per_test if outcome == "pass")
    return MetricResult(task, MetricKind.PASS, passed / total,
                        {"passed": passed, "total": total,
                         "outcomes": dict(per_test)})


def dist(pred: float, gold: float, r: float = 10.0, task: str = "") -> MetricResult:
    """Normalized distance similarity, clamped to 0 beyond the range."""
    if r <= 0:
        raise ValueError("range R must be positive")
    score = max(0.0, 1.0 - abs(pred - gold) / r)
    return MetricResult(task, MetricKind.DIST, score,
                        {"pred": pred, "gold": gold, "R": r})


def em_iou(pred: SpanResult, gold: SpanResult) -> tuple[int, float]:
    """Exact match flag and character-range intersection over union."""
    em = 1 if (pred.start, pred.end) == (gold.start, gold.end) else 0
    overlap = max(0, min(pred.end, gold.end) - max(pred.start, gold.start))
    union = (pred.end - pred.start) + (gold.end - gold.start) - overlap
    iou = overlap / union if union > 0 else 0.0
    return em, iou
