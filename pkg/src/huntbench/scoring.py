"""Bridges artifacts and gold labels to the metric functions."""

from __future__ import annotations

from typing import Any, Callable, Sequence

from . import metrics
from .engine import Artifact, payload_items, payload_text
from .registry import GoldLabel, MetricKind, TaskSpec


def score_artifact(
    spec: TaskSpec,
    artifact: Artifact,
    gold: GoldLabel,
    embedder: Callable[[str], Sequence[float]] | None = None,
    sandbox_evaluate: Callable[[str, str], list[tuple[str, str]]] | None = None,
) -> metrics.MetricResult:
    """Score one artifact against its gold label.

    For Pass tasks, gold may carry a stored per-test report, or a test
    suite source to run through ``sandbox_evaluate`` against the artifact's
    patch text.
    """
    if gold.kind is not spec.metric:
        raise ValueError(
            f"gold kind {gold.kind} does not match task metric {spec.metric}"
        )
    kind = spec.metric
    payload: Any = artifact.payload
    if kind is MetricKind.F1:
        return metrics.f1(payload_items(payload), gold.value, task=spec.name)
    if kind is MetricKind.ACCURACY:
        return metrics.accuracy(payload_text(payload), gold.value, task=spec.name)
    if kind is MetricKind.SIM:
        return metrics.sim(payload_text(payload), gold.value,
                           embedder=embedder, task=spec.name)
    if kind is MetricKind.HIT_AT_K:
        k = int(spec.metric_params.get("k", 10))
        return metrics.hit_at_k(payload_items(payload), gold.value, k=k,
                                task=spec.name)
    if kind is MetricKind.DIST:
        r = float(spec.metric_params.get("R", 10.0))
        pred = float(payload) if not isinstance(payload, (int, float)) else payload
        return metrics.dist(pred, float(gold.value), r=r, task=spec.name)
    if kind is MetricKind.PASS:
        if "per_test" in gold.value:
            per_test = [tuple(pair) for pair in gold.value["per_test"]]
        elif sandbox_evaluate is not None:
            per_test = sandbox_evaluate(payload_text(payload),
                                        gold.value["test_source"])
        else:
            raise ValueError(
                "Pass gold carries a test suite but no sandbox evaluator given"
            )
        return metrics.pass_rate(per_test, task=spec.name)
    raise ValueError(f"unhandled metric kind {kind}")
