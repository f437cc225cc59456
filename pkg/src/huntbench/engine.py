"""Workflow engine: stage scheduling, task selection, module execution.

A run walks the four stage barriers in order. Within a stage, tasks run
concurrently; each task executes its module sequence, threading upstream
artifact payloads and prior module outputs into later prompts. Artifacts
are write-once and keyed by producing task.
"""

from __future__ import annotations

import itertools
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .gateway import Gateway, prompt_digest
from .graph import DependencyGraph, STAGE_BARRIERS
from .ops import cvss
from .ops.corpus import CorpusIndex
from .ops.llm import (
    EntitySet,
    OpError,
    SimVerdict,
    SpanResult,
    TripleSet,
    cls_classify,
    load_prompt,
    map_triples,
    ner_extract,
    rag_answer,
    sim_match,
    spa_locate,
    sum_summarize,
)
from .ops.rex import IndicatorSet, rex_extract
from .registry import (
    ModuleKind,
    TaskCategory,
    TaskSpec,
    ThreatCase,
    normalize_task_name,
    tasks_in_stage,
)

STRATEGY_KINDS = ("Standardized", "ICL5", "ICL10", "CoT", "ToT")


class EngineError(Exception):
    pass


class ModuleFailure(EngineError):
    def __init__(self, module: ModuleKind, detail: str) -> None:
        super().__init__(f"module-failure[{module.value}]: {detail}")
        self.module = module


class MissingUpstream(EngineError):
    pass


@dataclass
class ModuleInvocation:
    invocation_id: str
    task: str
    module: str
    prompt_digest: str
    output: str
    wall_ms: int

    def to_record(self) -> dict:
        return {
            "invocation_id": self.invocation_id,
            "task": self.task,
            "module": self.module,
            "prompt_digest": self.prompt_digest,
            "output": self.output,
            "wall_ms": self.wall_ms,
        }


@dataclass
class Artifact:
    producer: str
    payload: Any
    kind: str
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.provenance:
            raise EngineError("artifact provenance must be non-empty")


def payload_text(payload: Any) -> str:
    """Render a typed payload for prompt injection and reports."""
    if isinstance(payload, EntitySet):
        return json.dumps(payload.to_dict(), sort_keys=True)
    if isinstance(payload, IndicatorSet):
        return json.dumps(payload.to_dict(), sort_keys=True)
    if isinstance(payload, TripleSet):
        return json.dumps([list(t) for t in payload.triples])
    if isinstance(payload, SimVerdict):
        return json.dumps(
            {"match": payload.match, "confidence": payload.confidence}
        )
    if isinstance(payload, SpanResult):
        return payload.text
    if isinstance(payload, tuple) and len(payload) == 2:
        answer, evidence = payload
        return str(answer)
    return str(payload)


def payload_items(payload: Any) -> list[str]:
    """Flatten a payload into scoreable items (for F1 / Hit metrics)."""
    if isinstance(payload, EntitySet):
        return sorted(payload.all_surfaces())
    if isinstance(payload, IndicatorSet):
        return sorted(payload.all_values())
    if isinstance(payload, TripleSet):
        return sorted({elem for t in payload.triples for elem in t})
    if isinstance(payload, tuple) and len(payload) == 2:
        payload = payload[0]
    text = str(payload)
    items = [ln.strip(" -*\t") for ln in re.split(r"[\n;]", text)]
    return [item for item in items if item]


@dataclass
class RunPlan:
    case_id: str
    selected_tasks: dict[TaskCategory, list[str]]
    strategy: str = "Standardized"
    seed: int = 0

    def validate(self) -> None:
        if self.strategy not in STRATEGY_KINDS:
            raise EngineError(f"unknown strategy {self.strategy!r}")
        for stage, names in self.selected_tasks.items():
            stage_names = {t.name for t in tasks_in_stage(stage)}
            bad = set(names) - stage_names
            if bad:
                raise EngineError(f"tasks {sorted(bad)} not in stage {stage.name}")
        response = self.selected_tasks.get(TaskCategory.RESPONSE_MITIGATION, [])
        if set(self.selected_tasks) == set(STAGE_BARRIERS) and not response:
            raise EngineError("response stage must not be empty in a complete run")


@dataclass
class RunResult:
    artifacts: dict[str, Artifact]
    failures: dict[str, str]
    invocations: list[ModuleInvocation]


_invocation_counter = itertools.count(1)


class Engine:
    """Executes module sequences against a gateway and advisory corpus."""

    def __init__(
        self,
        gateway: Gateway,
        corpus: CorpusIndex | None = None,
        max_workers: int = 4,
    ) -> None:
        self.gateway = gateway
        self.corpus = corpus or CorpusIndex()
        self.max_workers = max_workers
        self._lock = threading.Lock()

    # -- task selection -----------------------------------------------------
    def select_tasks(
        self,
        case: ThreatCase,
        stage: TaskCategory,
        upstream: list[Artifact],
    ) -> list[str]:
        stage_tasks = [t.name for t in tasks_in_stage(stage)]
        findings = "\n".join(
            f"- {a.producer}: {payload_text(a.payload)[:200]}" for a in upstream
        )
        user = (
            f"Case material:\n{case.input_text[:2000]}\n\n"
            f"Earlier findings:\n{findings or '(none)'}\n\n"
            f"Candidate tasks: {'; '.join(stage_tasks)}"
        )
        reply = self.gateway.complete(load_prompt("select"), user)
        chosen: list[str] = []
        for raw in re.split(r"[;,\n]", reply):
            name = normalize_task_name(raw)
            if name and name in stage_tasks and name not in chosen:
                chosen.append(name)
        return chosen or stage_tasks

    # -- single task --------------------------------------------------------
    def run_task(
        self,
        case: ThreatCase,
        spec: TaskSpec,
        upstream: list[Artifact],
        graph: DependencyGraph | None = None,
    ) -> Artifact:
        artifact, _ = self._run_task_with_provenance(case, spec, upstream, graph)
        return artifact

    def _run_task_with_provenance(
        self,
        case: ThreatCase,
        spec: TaskSpec,
        upstream: list[Artifact],
        graph: DependencyGraph | None = None,
    ) -> tuple[Artifact, list[ModuleInvocation]]:
        if graph is not None:
            have = {a.producer for a in upstream}
            missing = graph.parents(spec.name) - have
            if missing:
                raise MissingUpstream(
                    f"task {spec.name} missing upstream {sorted(missing)}"
                )
        upstream_text = "\n".join(
            f"[{a.producer}] {payload_text(a.payload)}" for a in upstream
        )
        context: list[str] = []
        provenance: list[ModuleInvocation] = []
        payload: Any = None
        for module in spec.modules:
            start = time.monotonic()
            try:
                payload = self._run_module(module, case, spec, upstream_text, context)
            except (OpError, cvss.CvssError) as err:
                raise ModuleFailure(module, str(err)) from err
            out_text = payload_text(payload)
            context.append(f"[{module.value}] {out_text}")
            invocation = ModuleInvocation(
                invocation_id=f"inv-{next(_invocation_counter)}",
                task=spec.name,
                module=module.value,
                prompt_digest=prompt_digest(module.value, case.case_id + spec.name),
                output=out_text,
                wall_ms=int((time.monotonic() - start) * 1000),
            )
            provenance.append(invocation)
        return Artifact(
            producer=spec.name,
            payload=payload,
            kind=spec.modules[-1].value,
            provenance=[inv.invocation_id for inv in provenance],
        ), provenance

    def _run_module(
        self,
        module: ModuleKind,
        case: ThreatCase,
        spec: TaskSpec,
        upstream_text: str,
        context: list[str],
    ) -> Any:
        combined = "\n".join(
            part for part in (case.input_text, upstream_text, *context) if part
        )
        if module is ModuleKind.NER:
            return ner_extract(case.input_text, self.gateway)
        if module is ModuleKind.REX:
            return rex_extract(case.input_text)
        if module is ModuleKind.SUM:
            return sum_summarize(combined, spec.target_description, self.gateway)
        if module is ModuleKind.SIM:
            prior = context[-1] if context else case.input_text
            return sim_match(prior, spec.target_description, self.gateway)
        if module is ModuleKind.MAP:
            return map_triples(combined, self.gateway)
        if module is ModuleKind.RAG:
            question = f"{spec.target_description}. Case: {case.input_text[:400]}"
            return rag_answer(question, self.corpus, self.gateway)
        if module is ModuleKind.SPA:
            return spa_locate(case.input_text, spec.target_description, self.gateway)
        if module is ModuleKind.CLS:
            return cls_classify(combined, spec.label_set, self.gateway)
        if module is ModuleKind.MATH:
            try:
                vector = cvss.parse_vector(combined)
            except cvss.CvssError as err:
                raise OpError(f"no scoreable vector in context: {err}") from err
            return cvss.score_vector(vector)
        raise OpError(f"unhandled module {module}")

    # -- full case ----------------------------------------------------------
    def run_case(
        self,
        case: ThreatCase,
        plan: RunPlan,
        graph: DependencyGraph,
    ) -> RunResult:
        from .registry import spec as task_spec

        plan.validate()
        selection = {
            name for names in plan.selected_tasks.values() for name in names
        }
        closed = graph.closure(selection)
        artifacts: dict[str, Artifact] = {}
        failures: dict[str, str] = {}
        invocations: list[ModuleInvocation] = []

        for stage in graph.stage_barriers:
            stage_tasks = sorted(
                name for name in closed
                if task_spec(name).category is stage
            )
            if not stage_tasks:
                continue
            upstream = [artifacts[n] for n in sorted(artifacts)]

            def _one(name: str):
                return self._run_task_with_provenance(
                    case, task_spec(name), upstream, graph
                )

            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                futures = {name: pool.submit(_one, name) for name in stage_tasks}
            for name in stage_tasks:
                try:
                    artifact, prov = futures[name].result()
                except EngineError as err:
                    failures[name] = str(err)
                else:
                    artifacts[name] = artifact
                    invocations.extend(prov)
        invocations.sort(key=lambda inv: (inv.task, inv.invocation_id))
        return RunResult(artifacts=artifacts, failures=failures,
                         invocations=invocations)

    def plan_with_llm(self, case: ThreatCase, seed: int = 0) -> RunPlan:
        """Build a plan by asking the gateway which tasks to run per stage."""
        selected: dict[TaskCategory, list[str]] = {}
        upstream: list[Artifact] = []
        for stage in STAGE_BARRIERS:
            selected[stage] = self.select_tasks(case, stage, upstream)
        plan = RunPlan(case_id=case.case_id, selected_tasks=selected, seed=seed)
        plan.validate()
        return plan


def write_transcript(invocations: list[ModuleInvocation], path: str) -> None:
    """Persist one JSON record per module invocation."""
    with open(path, "w", encoding="utf-8") as fh:
        for inv in invocations:
            fh.write(json.dumps(inv.to_record(), sort_keys=True) + "\n")
