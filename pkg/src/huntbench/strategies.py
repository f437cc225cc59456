"""Open-ended baselines (ICL-5/10, CoT, ToT) behind one strategy interface.

Every strategy returns an Artifact with the same payload shape the
standardized pipeline would produce for the task, so scoring is uniform.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .engine import Artifact, Engine, EngineError
from .gateway import Gateway
from .registry import MetricKind, TaskSpec, ThreatCase

FINAL_SENTINEL = "FINAL:"

_ANSWER_SYSTEM = (
    "You are a security analyst working a threat-hunting task. "
    "Follow the instructions and answer for the given case."
)


class ExemplarShortage(EngineError):
    pass


@dataclass(frozen=True)
class Exemplar:
    task: str
    input_text: str
    answer: str


def load_exemplar_pool(path: str) -> list[Exemplar]:
    """Exemplar pool file: JSON Lines of (task, input, answer)."""
    pool: list[Exemplar] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                pool.append(Exemplar(rec["task"], rec["input"], rec["answer"]))
    return pool


def parse_answer(spec: TaskSpec, text: str):
    """Coerce free text into the task's payload shape."""
    text = text.strip()
    if spec.metric is MetricKind.DIST:
        match = re.search(r"-?\d+(?:\.\d+)?", text)
        if not match:
            raise EngineError(f"no numeric answer in {text[:80]!r}")
        return float(match.group(0))
    if spec.metric is MetricKind.ACCURACY:
        return text.splitlines()[-1].strip() if text else ""
    if spec.metric in (MetricKind.F1, MetricKind.HIT_AT_K):
        items = [it.strip(" -*\t") for it in re.split(r"[\n;]", text)]
        return [it for it in items if it]
    return text  # Sim / Pass payloads stay textual


def _task_instruction(spec: TaskSpec) -> str:
    parts = [f"Task: identify {spec.target_description}."]
    if spec.label_set:
        parts.append(f"Answer with exactly one of: {', '.join(spec.label_set)}.")
    elif spec.metric in (MetricKind.F1, MetricKind.HIT_AT_K):
        parts.append("List one answer item per line.")
    elif spec.metric is MetricKind.DIST:
        parts.append("Answer with a single number.")
    return " ".join(parts)


def _icl_prompt(spec: TaskSpec, case: ThreatCase, exemplars: list[Exemplar]) -> str:
    blocks = [_task_instruction(spec), ""]
    for ex in exemplars:
        blocks.append(f"Example input:\n{ex.input_text}\nExample answer:\n{ex.answer}\n")
    blocks.append(f"Now the real case:\n{case.input_text}\nAnswer:")
    return "\n".join(blocks)


def answer_task(
    case: ThreatCase,
    spec: TaskSpec,
    kind: str,
    gateway: Gateway,
    exemplar_pool: list[Exemplar] | None = None,
    engine: Engine | None = None,
    tot_branching: int = 3,
    tot_depth: int = 2,
    seed: int = 0,
) -> Artifact:
    if kind == "Standardized":
        if engine is None:
            engine = Engine(gateway)
        return engine.run_task(case, spec, upstream=[])
    if kind in ("ICL5", "ICL10"):
        need = 5 if kind == "ICL5" else 10
        pool = [ex for ex in (exemplar_pool or []) if ex.task == spec.name]
        if len(pool) < need:
            raise ExemplarShortage(
                f"{spec.name}: need {need} exemplars, have {len(pool)}"
            )
        reply = gateway.complete(_ANSWER_SYSTEM, _icl_prompt(spec, case, pool[:need]))
        payload = parse_answer(spec, reply)
        return Artifact(spec.name, payload, kind, provenance=[f"{kind}-1"])
    if kind == "CoT":
        user = (
            f"{_task_instruction(spec)}\n\nCase:\n{case.input_text}\n\n"
            "Reason step by step, then give your final answer on its own line "
            f"prefixed with '{FINAL_SENTINEL}'."
        )
        reply = gateway.complete(_ANSWER_SYSTEM, user)
        payload = parse_answer(spec, _extract_final(reply))
        return Artifact(spec.name, payload, kind, provenance=["CoT-1"])
    if kind == "ToT":
        return _tree_of_thought(case, spec, gateway, tot_branching, tot_depth)
    raise EngineError(f"unknown strategy {kind!r}")


def _extract_final(reply: str) -> str:
    idx = reply.rfind(FINAL_SENTINEL)
    if idx < 0:
        raise EngineError(f"reply lacks {FINAL_SENTINEL!r} sentinel: {reply[:80]!r}")
    return reply[idx + len(FINAL_SENTINEL):].strip()


def _score_thought(gateway: Gateway, spec: TaskSpec, path_text: str) -> float:
    reply = gateway.complete(
        "Rate the plausibility of the following reasoning step for the task, "
        "on a scale from 0 to 10. Reply with the number only.",
        f"Task: {spec.target_description}\nReasoning so far:\n{path_text}",
    )
    match = re.search(r"-?\d+(?:\.\d+)?", reply)
    return float(match.group(0)) if match else 0.0


def _tree_of_thought(
    case: ThreatCase,
    spec: TaskSpec,
    gateway: Gateway,
    branching: int,
    depth: int,
) -> Artifact:
    """Full enumeration: branching^depth leaves, cumulative evaluation score.

    Gateway call count is sum over levels l of 2 * branching^l (one
    expansion plus one evaluation per node). Ties break on lowest path index.
    """
    if branching < 2 or depth < 1:
        raise EngineError("ToT requires branching >= 2 and depth >= 1")
    # paths: (indices, texts, cumulative score)
    paths: list[tuple[tuple[int, ...], list[str], float]] = [((), [], 0.0)]
    for level in range(1, depth + 1):
        last = level == depth
        next_paths: list[tuple[tuple[int, ...], list[str], float]] = []
        for indices, texts, score in paths:
            for branch in range(branching):
                prior = "\n".join(texts) or "(start)"
                directive = (
                    f"Conclude with '{FINAL_SENTINEL} <answer>'." if last
                    else "Propose the next reasoning step."
                )
                thought = gateway.complete(
                    _ANSWER_SYSTEM,
                    f"{_task_instruction(spec)}\nCase:\n{case.input_text}\n"
                    f"Reasoning path {'-'.join(map(str, indices + (branch,)))} "
                    f"(step {level} of {depth}). Prior steps:\n{prior}\n{directive}",
                )
                new_texts = texts + [thought]
                new_score = score + _score_thought(gateway, spec, "\n".join(new_texts))
                next_paths.append((indices + (branch,), new_texts, new_score))
        paths = next_paths
    best = max(paths, key=lambda p: (p[2], tuple(-i for i in p[0])))
    payload = parse_answer(spec, _extract_final(best[1][-1]))
    return Artifact(
        spec.name, payload, "ToT",
        provenance=[f"ToT-leaf-{'-'.join(map(str, best[0]))}"],
    )


def expected_call_count(kind: str, branching: int = 3, depth: int = 2) -> int:
    """Gateway calls a strategy makes for one task (excluding Standardized)."""
    if kind in ("ICL5", "ICL10", "CoT"):
        return 1
    if kind == "ToT":
        return sum(2 * branching**level for level in range(1, depth + 1))
    raise EngineError(f"no call-count contract for {kind!r}")
