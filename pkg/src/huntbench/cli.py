"""Command-line harness: ingest feeds, run evaluations, measure runtime."""

from __future__ import annotations

import argparse
import os
import sys
import time

from .engine import Engine
from .gateway import Gateway, HttpChatGateway, ReplayGateway
from .ingest import IngestError, UnreachableSource, ingest_nvd_to_benchmark, load_benchmark, write_benchmark
from .mockprovider import make_mock_gateway
from .noise import NoiseKind, NoiseSpec, semantic_noise, token_noise
from .ops.corpus import CorpusIndex
from .registry import MetricKind, ThreatCase, spec as task_spec
from .reporting import ResultStore
from .sandboxio import run_sandbox
from .scoring import score_artifact
from .strategies import answer_task, load_exemplar_pool


def _build_gateway(args) -> Gateway:
    if args.mock_transcript:
        return ReplayGateway(args.mock_transcript)
    if args.provider == "mock":
        return make_mock_gateway()
    if args.provider == "http":
        return HttpChatGateway()
    raise SystemExit(f"unknown provider {args.provider!r}")


def _build_corpus(cases: list[ThreatCase]) -> CorpusIndex:
    """Offline advisory corpus assembled from case gold reference sets."""
    index = CorpusIndex()
    for case in cases:
        for task, gold in case.gold.items():
            if gold.kind is MetricKind.HIT_AT_K:
                for item in gold.value:
                    index.add(item, f"{item}\nReferenced by {case.case_id}.")
        index.add(f"case:{case.case_id}", case.input_text)
    return index


def _apply_noise(case: ThreatCase, noise: NoiseSpec | None, gateway) -> ThreatCase:
    if noise is None:
        return case
    if noise.kind is NoiseKind.TOKEN_LEVEL:
        noisy = token_noise(case.input_text, noise)
    else:
        noisy = semantic_noise(case.input_text, noise, gateway)
    return ThreatCase(case.case_id, noisy, case.gold, case.source_tag)


def _parse_noise(raw: str | None) -> NoiseSpec | None:
    if not raw:
        return None
    kind_s, _, ratio_s = raw.partition(":")
    kind = {"token": NoiseKind.TOKEN_LEVEL, "semantic": NoiseKind.SEMANTIC_LEVEL}.get(
        kind_s.lower()
    )
    if kind is None:
        raise SystemExit(f"unknown noise kind {kind_s!r}")
    return NoiseSpec(kind=kind, ratio=float(ratio_s or 0))


def _scoreable_tasks(case: ThreatCase, tasks_filter: set[str] | None) -> list[str]:
    names = sorted(case.gold)
    if tasks_filter:
        names = [n for n in names if n in tasks_filter]
    return names


def _evaluate(args, timing: dict | None = None) -> tuple[ResultStore, int]:
    bench = load_benchmark(args.benchmark)
    cases = bench.cases[: args.limit] if args.limit else bench.cases
    if not cases:
        print("error: benchmark contains no cases", file=sys.stderr)
        raise SystemExit(2)
    gateway = _build_gateway(args)
    corpus = _build_corpus(cases)
    engine = Engine(gateway, corpus=corpus)
    noise = _parse_noise(args.noise)
    tasks_filter = set(args.tasks.split(",")) if args.tasks else None
    exemplars = load_exemplar_pool(args.exemplars) if args.exemplars else []
    sandbox_eval = None
    if args.sandbox_exe:
        def sandbox_eval(patch, tests):  # noqa: E731 - closure over args
            report = run_sandbox(patch, tests, args.sandbox_exe.split())
            return report.per_test

    store = ResultStore()
    aborted = 0
    from .graph import build_graph

    graph = build_graph()
    for case in cases:
        try:
            noisy_case = _apply_noise(case, noise, gateway)
            to_score = _scoreable_tasks(case, tasks_filter)
            for strategy in args.strategy:
                t0 = time.monotonic()
                if strategy == "Standardized":
                    plan = engine.plan_with_llm(noisy_case, seed=args.seed)
                    result = engine.run_case(noisy_case, plan, graph)
                    artifacts = result.artifacts
                    for task in to_score:
                        if task in artifacts:
                            mr = score_artifact(
                                task_spec(task), artifacts[task], case.gold[task],
                                sandbox_evaluate=sandbox_eval,
                            )
                            store.add(case.case_id, strategy, mr)
                        else:
                            store.add_failure(
                                case.case_id, strategy, task,
                                result.failures.get(task, "not-selected"),
                            )
                else:
                    for task in to_score:
                        try:
                            artifact = answer_task(
                                noisy_case, task_spec(task), strategy, gateway,
                                exemplar_pool=exemplars, engine=engine,
                                seed=args.seed,
                            )
                            mr = score_artifact(
                                task_spec(task), artifact, case.gold[task],
                                sandbox_evaluate=sandbox_eval,
                            )
                            store.add(case.case_id, strategy, mr)
                        except Exception as err:
                            store.add_failure(case.case_id, strategy, task, str(err))
                if timing is not None:
                    timing.setdefault(strategy, []).append(time.monotonic() - t0)
        except Exception as err:  # case-level abort; siblings continue
            print(f"case {case.case_id} aborted: {err}", file=sys.stderr)
            aborted += 1
    return store, aborted


def cmd_run(args) -> int:
    store, aborted = _evaluate(args)
    os.makedirs(args.out, exist_ok=True)
    store.write_jsonl(os.path.join(args.out, "results.jsonl"))
    table = store.render_table()
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return 1 if aborted else 0


def cmd_time(args) -> int:
    timing: dict[str, list[float]] = {}
    _, aborted = _evaluate(args, timing=timing)
    os.makedirs(args.out, exist_ok=True)
    lines = ["# mean wall seconds per case per strategy"]
    for strategy in sorted(timing):
        times = timing[strategy]
        lines.append(f"{strategy:<14}{sum(times) / len(times):>10.3f}")
    table = "\n".join(lines) + "\n"
    with open(os.path.join(args.out, "timing.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")
    return 1 if aborted else 0


def cmd_ingest(args) -> int:
    try:
        bench, diagnostics = ingest_nvd_to_benchmark(
            args.feed, limit=args.limit, seed=args.seed
        )
    except UnreachableSource as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except IngestError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for diag in diagnostics:
        print(f"note: {diag}", file=sys.stderr)
    write_benchmark(bench, args.out)
    print(f"wrote {len(bench.cases)} cases to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="huntbench")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--benchmark", required=True)
        p.add_argument("--strategy", action="append", required=True,
                       choices=["Standardized", "ICL5", "ICL10", "CoT", "ToT"])
        p.add_argument("--tasks", default="")
        p.add_argument("--noise", default="", help="kind:ratio, e.g. token:0.1")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--provider", default="mock", choices=["mock", "http"])
        p.add_argument("--mock-transcript", default="")
        p.add_argument("--exemplars", default="")
        p.add_argument("--sandbox-exe", default="")
        p.add_argument("--out", required=True)
        p.add_argument("--limit", type=int, default=0)

    p_run = sub.add_parser("run", help="evaluate strategies and emit reports")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_time = sub.add_parser("time", help="measure per-strategy wall time")
    common(p_time)
    p_time.set_defaults(func=cmd_time)

    p_ingest = sub.add_parser("ingest", help="build a benchmark from an NVD feed")
    p_ingest.add_argument("feed")
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument("--limit", type=int, default=None)
    p_ingest.add_argument("--seed", type=int, default=0)
    p_ingest.set_defaults(func=cmd_ingest)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
