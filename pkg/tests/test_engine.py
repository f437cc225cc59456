import json

import pytest

from huntbench.engine import (
    Artifact,
    Engine,
    EngineError,
    MissingUpstream,
    ModuleFailure,
    RunPlan,
    payload_items,
    payload_text,
    write_transcript,
)
from huntbench.gateway import ScriptedGateway
from huntbench.graph import build_graph
from huntbench.mockprovider import make_mock_gateway
from huntbench.ops.corpus import CorpusIndex
from huntbench.ops.llm import EntitySet
from huntbench.ops.rex import IndicatorSet
from huntbench.registry import (
    TaskCategory,
    ThreatCase,
    spec,
    tasks_in_stage,
)

from conftest import make_fixture_case


def make_corpus():
    index = CorpusIndex()
    index.add("adv-mimikatz", "Advisory on Mimikatz credential dumping")
    index.add("adv-psexec", "Advisory on PsExec lateral movement")
    return index


def make_engine(**kwargs):
    return Engine(make_mock_gateway(), corpus=make_corpus(), **kwargs)


CASE = make_fixture_case(0)


class TestArtifact:
    def test_requires_provenance(self):
        with pytest.raises(EngineError):
            Artifact("t", "payload", "SUM", provenance=[])

    def test_payload_text_for_typed_payloads(self):
        es = EntitySet()
        es.add("APT28", "ThreatActor")
        assert json.loads(payload_text(es)) == {"ThreatActor": ["APT28"]}
        ind = IndicatorSet(ipv4=["10.0.0.5"])
        assert "10.0.0.5" in payload_text(ind)
        assert payload_text(("answer text", ["doc-1"])) == "answer text"
        assert payload_text(9.8) == "9.8"

    def test_payload_items_flattening(self):
        assert payload_items("a\nb; c") == ["a", "b", "c"]
        assert payload_items("- item one\n* item two") == ["item one", "item two"]
        es = EntitySet()
        es.add("b", "ThreatActor")
        es.add("a", "MalwareTool")
        assert payload_items(es) == ["a", "b"]
        assert payload_items(("x\ny", ["doc"])) == ["x", "y"]


class TestRunPlan:
    def full_plan(self):
        return RunPlan(
            case_id="c",
            selected_tasks={
                stage: [t.name for t in tasks_in_stage(stage)][:1]
                for stage in TaskCategory
            },
        )

    def test_valid_plan(self):
        self.full_plan().validate()

    def test_unknown_strategy(self):
        plan = self.full_plan()
        plan.strategy = "Telepathy"
        with pytest.raises(EngineError):
            plan.validate()

    def test_task_outside_stage(self):
        plan = self.full_plan()
        plan.selected_tasks[TaskCategory.PRIORITIZATION] = ["ActorIdentification"]
        with pytest.raises(EngineError):
            plan.validate()

    def test_complete_run_needs_response_tasks(self):
        plan = self.full_plan()
        plan.selected_tasks[TaskCategory.RESPONSE_MITIGATION] = []
        with pytest.raises(EngineError, match="response stage"):
            plan.validate()

    def test_partial_run_may_skip_response(self):
        RunPlan(
            case_id="c",
            selected_tasks={
                TaskCategory.THREAT_ATTRIBUTION: ["ActorIdentification"]
            },
        ).validate()


class TestSelectTasks:
    def test_parses_reply_formats(self):
        engine = make_engine()
        stage = TaskCategory.THREAT_ATTRIBUTION
        gw = ScriptedGateway(
            default="Actor Identification; MalwareIdentification\nnot-a-task"
        )
        engine.gateway = gw
        chosen = engine.select_tasks(CASE, stage, [])
        assert chosen == ["ActorIdentification", "MalwareIdentification"]

    def test_garbage_reply_falls_back_to_full_stage(self):
        engine = make_engine()
        engine.gateway = ScriptedGateway(default="no recognizable names at all")
        chosen = engine.select_tasks(CASE, TaskCategory.PRIORITIZATION, [])
        assert chosen == [t.name for t in tasks_in_stage(TaskCategory.PRIORITIZATION)]

    def test_dedupes_repeated_mentions(self):
        engine = make_engine()
        engine.gateway = ScriptedGateway(default="SeverityScoring; SeverityScoring")
        chosen = engine.select_tasks(CASE, TaskCategory.PRIORITIZATION, [])
        assert chosen == ["SeverityScoring"]


class TestRunTask:
    def test_deterministic_task_rex_only(self):
        engine = make_engine()
        artifact = engine.run_task(CASE, spec("TemporalPatternMatching"), [])
        assert isinstance(artifact.payload, IndicatorSet)
        assert artifact.payload.timestamp == ["2024-03-01T12:00:00Z"]
        assert artifact.kind == "REX"

    def test_math_scores_vector_from_case(self):
        engine = make_engine()
        artifact = engine.run_task(CASE, spec("SeverityScoring"), [])
        assert artifact.payload == 9.8

    def test_math_fails_cleanly_without_vector(self):
        engine = make_engine()
        case = ThreatCase("no-vec", "Plain text with no vector.", {})
        with pytest.raises(ModuleFailure) as exc:
            engine.run_task(case, spec("SeverityScoring"), [])
        assert exc.value.module.value == "MATH"

    def test_missing_upstream_raises(self):
        engine = make_engine()
        graph = build_graph()
        with pytest.raises(MissingUpstream, match="FileSystemActivityDetection"):
            engine.run_task(
                CASE, spec("AttackComplexityClassification"), [], graph=graph
            )

    def test_provenance_one_invocation_per_module(self):
        engine = make_engine()
        task = spec("InfrastructureExtraction")  # NER, REX, SUM
        artifact, provenance = engine._run_task_with_provenance(CASE, task, [])
        assert [inv.module for inv in provenance] == ["NER", "REX", "SUM"]
        assert artifact.provenance == [inv.invocation_id for inv in provenance]
        assert all(inv.task == task.name for inv in provenance)


def full_plan_all_tasks():
    return RunPlan(
        case_id=CASE.case_id,
        selected_tasks={
            stage: [t.name for t in tasks_in_stage(stage)] for stage in TaskCategory
        },
    )


class TestRunCase:
    def test_full_run_produces_artifacts_per_stage(self):
        engine = make_engine()
        result = engine.run_case(CASE, full_plan_all_tasks(), build_graph())
        assert len(result.artifacts) + len(result.failures) == 30
        # Every stage contributed at least one artifact.
        stages_hit = {spec(n).category for n in result.artifacts}
        assert stages_hit == set(TaskCategory)

    def test_one_task_per_stage_yields_four_artifacts(self):
        engine = make_engine()
        plan = RunPlan(
            case_id=CASE.case_id,
            selected_tasks={
                TaskCategory.THREAT_ATTRIBUTION: ["ActorIdentification"],
                TaskCategory.BEHAVIOR_ANALYSIS: ["EventSequenceReconstruction"],
                TaskCategory.PRIORITIZATION: ["SeverityScoring"],
                TaskCategory.RESPONSE_MITIGATION: ["PlaybookRecommendation"],
            },
        )
        result = engine.run_case(CASE, plan, build_graph())
        assert set(result.artifacts) == {
            "ActorIdentification",
            "EventSequenceReconstruction",
            "SeverityScoring",
            "PlaybookRecommendation",
        }
        assert result.failures == {}

    def test_closure_injection(self):
        engine = make_engine()
        plan = RunPlan(
            case_id=CASE.case_id,
            selected_tasks={
                TaskCategory.PRIORITIZATION: ["AttackComplexityClassification"],
            },
        )
        result = engine.run_case(CASE, plan, build_graph())
        # Fine-edge parents were auto-injected and ran first.
        assert "FileSystemActivityDetection" in result.artifacts
        assert "ExecutionContextAnalysis" in result.artifacts
        assert "AttackComplexityClassification" in result.artifacts

    def test_failure_does_not_abort_siblings(self):
        engine = make_engine()
        case = ThreatCase(
            "no-vec",
            "APT28 ran Mimikatz here. No vector appears in this text.",
            {},
        )
        plan = RunPlan(
            case_id=case.case_id,
            selected_tasks={
                TaskCategory.PRIORITIZATION: [
                    "SeverityScoring", "AttackVectorClassification",
                ],
            },
        )
        result = engine.run_case(case, plan, build_graph())
        assert "SeverityScoring" in result.failures
        assert "AttackVectorClassification" in result.artifacts

    def test_determinism_same_plan_same_payloads(self):
        r1 = make_engine().run_case(CASE, full_plan_all_tasks(), build_graph())
        r2 = make_engine().run_case(CASE, full_plan_all_tasks(), build_graph())
        assert set(r1.artifacts) == set(r2.artifacts)
        for name in r1.artifacts:
            assert payload_text(r1.artifacts[name].payload) == \
                payload_text(r2.artifacts[name].payload), name

    def test_replay_is_bit_identical(self, tmp_path):
        from huntbench.gateway import ReplayGateway

        path = str(tmp_path / "gw.jsonl")
        live = Engine(make_mock_gateway(transcript_path=path), corpus=make_corpus())
        r1 = live.run_case(CASE, full_plan_all_tasks(), build_graph())

        replay = Engine(ReplayGateway(path), corpus=make_corpus())
        r2 = replay.run_case(CASE, full_plan_all_tasks(), build_graph())
        assert set(r1.artifacts) == set(r2.artifacts)
        for name in r1.artifacts:
            assert payload_text(r1.artifacts[name].payload) == \
                payload_text(r2.artifacts[name].payload), name


def test_plan_with_llm_covers_all_stages():
    engine = make_engine()
    plan = engine.plan_with_llm(CASE)
    assert set(plan.selected_tasks) == set(TaskCategory)
    for stage, names in plan.selected_tasks.items():
        assert names
        stage_names = {t.name for t in tasks_in_stage(stage)}
        assert set(names) <= stage_names


def test_write_transcript(tmp_path):
    engine = make_engine()
    _, provenance = engine._run_task_with_provenance(
        CASE, spec("InfrastructureExtraction"), []
    )
    path = str(tmp_path / "trace.jsonl")
    write_transcript(provenance, path)
    with open(path) as fh:
        records = [json.loads(line) for line in fh]
    assert [r["module"] for r in records] == ["NER", "REX", "SUM"]
    assert all(r["task"] == "InfrastructureExtraction" for r in records)
