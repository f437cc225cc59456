"""Task taxonomy, module taxonomy, and the static task registry.

The registry maps each of the 30 threat-hunting tasks to its lifecycle
stage, its ordered module sequence, and the metric used to score it.
It is immutable after import and safe for concurrent reads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping


class TaskCategory(enum.Enum):
    """The four lifecycle stages, ordered by stage index."""

    THREAT_ATTRIBUTION = 1
    BEHAVIOR_ANALYSIS = 2
    PRIORITIZATION = 3
    RESPONSE_MITIGATION = 4

    @property
    def stage_index(self) -> int:
        return self.value


class ModuleKind(str, enum.Enum):
    NER = "NER"
    REX = "REX"
    SUM = "SUM"
    SIM = "SIM"
    MAP = "MAP"
    RAG = "RAG"
    SPA = "SPA"
    CLS = "CLS"
    MATH = "MATH"

    @property
    def deterministic(self) -> bool:
        return self in (ModuleKind.REX, ModuleKind.MATH)


class MetricKind(str, enum.Enum):
    F1 = "F1"
    ACCURACY = "Accuracy"
    SIM = "Sim"
    HIT_AT_K = "HitAtK"
    PASS = "Pass"
    DIST = "Dist"


#: Default parameters for parameterized metrics.
DEFAULT_HIT_K = 10
DEFAULT_DIST_RANGE = 10.0


@dataclass(frozen=True)
class TaskSpec:
    """One task's contract: stage, module pipeline, metric, and target."""

    name: str
    category: TaskCategory
    modules: tuple[ModuleKind, ...]
    metric: MetricKind
    target_description: str
    label_set: tuple[str, ...] = ()
    metric_params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.modules:
            raise ValueError(f"task {self.name} has an empty module sequence")


def _t(name, category, modules, metric, target, labels=(), **params):
    return TaskSpec(
        name=name,
        category=category,
        modules=tuple(ModuleKind(m) for m in modules),
        metric=metric,
        target_description=target,
        label_set=tuple(labels),
        metric_params=dict(params),
    )


_ATTR = TaskCategory.THREAT_ATTRIBUTION
_BEHV = TaskCategory.BEHAVIOR_ANALYSIS
_PRIO = TaskCategory.PRIORITIZATION
_RESP = TaskCategory.RESPONSE_MITIGATION

_TASKS: tuple[TaskSpec, ...] = (
    # --- Threat attribution (stage 1) ---
    _t("MalwareIdentification", _ATTR, ["NER", "SUM"], MetricKind.F1,
       "Malware delivery mechanisms or toolset used in the incident"),
    _t("SignatureMatching", _ATTR, ["NER", "SIM"], MetricKind.F1,
       "Techniques matching known threat-group signatures"),
    _t("TemporalPatternMatching", _ATTR, ["REX"], MetricKind.SIM,
       "Timestamps revealing known adversary work schedules"),
    _t("AffiliationLinking", _ATTR, ["NER", "MAP"], MetricKind.F1,
       "Source organizations affiliated with the activity"),
    _t("GeographicAnalysis", _ATTR, ["NER", "SIM"], MetricKind.F1,
       "Geographic or cultural indicators of threat origin"),
    _t("VictimologyProfiling", _ATTR, ["NER", "REX"], MetricKind.F1,
       "Targeted victims and plausible attacker motives"),
    _t("InfrastructureExtraction", _ATTR, ["NER", "REX", "SUM"], MetricKind.F1,
       "Domains, IPs, URLs, and file hashes used as attack infrastructure"),
    _t("ActorIdentification", _ATTR, ["NER", "RAG", "MAP"], MetricKind.F1,
       "The threat group or actor behind the activity (e.g., APT28)"),
    _t("CampaignCorrelation", _ATTR, ["NER", "MAP"], MetricKind.F1,
       "Related threat campaigns or prior incidents"),
    # --- Behavior analysis (stage 2) ---
    _t("FileSystemActivityDetection", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Suspicious file creation, deletion, or access activity"),
    _t("NetworkBehaviorProfiling", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Patterns of external communication such as C2 traffic"),
    _t("CredentialAccessDetection", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Theft or misuse of credentials"),
    _t("ExecutionContextAnalysis", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Execution behaviors attributed to users or processes"),
    _t("CommandScriptAnalysis", _BEHV, ["SPA", "NER", "SUM"], MetricKind.F1,
       "Suspicious commands or scripts observed in the activity"),
    _t("PrivilegeEscalationInference", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Privilege escalation attempts"),
    _t("EvasionBehaviorDetection", _BEHV, ["SPA", "NER", "SUM"], MetricKind.SIM,
       "Evasion or obfuscation techniques"),
    _t("EventSequenceReconstruction", _BEHV, ["SUM"], MetricKind.SIM,
       "Timeline of attack-related events"),
    _t("TTPExtraction", _BEHV, ["RAG", "MAP"], MetricKind.F1,
       "Adversary tactics, techniques, and procedures"),
    # --- Prioritization (stage 3) ---
    _t("AttackVectorClassification", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "The exploitation vector required to reach the vulnerable component",
       labels=("Network", "Adjacent", "Local", "Physical")),
    _t("AttackComplexityClassification", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "The level of hurdles required to carry out the attack",
       labels=("Low", "High")),
    _t("PrivilegesRequirementDetection", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "The level of access privileges an attacker needs",
       labels=("None", "Low", "High")),
    _t("UserInteractionCategorization", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "Whether exploitation requires user participation",
       labels=("None", "Required")),
    _t("AttackScopeDetection", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "Whether the vulnerability affects one or multiple components",
       labels=("Unchanged", "Changed")),
    _t("ImpactLevelClassification", _PRIO, ["SUM", "CLS"], MetricKind.ACCURACY,
       "Worst-case consequences on confidentiality, integrity, availability",
       labels=("None", "Low", "High")),
    _t("SeverityScoring", _PRIO, ["SUM", "MATH"], MetricKind.DIST,
       "A numerical score indicating overall attack severity",
       R=DEFAULT_DIST_RANGE),
    # --- Response & mitigation (stage 4) ---
    _t("PlaybookRecommendation", _RESP, ["RAG", "SUM"], MetricKind.HIT_AT_K,
       "Relevant response actions for the identified threat type",
       k=DEFAULT_HIT_K),
    _t("SecurityControlAdjustment", _RESP, ["RAG", "SUM"], MetricKind.SIM,
       "Firewall rules, EDR settings, or group policy changes"),
    _t("PatchCodeGeneration", _RESP, ["RAG", "SUM"], MetricKind.PASS,
       "Code snippets that patch the vulnerability"),
    _t("PatchToolSuggestion", _RESP, ["RAG", "SUM"], MetricKind.HIT_AT_K,
       "Security tools or utilities that remediate the threat",
       k=DEFAULT_HIT_K),
    _t("AdvisoryCorrelation", _RESP, ["RAG", "SUM"], MetricKind.HIT_AT_K,
       "Security advisories or best practices relevant to the threat",
       k=DEFAULT_HIT_K),
)

_BY_NAME: dict[str, TaskSpec] = {t.name: t for t in _TASKS}
assert len(_BY_NAME) == 30


def registry() -> list[TaskSpec]:
    """All 30 task specs, ordered by (stage index, name)."""
    return sorted(_TASKS, key=lambda t: (t.category.stage_index, t.name))


def spec(name: str) -> TaskSpec:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown task: {name!r}") from None


def task_names() -> list[str]:
    return [t.name for t in registry()]


def tasks_in_stage(category: TaskCategory) -> list[TaskSpec]:
    return [t for t in registry() if t.category is category]


def normalize_task_name(raw: str) -> str | None:
    """Map a free-form task mention to a registry name, or None."""
    key = "".join(ch for ch in raw.lower() if ch.isalnum())
    for name in _BY_NAME:
        if "".join(ch for ch in name.lower() if ch.isalnum()) == key:
            return name
    return None


# ---------------------------------------------------------------------------
# Gold labels and case validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GoldLabel:
    """Tagged gold payload; the tag must match the task's metric kind."""

    kind: MetricKind
    value: Any

    def shape_ok(self) -> bool:
        v = self.value
        if self.kind in (MetricKind.F1, MetricKind.HIT_AT_K):
            return isinstance(v, (list, tuple, set, frozenset)) and all(
                isinstance(x, str) for x in v
            )
        if self.kind in (MetricKind.ACCURACY, MetricKind.SIM):
            return isinstance(v, str) and bool(v)
        if self.kind is MetricKind.DIST:
            return isinstance(v, (int, float)) and not isinstance(v, bool)
        if self.kind is MetricKind.PASS:
            # Either a test-suite source or a stored sandbox report.
            return isinstance(v, dict) and ("test_source" in v or "per_test" in v)
        return False


@dataclass
class ThreatCase:
    """One benchmark instance: raw threat text plus per-task gold labels."""

    case_id: str
    input_text: str
    gold: dict[str, GoldLabel] = field(default_factory=dict)
    source_tag: str = ""

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ThreatCase):
            return NotImplemented
        return (
            self.case_id == other.case_id
            and self.input_text == other.input_text
            and self.source_tag == other.source_tag
            and set(self.gold) == set(other.gold)
            and all(
                self.gold[k].kind == other.gold[k].kind
                and _canon(self.gold[k].value) == _canon(other.gold[k].value)
                for k in self.gold
            )
        )


def _canon(value: Any) -> Any:
    if isinstance(value, (list, tuple, set, frozenset)):
        return tuple(sorted(str(x) for x in value))
    return value


def validate_case(case: ThreatCase) -> list[str]:
    """Return validation findings; empty list means the case is well formed."""
    findings: list[str] = []
    if not case.input_text:
        findings.append("empty-input")
    for task_name, gold in case.gold.items():
        if task_name not in _BY_NAME:
            findings.append(f"unknown-task:{task_name}")
            continue
        expected = _BY_NAME[task_name].metric
        if gold.kind is not expected:
            findings.append(f"shape-mismatch:{task_name}")
        elif not gold.shape_ok():
            findings.append(f"shape-mismatch:{task_name}")
    return findings


# ---------------------------------------------------------------------------
# Plain-text registry configuration (override without code changes)
# ---------------------------------------------------------------------------

def dump_registry_config(specs: Iterable[TaskSpec] | None = None) -> str:
    """Serialize the registry as one `task = modules | metric` record per line."""
    lines = ["# task = stage | modules | metric"]
    for t in specs if specs is not None else registry():
        mods = ",".join(m.value for m in t.modules)
        lines.append(
            f"{t.name} = {t.category.stage_index} | {mods} | {t.metric.value}"
        )
    return "\n".join(lines) + "\n"


def load_registry_config(text: str) -> list[TaskSpec]:
    """Parse a registry config, applying overrides on top of the defaults."""
    specs = {t.name: t for t in registry()}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            name, rhs = (part.strip() for part in line.split("=", 1))
            stage_s, mods_s, metric_s = (p.strip() for p in rhs.split("|"))
        except ValueError:
            raise ValueError(f"line {lineno}: malformed registry record") from None
        if name not in specs:
            raise ValueError(f"line {lineno}: unknown task {name!r}")
        base = specs[name]
        if int(stage_s) != base.category.stage_index:
            raise ValueError(f"line {lineno}: stage mismatch for {name}")
        specs[name] = TaskSpec(
            name=base.name,
            category=base.category,
            modules=tuple(ModuleKind(m.strip()) for m in mods_s.split(",")),
            metric=MetricKind(metric_s),
            target_description=base.target_description,
            label_set=base.label_set,
            metric_params=base.metric_params,
        )
    return sorted(specs.values(), key=lambda t: (t.category.stage_index, t.name))
