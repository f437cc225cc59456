from __future__ import annotations

import os

import pytest

from huntbench.ingest import BenchmarkFile
from huntbench.registry import GoldLabel, MetricKind, ThreatCase

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


_VECTORS = [
    ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 9.8, "Network", "Low", "None", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H", 10.0, "Network", "Low", "None", "None", "Changed", "High"),
    ("CVSS:3.1/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", 7.8, "Local", "Low", "Low", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H", 8.1, "Network", "High", "None", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:N/AC:L/PR:N/UI:R/S:C/C:L/I:L/A:N", 6.1, "Network", "Low", "None", "Required", "Changed", "Low"),
    ("CVSS:3.1/AV:N/AC:L/PR:L/UI:N/S:C/C:H/I:H/A:H", 9.9, "Network", "Low", "Low", "None", "Changed", "High"),
    ("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H", 7.5, "Network", "Low", "None", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:P/AC:L/PR:N/UI:N/S:U/C:H/I:N/A:N", 4.6, "Physical", "Low", "None", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:A/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", 8.8, "Adjacent", "Low", "None", "None", "Unchanged", "High"),
    ("CVSS:3.1/AV:L/AC:H/PR:L/UI:N/S:U/C:H/I:H/A:H", 7.0, "Local", "High", "Low", "None", "Unchanged", "High"),
]


def make_fixture_case(i: int) -> ThreatCase:
    vector, score, av, ac, pr, ui, scope, impact = _VECTORS[i % len(_VECTORS)]
    actor = f"APT{28 + i}"
    ip = f"10.0.{i}.5"
    domain = f"c2-{i}.badhost.example"
    cve = f"CVE-2024-10{i:03d}"
    text = (
        f"Incident report {i}: the group {actor} deployed Mimikatz against the "
        f"finance network. Beaconing to {ip} and {domain} was observed at "
        f"2024-03-0{(i % 9) + 1}T12:00:00Z. The intrusion exploited {cve}. "
        f"Credential dumping preceded lateral movement via PsExec. "
        f"CVSS vector: {vector}"
    )
    gold = {
        "ActorIdentification": GoldLabel(MetricKind.F1, [actor]),
        "InfrastructureExtraction": GoldLabel(MetricKind.F1, [ip, domain]),
        "MalwareIdentification": GoldLabel(MetricKind.F1, ["Mimikatz", "PsExec"]),
        "EventSequenceReconstruction": GoldLabel(
            MetricKind.SIM,
            f"{actor} used Mimikatz for credential dumping, then moved "
            f"laterally with PsExec while beaconing to {ip}.",
        ),
        "AttackVectorClassification": GoldLabel(MetricKind.ACCURACY, av),
        "AttackComplexityClassification": GoldLabel(MetricKind.ACCURACY, ac),
        "PrivilegesRequirementDetection": GoldLabel(MetricKind.ACCURACY, pr),
        "UserInteractionCategorization": GoldLabel(MetricKind.ACCURACY, ui),
        "AttackScopeDetection": GoldLabel(MetricKind.ACCURACY, scope),
        "ImpactLevelClassification": GoldLabel(MetricKind.ACCURACY, impact),
        "SeverityScoring": GoldLabel(MetricKind.DIST, score),
        "AdvisoryCorrelation": GoldLabel(
            MetricKind.HIT_AT_K,
            [f"https://advisories.example/{cve.lower()}"],
        ),
    }
    return ThreatCase(
        case_id=f"case-{i:03d}", input_text=text, gold=gold, source_tag="fixture"
    )


def make_fixture_benchmark(n: int = 10) -> BenchmarkFile:
    return BenchmarkFile(cases=[make_fixture_case(i) for i in range(n)], seed=7)


@pytest.fixture
def fixture_benchmark() -> BenchmarkFile:
    return make_fixture_benchmark()
