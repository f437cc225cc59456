"""Threat-data ingestion: NVD JSON feed client plus benchmark file I/O.

Only NVD is a first-class client; other sources plug in through the
SourceFetcher protocol. All tests run from bundled fixtures; network
access is optional.
"""

from __future__ import annotations

import json
import re
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Iterable, Protocol

from .ops.cvss import CvssError, parse_vector
from .registry import GoldLabel, MetricKind, ThreatCase, validate_case

_CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")

SCHEMA_VERSION = 1


class IngestError(Exception):
    pass


class UnreachableSource(IngestError):
    pass


class SchemaMismatch(IngestError):
    pass


class InsufficientFields(IngestError):
    pass


@dataclass
class SourceRecord:
    source_tag: str
    raw_document: dict
    retrieved_at: str
    canonical_id: str

    def __post_init__(self) -> None:
        if not _CVE_ID_RE.match(self.canonical_id):
            raise IngestError(f"bad canonical id {self.canonical_id!r}")


class SourceFetcher(Protocol):
    """Adapter interface for non-NVD sources."""

    source_tag: str

    def fetch(self, location: str) -> list[SourceRecord]: ...


def _read_feed(location: str) -> dict:
    try:
        if location.startswith(("http://", "https://")):
            with urllib.request.urlopen(location, timeout=30) as resp:
                return json.loads(resp.read().decode("utf-8"))
        with open(location, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as err:
        raise UnreachableSource(f"cannot read feed {location!r}: {err}") from err


def fetch_nvd(feed_location: str) -> tuple[list[SourceRecord], list[str]]:
    """Parse an NVD JSON feed; malformed entries are skipped with diagnostics."""
    feed = _read_feed(feed_location)
    if "CVE_Items" not in feed:
        raise SchemaMismatch("feed has no CVE_Items array")
    now = datetime.now(timezone.utc).isoformat(timespec="seconds")
    records: list[SourceRecord] = []
    diagnostics: list[str] = []
    for i, item in enumerate(feed["CVE_Items"]):
        try:
            cve_id = item["cve"]["CVE_data_meta"]["ID"]
        except (KeyError, TypeError):
            diagnostics.append(f"entry {i}: missing CVE id, skipped")
            continue
        try:
            records.append(
                SourceRecord(
                    source_tag="nvd",
                    raw_document=item,
                    retrieved_at=now,
                    canonical_id=cve_id,
                )
            )
        except IngestError as err:
            diagnostics.append(f"entry {i}: {err}, skipped")
    return records, diagnostics


_VECTOR_COMPONENT_GOLD = {
    "AttackVectorClassification": ("av", {"N": "Network", "A": "Adjacent",
                                          "L": "Local", "P": "Physical"}),
    "AttackComplexityClassification": ("ac", {"L": "Low", "H": "High"}),
    "PrivilegesRequirementDetection": ("pr", {"N": "None", "L": "Low", "H": "High"}),
    "UserInteractionCategorization": ("ui", {"N": "None", "R": "Required"}),
}

_IMPACT_ORDER = {"N": 0, "L": 1, "H": 2}
_IMPACT_LABEL = {"N": "None", "L": "Low", "H": "High"}


def normalize(record: SourceRecord) -> ThreatCase:
    """Turn one NVD record into a ThreatCase with derivable gold labels."""
    item = record.raw_document
    descriptions = (
        item.get("cve", {}).get("description", {}).get("description_data", [])
    )
    text = next(
        (d.get("value", "") for d in descriptions if d.get("lang", "en") == "en"),
        "",
    )
    if not text:
        raise InsufficientFields(f"{record.canonical_id}: no description")

    gold: dict[str, GoldLabel] = {}
    metric_v3 = item.get("impact", {}).get("baseMetricV3", {})
    cvss3 = metric_v3.get("cvssV3", {})
    vector_string = cvss3.get("vectorString", "")
    if vector_string:
        try:
            vector = parse_vector(vector_string)
        except CvssError as err:
            raise InsufficientFields(
                f"{record.canonical_id}: bad vector: {err}"
            ) from err
        for task, (attr, mapping) in _VECTOR_COMPONENT_GOLD.items():
            gold[task] = GoldLabel(MetricKind.ACCURACY, mapping[getattr(vector, attr)])
        gold["AttackScopeDetection"] = GoldLabel(
            MetricKind.ACCURACY, vector.scope.value
        )
        worst = max((vector.c, vector.i, vector.a), key=_IMPACT_ORDER.get)
        gold["ImpactLevelClassification"] = GoldLabel(
            MetricKind.ACCURACY, _IMPACT_LABEL[worst]
        )
        if "baseScore" in cvss3:
            gold["SeverityScoring"] = GoldLabel(
                MetricKind.DIST, float(cvss3["baseScore"])
            )
    references = [
        ref.get("url", "")
        for ref in item.get("cve", {}).get("references", {}).get("reference_data", [])
        if ref.get("url")
    ]
    if references:
        gold["AdvisoryCorrelation"] = GoldLabel(MetricKind.HIT_AT_K, references)

    case = ThreatCase(
        case_id=record.canonical_id,
        input_text=text + (f"\nCVSS vector: {vector_string}" if vector_string else ""),
        gold=gold,
        source_tag=record.source_tag,
    )
    findings = validate_case(case)
    if findings:
        raise InsufficientFields(f"{record.canonical_id}: {findings}")
    return case


# ---------------------------------------------------------------------------
# Benchmark files: JSON Lines with a one-line header record
# ---------------------------------------------------------------------------

@dataclass
class BenchmarkFile:
    cases: list[ThreatCase] = field(default_factory=list)
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        ids = [c.case_id for c in self.cases]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise IngestError(f"duplicate case ids: {sorted(dupes)}")


def _gold_to_json(gold: GoldLabel) -> dict:
    value = gold.value
    if isinstance(value, (set, frozenset)):
        value = sorted(value)
    return {"kind": gold.kind.value, "value": value}


def _gold_from_json(obj: dict) -> GoldLabel:
    return GoldLabel(MetricKind(obj["kind"]), obj["value"])


def write_benchmark(bench: BenchmarkFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(
            {"schema_version": bench.schema_version, "seed": bench.seed},
            sort_keys=True,
        ) + "\n")
        for case in bench.cases:
            findings = validate_case(case)
            if findings:
                raise IngestError(f"{case.case_id}: {findings}")
            fh.write(json.dumps(
                {
                    "case_id": case.case_id,
                    "input_text": case.input_text,
                    "source_tag": case.source_tag,
                    "gold": {t: _gold_to_json(g) for t, g in sorted(case.gold.items())},
                },
                sort_keys=True,
            ) + "\n")


def load_benchmark(path: str) -> BenchmarkFile:
    cases: list[ThreatCase] = []
    header: dict | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise IngestError(f"line {lineno}: corrupt record: {err}") from err
            if header is None:
                if "schema_version" not in rec:
                    raise IngestError(f"line {lineno}: missing header record")
                header = rec
                continue
            try:
                case = ThreatCase(
                    case_id=rec["case_id"],
                    input_text=rec["input_text"],
                    gold={t: _gold_from_json(g) for t, g in rec["gold"].items()},
                    source_tag=rec.get("source_tag", ""),
                )
            except (KeyError, ValueError) as err:
                raise IngestError(f"line {lineno}: bad case record: {err}") from err
            findings = validate_case(case)
            if findings:
                raise IngestError(f"line {lineno}: {findings}")
            cases.append(case)
    if header is None:
        raise IngestError("benchmark file has no header record")
    return BenchmarkFile(
        cases=cases,
        seed=int(header.get("seed", 0)),
        schema_version=int(header["schema_version"]),
    )


def ingest_nvd_to_benchmark(
    feed_location: str,
    limit: int | None = None,
    seed: int = 0,
) -> tuple[BenchmarkFile, list[str]]:
    records, diagnostics = fetch_nvd(feed_location)
    cases: list[ThreatCase] = []
    for record in records:
        if limit is not None and len(cases) >= limit:
            break
        try:
            cases.append(normalize(record))
        except InsufficientFields as err:
            diagnostics.append(str(err))
    return BenchmarkFile(cases=cases, seed=seed), diagnostics
