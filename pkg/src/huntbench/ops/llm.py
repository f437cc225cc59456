"""The seven LLM-backed operational modules.

Each op issues its template prompt, parses the reply into a typed result,
and validates the result before it can propagate. Unparseable replies get
one repair retry (re-prompt with the expected schema and the bad output).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from ..gateway import Gateway
from .corpus import CorpusIndex

ENTITY_CLASSES = ("ThreatActor", "MalwareTool", "Vulnerability", "Infrastructure")


class OpError(Exception):
    pass


class ParseFailure(OpError):
    pass


def load_prompt(name: str) -> str:
    return (
        resources.files("huntbench.ops").joinpath("prompts", f"{name}.txt")
        .read_text(encoding="utf-8")
        .strip()
    )


def _extract_json(reply: str):
    """Pull the first JSON object or array out of a possibly chatty reply."""
    decoder = json.JSONDecoder()
    for start in range(len(reply)):
        if reply[start] in "[{":
            try:
                value, _ = decoder.raw_decode(reply[start:])
                return value
            except json.JSONDecodeError:
                continue
    raise ParseFailure(f"no JSON payload in reply: {reply[:120]!r}")


def _complete_with_repair(gateway: Gateway, system: str, user: str, parse):
    """Run parse() on the reply; on failure, retry once with a repair prompt."""
    reply = gateway.complete(system, user)
    try:
        return parse(reply)
    except ParseFailure:
        repair = (
            f"{user}\n\nYour previous reply could not be parsed:\n{reply}\n"
            "Reply again using exactly the output format requested above."
        )
        return parse(gateway.complete(system, repair))


# ---------------------------------------------------------------------------
# NER
# ---------------------------------------------------------------------------

@dataclass
class EntitySet:
    """Entities grouped by class; (surface, class) pairs deduplicated."""

    entities: dict[str, list[str]] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def add(self, surface: str, cls: str) -> None:
        bucket = self.entities.setdefault(cls, [])
        if surface not in bucket:
            bucket.append(surface)

    def all_surfaces(self) -> set[str]:
        return {s for bucket in self.entities.values() for s in bucket}

    def to_dict(self) -> dict[str, list[str]]:
        return {cls: sorted(self.entities.get(cls, [])) for cls in ENTITY_CLASSES
                if self.entities.get(cls)}


def ner_extract(text: str, gateway: Gateway) -> EntitySet:
    """Extract attribution entities; hallucinated surfaces are dropped."""
    if not text.strip():
        return EntitySet()
    system = load_prompt("ner")

    def parse(reply: str) -> EntitySet:
        payload = _extract_json(reply)
        if not isinstance(payload, dict):
            raise ParseFailure("entity reply is not a JSON object")
        result = EntitySet()
        for cls, surfaces in payload.items():
            if cls not in ENTITY_CLASSES or not isinstance(surfaces, list):
                continue
            for surface in surfaces:
                if not isinstance(surface, str) or not surface:
                    continue
                if surface in text:
                    result.add(surface, cls)
                else:
                    result.diagnostics.append(f"dropped-hallucinated:{surface}")
        return result

    return _complete_with_repair(gateway, system, f"Text:\n{text}", parse)


# ---------------------------------------------------------------------------
# SUM
# ---------------------------------------------------------------------------

def sum_summarize(
    text: str, focus: str, gateway: Gateway, max_chars: int = 1200
) -> str:
    """Focused summary, truncated at a sentence boundary if over length."""
    if not text.strip():
        raise OpError("empty-input")
    system = load_prompt("sum")
    user = f"Focus: {focus}\n\nReport:\n{text}"
    reply = gateway.complete(system, user).strip()
    if not reply:
        raise ParseFailure("empty summary")
    if len(reply) > max_chars:
        cut = reply[:max_chars]
        boundary = max(cut.rfind(". "), cut.rfind(".\n"), cut.rfind("."))
        reply = cut[: boundary + 1] if boundary > 0 else cut
    return reply


# ---------------------------------------------------------------------------
# SIM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimVerdict:
    match: bool
    confidence: float
    justification: str

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise OpError(f"confidence {self.confidence} outside [0, 1]")


def sim_match(a: str, b: str, gateway: Gateway) -> SimVerdict:
    if not a.strip() or not b.strip():
        raise OpError("empty-input")
    system = load_prompt("sim")
    user = f"Phrase A: {a}\nPhrase B: {b}"

    def parse(reply: str) -> SimVerdict:
        payload = _extract_json(reply)
        if not isinstance(payload, dict) or "match" not in payload:
            raise ParseFailure("similarity reply missing 'match'")
        try:
            return SimVerdict(
                match=bool(payload["match"]),
                confidence=float(payload.get("confidence", 0.0)),
                justification=str(payload.get("justification", "")),
            )
        except (TypeError, ValueError) as err:
            raise ParseFailure(str(err)) from err

    return _complete_with_repair(gateway, system, user, parse)


# ---------------------------------------------------------------------------
# MAP
# ---------------------------------------------------------------------------

@dataclass
class TripleSet:
    triples: list[tuple[str, str, str]] = field(default_factory=list)
    confidences: dict[tuple[str, str, str], float] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def add(self, s: str, p: str, o: str, confidence: float | None = None) -> None:
        triple = (s, p, o)
        if triple not in self.triples:
            self.triples.append(triple)
        if confidence is not None:
            self.confidences[triple] = confidence


def map_triples(text: str, gateway: Gateway) -> TripleSet:
    if not text.strip():
        return TripleSet()
    system = load_prompt("map")

    def parse(reply: str) -> TripleSet:
        payload = _extract_json(reply)
        if not isinstance(payload, list):
            raise ParseFailure("mapping reply is not a JSON list")
        result = TripleSet()
        for item in payload:
            if not isinstance(item, list) or len(item) < 3:
                result.diagnostics.append(f"dropped-malformed:{item!r}")
                continue
            s, p, o = (str(x).strip() for x in item[:3])
            if not (s and p and o):
                result.diagnostics.append(f"dropped-empty-element:{item!r}")
                continue
            conf = None
            if len(item) >= 4:
                try:
                    conf = float(item[3])
                except (TypeError, ValueError):
                    conf = None
                if conf is not None and not (0.0 <= conf <= 1.0):
                    conf = None
            result.add(s, p, o, conf)
        return result

    return _complete_with_repair(gateway, system, f"Text:\n{text}", parse)


# ---------------------------------------------------------------------------
# RAG
# ---------------------------------------------------------------------------

def rag_answer(
    question: str,
    index: CorpusIndex,
    gateway: Gateway,
    top_n: int = 5,
) -> tuple[str, list[str]]:
    """Query formulation, lexical retrieval, grounded generation."""
    if not question.strip():
        raise OpError("empty-input")
    query = gateway.complete(load_prompt("rag_query"), f"Topic: {question}").strip()
    ranked = index.rank(query or question, top_n=top_n)
    evidence_ids = [doc_id for doc_id, _ in ranked]
    docs = "\n\n".join(
        f"[{doc_id}]\n{index.documents[doc_id]}" for doc_id in evidence_ids
    )
    answer = gateway.complete(
        load_prompt("rag_answer"),
        f"Question: {question}\n\nRetrieved documents:\n{docs}",
    ).strip()
    if not answer:
        raise ParseFailure("empty grounded answer")
    return answer, evidence_ids


# ---------------------------------------------------------------------------
# SPA
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpanResult:
    text: str
    start: int
    end: int

    def verify(self, source: str) -> None:
        if not (0 <= self.start < self.end <= len(source)):
            raise OpError(f"span [{self.start}, {self.end}) outside source")
        if source[self.start : self.end] != self.text:
            raise OpError("span text does not equal the source slice")


def _nearest_window_match(source: str, needle: str, max_ratio: float = 0.3):
    """Best same-length window by edit distance, within a distance budget."""
    n = len(needle)
    if n == 0 or n > len(source):
        return None
    budget = max(1, int(n * max_ratio))
    best = None
    for start in range(len(source) - n + 1):
        window = source[start : start + n]
        dist = _edit_distance_capped(window, needle, budget)
        if dist is not None and (best is None or dist < best[0]):
            best = (dist, start)
            if dist == 0:
                break
    if best is None:
        return None
    return best[1]


def _edit_distance_capped(a: str, b: str, cap: int) -> int | None:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        row_min = i
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
            row_min = min(row_min, cur[j])
        if row_min > cap:
            return None
        prev = cur
    return prev[-1] if prev[-1] <= cap else None


def spa_locate(text: str, instruction: str, gateway: Gateway) -> SpanResult:
    """Locate a span; first occurrence wins when the phrase repeats."""
    if not text.strip():
        raise OpError("empty-input")
    system = load_prompt("spa")
    user = f"Instruction: {instruction}\n\nExcerpt:\n{text}"

    def parse(reply: str) -> SpanResult:
        phrase = reply.strip().strip('"')
        if not phrase:
            raise ParseFailure("empty span reply")
        start = text.find(phrase)
        if start < 0:
            near = _nearest_window_match(text, phrase)
            if near is None:
                raise ParseFailure(f"span not found in source: {phrase[:80]!r}")
            start = near
            phrase = text[start : start + len(phrase)]
        span = SpanResult(text=phrase, start=start, end=start + len(phrase))
        span.verify(text)
        return span

    return _complete_with_repair(gateway, system, user, parse)


# ---------------------------------------------------------------------------
# CLS
# ---------------------------------------------------------------------------

def _norm_label(label: str) -> str:
    return re.sub(r"[^a-z0-9]", "", label.lower())


def cls_classify(text: str, label_set: tuple[str, ...], gateway: Gateway) -> str:
    """Classify into one of label_set; singleton label sets short-circuit."""
    if not label_set:
        raise OpError("empty label set")
    if len(label_set) == 1:
        return label_set[0]
    if not text.strip():
        raise OpError("empty-input")
    system = load_prompt("cls")
    user = f"Allowed labels: {', '.join(label_set)}\n\nText:\n{text}"
    lookup = {_norm_label(lbl): lbl for lbl in label_set}

    def parse(reply: str) -> str:
        candidate = _norm_label(reply.strip().splitlines()[-1] if reply.strip() else "")
        if candidate in lookup:
            return lookup[candidate]
        # A verbose reply may still end with the label.
        for norm, label in lookup.items():
            if candidate.endswith(norm):
                return label
        raise ParseFailure(f"label outside allowed set: {reply[:80]!r}")

    return _complete_with_repair(gateway, system, user, parse)
