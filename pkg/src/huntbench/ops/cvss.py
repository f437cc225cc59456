"""MATH: CVSS v3.1 base-score computation and vector-string parsing.

Weight tables and the rounding rule follow the published v3.1 standard;
rounding uses integer arithmetic at 1e-5 precision to avoid float drift.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass


class Scope(enum.Enum):
    UNCHANGED = "Unchanged"
    CHANGED = "Changed"


# v3.1 metric weights.
_AV = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.20}
_AC = {"L": 0.77, "H": 0.44}
_PR_UNCHANGED = {"N": 0.85, "L": 0.62, "H": 0.27}
_PR_CHANGED = {"N": 0.85, "L": 0.68, "H": 0.50}
_UI = {"N": 0.85, "R": 0.62}
_CIA = {"H": 0.56, "L": 0.22, "N": 0.0}

_VECTOR_RE = re.compile(
    r"(?:CVSS:3\.[01]/)?"
    r"AV:(?P<AV>[NALP])/AC:(?P<AC>[LH])/PR:(?P<PR>[NLH])/UI:(?P<UI>[NR])"
    r"/S:(?P<S>[UC])/C:(?P<C>[HLN])/I:(?P<I>[HLN])/A:(?P<A>[HLN])"
)


class CvssError(ValueError):
    pass


@dataclass(frozen=True)
class CvssInput:
    """Impact weights, exploitability subscore, and scope."""

    confidentiality: float
    integrity: float
    availability: float
    exploitability: float
    scope: Scope

    def __post_init__(self) -> None:
        for name in ("confidentiality", "integrity", "availability"):
            w = getattr(self, name)
            if not (0.0 <= w <= 1.0):
                raise CvssError(f"{name} weight {w} outside [0, 1]")
        if self.exploitability < 0:
            raise CvssError("exploitability must be non-negative")


def round_up(value: float) -> float:
    """Smallest one-decimal value >= value, via 1e-5 integer arithmetic."""
    scaled = round(value * 100000)
    if scaled % 10000 == 0:
        return scaled / 100000.0
    return (math.floor(scaled / 10000) + 1) / 10.0


def cvss_impact_subscore(c: float, i: float, a: float) -> float:
    """Base impact term: 1 - (1-C)(1-I)(1-A)."""
    for name, w in (("C", c), ("I", i), ("A", a)):
        if not (0.0 <= w <= 1.0):
            raise CvssError(f"{name} weight {w} outside [0, 1]")
    return 1.0 - (1.0 - c) * (1.0 - i) * (1.0 - a)


def cvss_impact(isc_base: float, scope: Scope) -> float:
    """Scope-adjusted impact subscore."""
    if scope is Scope.UNCHANGED:
        return 6.42 * isc_base
    return 7.52 * (isc_base - 0.029) - 3.25 * (isc_base - 0.02) ** 15


def cvss_base_score(inp: CvssInput, impact: float) -> float:
    """Base score from a scope-adjusted impact and exploitability subscore."""
    isc_base = cvss_impact_subscore(
        inp.confidentiality, inp.integrity, inp.availability
    )
    if isc_base <= 0 or impact <= 0:
        return 0.0
    total = impact + inp.exploitability
    if inp.scope is Scope.UNCHANGED:
        return round_up(min(total, 10.0))
    return round_up(min(1.08 * total, 10.0))


def exploitability_subscore(av: str, ac: str, pr: str, ui: str, scope: Scope) -> float:
    pr_table = _PR_CHANGED if scope is Scope.CHANGED else _PR_UNCHANGED
    try:
        return 8.22 * _AV[av] * _AC[ac] * pr_table[pr] * _UI[ui]
    except KeyError as err:
        raise CvssError(f"unknown metric value {err}") from None


@dataclass(frozen=True)
class CvssVector:
    """Parsed v3.1 base-metric vector."""

    av: str
    ac: str
    pr: str
    ui: str
    scope: Scope
    c: str
    i: str
    a: str

    @property
    def vector_string(self) -> str:
        s = "U" if self.scope is Scope.UNCHANGED else "C"
        return (
            f"CVSS:3.1/AV:{self.av}/AC:{self.ac}/PR:{self.pr}/UI:{self.ui}"
            f"/S:{s}/C:{self.c}/I:{self.i}/A:{self.a}"
        )


def parse_vector(text: str) -> CvssVector:
    """Parse the first v3.x base vector found in ``text``."""
    match = _VECTOR_RE.search(text)
    if not match:
        raise CvssError(f"no CVSS v3 base vector found in {text[:80]!r}")
    g = match.groupdict()
    return CvssVector(
        av=g["AV"],
        ac=g["AC"],
        pr=g["PR"],
        ui=g["UI"],
        scope=Scope.UNCHANGED if g["S"] == "U" else Scope.CHANGED,
        c=g["C"],
        i=g["I"],
        a=g["A"],
    )


def score_vector(vector: CvssVector | str) -> float:
    """End-to-end base score for a vector string or parsed vector."""
    if isinstance(vector, str):
        vector = parse_vector(vector)
    inp = CvssInput(
        confidentiality=_CIA[vector.c],
        integrity=_CIA[vector.i],
        availability=_CIA[vector.a],
        exploitability=exploitability_subscore(
            vector.av, vector.ac, vector.pr, vector.ui, vector.scope
        ),
        scope=vector.scope,
    )
    isc_base = cvss_impact_subscore(
        inp.confidentiality, inp.integrity, inp.availability
    )
    return cvss_base_score(inp, cvss_impact(isc_base, vector.scope))
