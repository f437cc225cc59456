"""REX: deterministic regex extraction of structured threat indicators."""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass, field


# Hash candidates must not be embedded in longer hex runs.
_HEX_RUN = re.compile(r"(?<![0-9a-fA-F])[0-9a-fA-F]{32,64}(?![0-9a-fA-F])")
_IPV4_CAND = re.compile(r"(?<![\d.])(\d{1,3}(?:\.\d{1,3}){3})(?![\d.])")
_DOMAIN = re.compile(
    r"\b((?:[a-zA-Z0-9](?:[a-zA-Z0-9-]{0,61}[a-zA-Z0-9])?\.)+"
    r"(?:[a-zA-Z]{2,24}))\b"
)
_TIMESTAMP = re.compile(
    r"\b(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?)"
)

# Bare TLD-ish tails that show up in prose and filenames, not infrastructure.
_DOMAIN_STOPLIST = {"e.g", "i.e", "etc"}
_FILE_EXT_TAILS = {
    "exe", "dll", "bat", "ps1", "sh", "py", "js", "zip", "rar", "docx",
    "doc", "xls", "xlsx", "pdf", "txt", "tmp", "log", "dat", "bin", "lnk",
}


@dataclass
class IndicatorSet:
    """Structured indicators grouped by type; lists deduplicated and sorted."""

    ipv4: list[str] = field(default_factory=list)
    domain: list[str] = field(default_factory=list)
    md5: list[str] = field(default_factory=list)
    sha1: list[str] = field(default_factory=list)
    sha256: list[str] = field(default_factory=list)
    timestamp: list[str] = field(default_factory=list)

    def all_values(self) -> set[str]:
        return set(
            self.ipv4 + self.domain + self.md5 + self.sha1
            + self.sha256 + self.timestamp
        )

    def to_dict(self) -> dict[str, list[str]]:
        return {
            "ipv4": self.ipv4,
            "domain": self.domain,
            "md5": self.md5,
            "sha1": self.sha1,
            "sha256": self.sha256,
            "timestamp": self.timestamp,
        }


def _valid_ipv4(candidate: str) -> bool:
    try:
        ipaddress.IPv4Address(candidate)
    except ValueError:
        return False
    # Reject leading-zero octets which IPv4Address tolerates pre-3.9.5 style.
    return all(part == "0" or not part.startswith("0") for part in candidate.split("."))


def _normalize_timestamp(raw: str) -> str:
    return raw.replace(" ", "T", 1)


def rex_extract(text: str) -> IndicatorSet:
    """Extract and validate indicators; identical input gives identical output."""
    out = IndicatorSet()

    seen: dict[str, set[str]] = {k: set() for k in
                                 ("ipv4", "domain", "md5", "sha1", "sha256", "timestamp")}

    for match in _IPV4_CAND.finditer(text):
        cand = match.group(1)
        if _valid_ipv4(cand):
            seen["ipv4"].add(cand)

    for match in _HEX_RUN.finditer(text):
        run = match.group(0).lower()
        if len(run) == 32:
            seen["md5"].add(run)
        elif len(run) == 40:
            seen["sha1"].add(run)
        elif len(run) == 64:
            seen["sha256"].add(run)

    for match in _TIMESTAMP.finditer(text):
        seen["timestamp"].add(_normalize_timestamp(match.group(1)))

    for match in _DOMAIN.finditer(text):
        cand = match.group(1).lower()
        tail = cand.rsplit(".", 1)[-1]
        if cand in _DOMAIN_STOPLIST or tail in _FILE_EXT_TAILS:
            continue
        if _IPV4_CAND.fullmatch(cand):
            continue
        seen["domain"].add(cand)

    out.ipv4 = sorted(seen["ipv4"])
    out.domain = sorted(seen["domain"])
    out.md5 = sorted(seen["md5"])
    out.sha1 = sorted(seen["sha1"])
    out.sha256 = sorted(seen["sha256"])
    out.timestamp = sorted(seen["timestamp"])
    return out
