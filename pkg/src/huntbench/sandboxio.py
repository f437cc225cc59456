"""Client for the out-of-process patch sandbox.

The sandbox is a standalone executable speaking one JSON request line on
stdin and one JSON report line on stdout. Test failures are data in the
report; a nonzero exit signals a protocol error only.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field


class SandboxError(Exception):
    pass


@dataclass
class SandboxReport:
    per_test: list[tuple[str, str]] = field(default_factory=list)
    duration_ms: int = 0

    def __post_init__(self) -> None:
        outcomes = {"pass", "fail", "error", "timeout"}
        for name, outcome in self.per_test:
            if outcome not in outcomes:
                raise SandboxError(f"bad outcome {outcome!r} for test {name!r}")

    @property
    def total(self) -> int:
        return len(self.per_test)

    @property
    def passed(self) -> int:
        return sum(1 for _, outcome in self.per_test if outcome == "pass")

    @classmethod
    def from_json(cls, payload: dict) -> "SandboxReport":
        report = cls(
            per_test=[(t["name"], t["outcome"]) for t in payload["per_test"]],
            duration_ms=int(payload.get("duration_ms", 0)),
        )
        if payload.get("total") != report.total or payload.get("passed") != report.passed:
            raise SandboxError("report counters disagree with per-test outcomes")
        return report


def run_sandbox(
    patch_source: str,
    test_source: str,
    executable: list[str],
    timeout_seconds: int = 10,
    memory_limit_mb: int = 256,
) -> SandboxReport:
    """Evaluate a candidate patch in one sandbox process."""
    request = json.dumps(
        {
            "patch_source": patch_source,
            "test_source": test_source,
            "timeout_seconds": timeout_seconds,
            "memory_limit_mb": memory_limit_mb,
        }
    )
    try:
        proc = subprocess.run(
            executable,
            input=request + "\n",
            capture_output=True,
            text=True,
            timeout=timeout_seconds + 30,
        )
    except (OSError, subprocess.TimeoutExpired) as err:
        raise SandboxError(f"sandbox-startup-failure: {err}") from err
    if proc.returncode != 0:
        raise SandboxError(f"protocol-error: exit {proc.returncode}: {proc.stderr[:300]}")
    line = proc.stdout.strip().splitlines()
    if not line:
        raise SandboxError("protocol-error: empty sandbox reply")
    try:
        return SandboxReport.from_json(json.loads(line[-1]))
    except (ValueError, KeyError) as err:
        raise SandboxError(f"protocol-error: {err}") from err
