"""Parent-side protocol: one JSON request line in, one JSON report line out.

Exit codes: 0 with a report on stdout for any evaluated request (test
failures are data); 2 for protocol errors (malformed request, child
crash before test collection).
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
import time

RUNNER = os.path.join(os.path.dirname(os.path.abspath(__file__)), "runner.py")


class ProtocolError(Exception):
    pass


def parse_request(line: str) -> dict:
    try:
        request = json.loads(line)
    except ValueError as err:
        raise ProtocolError(f"request is not valid JSON: {err}") from err
    if not isinstance(request, dict):
        raise ProtocolError("request must be a JSON object")
    for field in ("patch_source", "test_source"):
        value = request.get(field)
        if not isinstance(value, str) or not value.strip():
            raise ProtocolError(f"{field} must be a non-empty string")
    timeout = request.get("timeout_seconds", 10)
    memory = request.get("memory_limit_mb", 256)
    if not isinstance(timeout, int) or timeout <= 0:
        raise ProtocolError("timeout_seconds must be a positive integer")
    if not isinstance(memory, int) or memory <= 0:
        raise ProtocolError("memory_limit_mb must be a positive integer")
    return {
        "patch_source": request["patch_source"],
        "test_source": request["test_source"],
        "timeout_seconds": timeout,
        "memory_limit_mb": memory,
    }


def evaluate(request: dict) -> dict:
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="patch-sandbox-") as scratch:
        with open(os.path.join(scratch, "patch.py"), "w", encoding="utf-8") as fh:
            fh.write(request["patch_source"])
        with open(os.path.join(scratch, "tests.py"), "w", encoding="utf-8") as fh:
            fh.write(request["test_source"])
        proc = subprocess.Popen(
            [sys.executable, "-I", "-B", RUNNER],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        config = json.dumps(
            {"scratch_dir": scratch, "memory_limit_mb": request["memory_limit_mb"]}
        )
        timed_out = False
        try:
            out, err = proc.communicate(config + "\n",
                                        timeout=request["timeout_seconds"])
        except subprocess.TimeoutExpired:
            timed_out = True
            proc.kill()
            out, err = proc.communicate()
    duration_ms = int((time.monotonic() - start) * 1000)

    names: list[str] | None = None
    outcomes: dict[str, str] = {}
    for line in out.splitlines():
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError:
            continue  # stray output from the suite under test
        if names is None and "names" in record:
            names = list(record["names"])
        elif "name" in record and "outcome" in record:
            outcomes[record["name"]] = record["outcome"]

    if names is None:
        if timed_out:
            raise ProtocolError("test collection did not finish within the timeout")
        raise ProtocolError(
            f"runner produced no test listing (exit {proc.returncode}): {err.strip()[:300]}"
        )
    if not timed_out and proc.returncode != 0:
        raise ProtocolError(f"runner exit {proc.returncode}: {err.strip()[:300]}")

    per_test = [
        {"name": name, "outcome": outcomes.get(name, "timeout" if timed_out else "error")}
        for name in names
    ]
    passed = sum(1 for t in per_test if t["outcome"] == "pass")
    return {
        "per_test": per_test,
        "total": len(per_test),
        "passed": passed,
        "duration_ms": duration_ms,
    }


def main() -> int:
    try:
        request = parse_request(sys.stdin.readline())
        report = evaluate(request)
    except ProtocolError as err:
        print(f"protocol-error: {err}", file=sys.stderr)
        return 2
    print(json.dumps(report, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
