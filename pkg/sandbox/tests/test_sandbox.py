import json
import subprocess
import sys
import time

import pytest

CMD = [sys.executable, "-m", "patch_sandbox.main"]

PATCH_MOSTLY_OK = """\
def add(a, b):
    return a + b

def sub(a, b):
    return a - b

def mul(a, b):
    return a + b  # wrong on purpose
"""

SUITE_FOUR_TESTS = """\
import unittest
from patch import add, sub, mul

class TestPatch(unittest.TestCase):
    def test_add(self):
        self.assertEqual(add(2, 3), 5)

    def test_add_negative(self):
        self.assertEqual(add(-1, 1), 0)

    def test_sub(self):
        self.assertEqual(sub(5, 3), 2)

    def test_mul(self):
        self.assertEqual(mul(3, 4), 12)
"""


def invoke(request: dict, timeout: float = 60.0) -> subprocess.CompletedProcess:
    return subprocess.run(
        CMD, input=json.dumps(request) + "\n",
        capture_output=True, text=True, timeout=timeout,
    )


def evaluate(patch: str, tests: str, **overrides) -> dict:
    request = {"patch_source": patch, "test_source": tests,
               "timeout_seconds": 10, "memory_limit_mb": 256}
    request.update(overrides)
    proc = invoke(request)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


def outcomes(report: dict) -> dict:
    return {t["name"]: t["outcome"] for t in report["per_test"]}


def test_three_pass_one_fail():
    report = evaluate(PATCH_MOSTLY_OK, SUITE_FOUR_TESTS)
    assert report["total"] == 4
    assert report["passed"] == 3
    assert outcomes(report)["TestPatch.test_mul"] == "fail"


def test_counters_match_per_test_list():
    report = evaluate(PATCH_MOSTLY_OK, SUITE_FOUR_TESTS)
    assert report["total"] == len(report["per_test"])
    assert report["passed"] == sum(
        1 for t in report["per_test"] if t["outcome"] == "pass"
    )
    assert report["passed"] <= report["total"]


def test_syntax_error_patch_all_error():
    report = evaluate("def add(a, b:\n    return", SUITE_FOUR_TESTS)
    assert report["total"] == 4
    assert report["passed"] == 0
    assert set(outcomes(report).values()) == {"error"}


def test_runtime_import_error_all_error():
    report = evaluate("raise RuntimeError('broken at import')", SUITE_FOUR_TESTS)
    assert report["passed"] == 0
    assert set(outcomes(report).values()) == {"error"}


def test_exception_in_one_test_is_error_not_fail():
    suite = """\
import unittest
from patch import add

class TestPatch(unittest.TestCase):
    def test_ok(self):
        self.assertEqual(add(1, 1), 2)

    def test_boom(self):
        raise ValueError("unexpected")
"""
    report = evaluate(PATCH_MOSTLY_OK, suite)
    got = outcomes(report)
    assert got["TestPatch.test_ok"] == "pass"
    assert got["TestPatch.test_boom"] == "error"


def test_infinite_loop_honors_timeout():
    start = time.monotonic()
    report = evaluate("while True:\n    pass", SUITE_FOUR_TESTS,
                      timeout_seconds=2)
    elapsed = time.monotonic() - start
    assert set(outcomes(report).values()) == {"timeout"}
    assert report["duration_ms"] >= 2000
    assert elapsed < 30


def test_timeout_mid_suite_keeps_completed_results():
    patch = """\
def quick():
    return 1

def slow():
    while True:
        pass
"""
    suite = """\
import unittest
from patch import quick, slow

class TestPatch(unittest.TestCase):
    def test_a_quick(self):
        self.assertEqual(quick(), 1)

    def test_b_slow(self):
        slow()

    def test_c_never_reached(self):
        self.assertEqual(quick(), 1)
"""
    report = evaluate(patch, suite, timeout_seconds=2)
    got = outcomes(report)
    assert got["TestPatch.test_a_quick"] == "pass"
    assert got["TestPatch.test_b_slow"] == "timeout"
    assert got["TestPatch.test_c_never_reached"] == "timeout"


def test_out_of_tree_write_blocked(tmp_path):
    target = tmp_path / "escape.txt"
    suite = f"""\
import unittest

class TestPatch(unittest.TestCase):
    def test_escape(self):
        with open({str(target)!r}, "w") as fh:
            fh.write("escaped")
"""
    report = evaluate("x = 1", suite)
    assert outcomes(report)["TestPatch.test_escape"] == "error"
    assert not target.exists()


def test_scratch_writes_allowed():
    suite = """\
import unittest

class TestPatch(unittest.TestCase):
    def test_local_write(self):
        with open("notes.txt", "w") as fh:
            fh.write("fine")
        with open("notes.txt") as fh:
            self.assertEqual(fh.read(), "fine")
"""
    report = evaluate("x = 1", suite)
    assert report["passed"] == 1


def test_network_blocked():
    suite = """\
import socket
import unittest

class TestPatch(unittest.TestCase):
    def test_connect(self):
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        s.connect(("127.0.0.1", 9))
"""
    report = evaluate("x = 1", suite)
    assert outcomes(report)["TestPatch.test_connect"] == "error"


class TestProtocolErrors:
    def test_malformed_json(self):
        proc = subprocess.run(CMD, input="{broken\n", capture_output=True, text=True)
        assert proc.returncode == 2
        assert "protocol-error" in proc.stderr

    def test_empty_patch_source(self):
        proc = invoke({"patch_source": "", "test_source": "x", "timeout_seconds": 5})
        assert proc.returncode == 2

    def test_missing_test_source(self):
        proc = invoke({"patch_source": "x = 1"})
        assert proc.returncode == 2

    def test_nonpositive_timeout(self):
        proc = invoke({"patch_source": "x = 1", "test_source": "y = 2",
                       "timeout_seconds": 0})
        assert proc.returncode == 2

    def test_unparseable_test_suite(self):
        proc = invoke({"patch_source": "x = 1", "test_source": "def broken(:",
                       "timeout_seconds": 5})
        assert proc.returncode == 2
        assert "protocol-error" in proc.stderr


def test_failures_are_data_not_exit_codes():
    request = {"patch_source": "x = 1", "test_source": SUITE_FOUR_TESTS,
               "timeout_seconds": 10}
    proc = invoke(request)
    # Suite imports names the patch lacks: every test errors, exit stays 0.
    assert proc.returncode == 0
    report = json.loads(proc.stdout.strip().splitlines()[-1])
    assert report["passed"] == 0


def test_chatty_suite_does_not_break_protocol():
    suite = """\
import unittest
print("stray stdout chatter")

class TestPatch(unittest.TestCase):
    def test_ok(self):
        print("more chatter")
"""
    report = evaluate("x = 1", suite)
    assert report["passed"] == 1
