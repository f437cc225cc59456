"""Child-side test runner; one fresh interpreter per request.

The parent writes ``patch.py`` and ``tests.py`` into a scratch directory
and starts this script with ``python -I -B``. The runner prints one JSON
line listing the collected test names, then one JSON line per completed
test, flushing after each so the parent can attribute a timeout to the
tests that never reported.

Guards installed before any request code runs:
- an audit hook that refuses socket operations and any write-mode open
  outside the scratch directory;
- an address-space limit from the request's memory budget.
"""

from __future__ import annotations

import ast
import importlib.util
import json
import os
import sys
import unittest


def collect_names_static(test_source: str) -> list[str] | None:
    """Test names from the suite's AST; None if the suite cannot parse.

    Used so a patch that fails to compile can still be reported as one
    "error" outcome per test.
    """
    try:
        tree = ast.parse(test_source)
    except SyntaxError:
        return None
    names: list[str] = []
    for node in ast.walk(tree):
        if isinstance(node, ast.ClassDef):
            for item in node.body:
                if isinstance(item, (ast.FunctionDef, ast.AsyncFunctionDef)) \
                        and item.name.startswith("test"):
                    names.append(f"{node.name}.{item.name}")
    return names


def install_guards(scratch_dir: str, memory_limit_mb: int) -> None:
    try:
        import resource

        limit = memory_limit_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    except (ImportError, ValueError, OSError):
        pass  # the write/network guards below still apply

    scratch_real = os.path.realpath(scratch_dir)
    write_flags = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND

    def in_scratch(path) -> bool:
        if not isinstance(path, (str, bytes)):
            return True  # file-descriptor based access, already vetted at open
        if isinstance(path, bytes):
            path = path.decode(errors="surrogateescape")
        real = os.path.realpath(path)
        return real == os.devnull or real == scratch_real \
            or real.startswith(scratch_real + os.sep)

    def hook(event: str, args) -> None:
        if event.startswith("socket."):
            raise RuntimeError("sandbox: network access is disabled")
        if event == "open":
            path, mode, flags = args
            writing = (mode is not None and any(c in mode for c in "wax+")) \
                or (mode is None and flags & write_flags)
            if writing and not in_scratch(path):
                raise RuntimeError(f"sandbox: write outside scratch blocked: {path!r}")
        elif event in ("os.remove", "os.rmdir", "os.rename", "os.mkdir",
                       "shutil.rmtree"):
            if args and not in_scratch(args[0]):
                raise RuntimeError(f"sandbox: mutation outside scratch blocked: {args[0]!r}")

    sys.addaudithook(hook)


def emit(record: dict) -> None:
    print(json.dumps(record, sort_keys=True), flush=True)


def run_suite(test_path: str) -> None:
    spec = importlib.util.spec_from_file_location("patch_tests", test_path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)  # import-time failure: every test errors
    suite = unittest.defaultTestLoader.loadTestsFromModule(module)
    for test in iter_tests(suite):
        name = f"{type(test).__name__}.{test._testMethodName}"
        result = unittest.TestResult()
        test.run(result)
        if result.errors:
            outcome = "error"
        elif result.failures:
            outcome = "fail"
        elif result.skipped:
            outcome = "error"  # a skipped gold test cannot count as passed
        else:
            outcome = "pass"
        emit({"name": name, "outcome": outcome})


def iter_tests(suite):
    for item in suite:
        if isinstance(item, unittest.TestSuite):
            yield from iter_tests(item)
        else:
            yield item


def main() -> int:
    config = json.loads(sys.stdin.readline())
    scratch = config["scratch_dir"]
    os.chdir(scratch)
    test_path = os.path.join(scratch, "tests.py")
    patch_path = os.path.join(scratch, "patch.py")
    with open(test_path, encoding="utf-8") as fh:
        test_source = fh.read()
    with open(patch_path, encoding="utf-8") as fh:
        patch_source = fh.read()

    names = collect_names_static(test_source)
    if names is None:
        print("test suite has a syntax error", file=sys.stderr)
        return 2
    emit({"names": names})

    def all_error() -> int:
        for name in names:
            emit({"name": name, "outcome": "error"})
        return 0

    try:
        compile(patch_source, "patch.py", "exec")
    except SyntaxError:
        return all_error()

    sys.path.insert(0, scratch)
    install_guards(scratch, int(config.get("memory_limit_mb", 256)))
    try:
        run_suite(test_path)
    except BaseException:
        return all_error()
    return 0


if __name__ == "__main__":
    sys.exit(main())
