"""Isolated patch-evaluation sandbox.

Reads one JSON request line on standard input, executes the supplied
patch program against the supplied unit-test suite in a guarded child
process, and writes one JSON report line on standard output. Test
failures are data in the report; a nonzero exit signals a protocol
error only.
"""

__version__ = "0.1.0"
