"""Workflow engine and evaluation harness for blue-team threat hunting."""

__version__ = "0.1.0"
