"""Orchestration primitives for replicate and fold execution."""

from funcreg.orchestration.runner import WorkResult, WorkRunner, resolve_workers

__all__ = ["WorkResult", "WorkRunner", "resolve_workers"]
