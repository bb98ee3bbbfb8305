"""DuckDB target adapter for benchmark results."""

from __future__ import annotations

from datetime import UTC, datetime
from uuid import uuid4

import pandas as pd

from funcreg.core.base import BaseTarget
from funcreg.sim import BenchmarkReport
from funcreg.store import ResultsStore


class DuckDBTarget(BaseTarget):
    """Appends replicate rows of each benchmark run to a ResultsStore."""

    def __init__(self, target_id: str, db_path: str) -> None:
        self.target_id = target_id
        self._db_path = db_path
        self.last_run_id: str | None = None

    def save_report(
        self, report: BenchmarkReport, metadata: dict[str, object] | None = None
    ) -> None:
        """Record every replicate under a fresh run id."""
        run_id = new_run_id()
        with ResultsStore(self._db_path) as store:
            store.record_replicates(run_id, report.records, metadata)
        self.last_run_id = run_id

    def load_summary(self, run_id: str) -> pd.DataFrame:
        """Aggregate a stored run the same way the CSV report does."""
        with ResultsStore(self._db_path) as store:
            return store.summary(run_id)


def new_run_id() -> str:
    return f"{datetime.now(UTC):%Y%m%dT%H%M%SZ}-{uuid4().hex[:8]}"
