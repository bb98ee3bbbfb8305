"""CSV target: the benchmark report file plus optional per-rep detail."""

from __future__ import annotations

from pathlib import Path

from funcreg.core.base import BaseTarget
from funcreg.io import write_report
from funcreg.sim import BenchmarkReport


class CsvTarget(BaseTarget):
    def __init__(
        self,
        target_id: str,
        path: str | Path,
        detail_path: str | Path | None = None,
        deterministic: bool | None = None,
    ) -> None:
        self.target_id = target_id
        self.path = Path(path)
        self.detail_path = Path(detail_path) if detail_path is not None else None
        self._deterministic = deterministic

    def save_report(
        self, report: BenchmarkReport, metadata: dict[str, object] | None = None
    ) -> None:
        comments = [f"{key}={value}" for key, value in sorted((metadata or {}).items())]
        write_report(self.path, report.to_frame(), comments, self._deterministic)
        if self.detail_path is not None:
            write_report(
                self.detail_path, report.records_frame(), comments, self._deterministic
            )
