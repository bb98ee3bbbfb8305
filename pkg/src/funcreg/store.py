"""ResultsStore: DuckDB-backed storage for benchmark replicate errors."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from datetime import datetime

import duckdb
import pandas as pd

from funcreg.core.base import EstimatorName
from funcreg.sim import ReplicateRecord, SimModel


class ResultsStore:
    """DuckDB store with one row per (run, model, estimator, rep)."""

    def __init__(self, db_path: str) -> None:
        self._db_path = db_path
        self._conn = duckdb.connect(db_path)
        self._init_tables()

    def __enter__(self) -> ResultsStore:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def _init_tables(self) -> None:
        self._conn.execute("""
            CREATE TABLE IF NOT EXISTS replicates (
                run_id VARCHAR NOT NULL,
                model VARCHAR NOT NULL,
                estimator VARCHAR NOT NULL,
                rep INTEGER NOT NULL,
                mse_clean DOUBLE,
                mse_noisy DOUBLE,
                selected DOUBLE,
                error VARCHAR,
                recorded_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                metadata VARCHAR DEFAULT '{}'
            )
        """)

    def record_replicates(
        self,
        run_id: str,
        records: Iterable[ReplicateRecord],
        metadata: dict[str, object] | None = None,
    ) -> int:
        """Insert replicate rows under ``run_id``; returns the row count."""
        recorded_at = datetime.now()
        meta = json.dumps(metadata or {}, sort_keys=True, default=str)
        rows = [
            [
                run_id,
                str(record.model),
                str(record.estimator),
                record.rep,
                _nullable(record.mse_clean),
                _nullable(record.mse_noisy),
                _nullable(record.selected),
                record.error,
                recorded_at,
                meta,
            ]
            for record in records
        ]
        if rows:
            self._conn.executemany(
                """
                INSERT INTO replicates (run_id, model, estimator, rep, mse_clean, mse_noisy,
                                        selected, error, recorded_at, metadata)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                """,
                rows,
            )
        return len(rows)

    def get_records(self, run_id: str) -> list[ReplicateRecord]:
        """All replicate rows for a run, ordered by model, rep and estimator insertion."""
        rows = self._conn.execute(
            """
            SELECT model, rep, estimator, mse_clean, mse_noisy, selected, error
            FROM replicates WHERE run_id = ? ORDER BY model, rep, rowid
            """,
            [run_id],
        ).fetchall()
        return [self._row_to_record(r) for r in rows]

    def list_run_ids(self) -> list[str]:
        rows = self._conn.execute(
            "SELECT DISTINCT run_id FROM replicates ORDER BY run_id"
        ).fetchall()
        return [r[0] for r in rows]

    def summary(self, run_id: str) -> pd.DataFrame:
        """Per (model, estimator): mean errors, standard error and failures."""
        return self._conn.execute(
            """
            WITH cells AS (
                SELECT model, estimator,
                       avg(mse_clean) FILTER (WHERE error IS NULL) AS mean_mse_clean,
                       avg(mse_noisy) FILTER (WHERE error IS NULL) AS mean_mse_noisy,
                       coalesce(
                           stddev_samp(mse_clean) FILTER (WHERE error IS NULL)
                           / sqrt(count(*) FILTER (WHERE error IS NULL)),
                           0.0
                       ) AS se,
                       count(*) FILTER (WHERE error IS NOT NULL) AS failures
                FROM replicates WHERE run_id = ?
                GROUP BY model, estimator
            )
            SELECT model, estimator, mean_mse_clean, mean_mse_noisy, se,
                   mean_mse_clean / max(CASE WHEN estimator = ? THEN mean_mse_clean END)
                       OVER (PARTITION BY model) AS relative_to_rkhs,
                   failures
            FROM cells ORDER BY model, estimator
            """,
            [run_id, str(EstimatorName.RKHS)],
        ).df()

    def _row_to_record(self, row: tuple) -> ReplicateRecord:
        return ReplicateRecord(
            model=SimModel(row[0]),
            rep=int(row[1]),
            estimator=EstimatorName(row[2]),
            mse_clean=math.nan if row[3] is None else row[3],
            mse_noisy=math.nan if row[4] is None else row[4],
            selected=math.nan if row[5] is None else row[5],
            error=row[6],
        )

    def close(self) -> None:
        """Close the database connection."""
        self._conn.close()


def _nullable(value: float) -> float | None:
    return None if math.isnan(value) else float(value)
