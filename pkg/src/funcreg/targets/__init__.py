"""Report sinks for benchmark results."""

from funcreg.targets.csv import CsvTarget
from funcreg.targets.duckdb import DuckDBTarget

__all__ = ["CsvTarget", "DuckDBTarget"]
