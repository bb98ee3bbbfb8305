"""Runner for independent work units (benchmark replicates, leave-one-out folds)."""

from __future__ import annotations

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Generic, TypeVar

from funcreg.config import get_config

logger = logging.getLogger(__name__)

ItemT = TypeVar("ItemT")
ResultT = TypeVar("ResultT")


def resolve_workers(threads: int | None = None) -> int:
    """Worker count from the argument, else ``FUNCREG_THREADS``; 0 means all cores."""
    if threads is None:
        threads = get_config().threads
    if threads < 0:
        raise ValueError(f"threads must be nonnegative, got {threads}")
    return threads or (os.cpu_count() or 1)


@dataclass(frozen=True)
class WorkResult(Generic[ResultT]):
    """Outcome of one work unit: a value or the error that stopped it."""

    index: int
    value: ResultT | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


class WorkRunner:
    """Maps a function over work items and returns results in submission order."""

    def __init__(self, threads: int | None = None) -> None:
        self._workers = resolve_workers(threads)

    @property
    def workers(self) -> int:
        return self._workers

    def map(
        self,
        fn: Callable[[ItemT], ResultT],
        items: Iterable[ItemT],
        catch: tuple[type[BaseException], ...] = (),
    ) -> list[WorkResult[ResultT]]:
        """Run ``fn`` on every item; exceptions listed in ``catch`` become failed results."""
        items = list(items)

        def _run(indexed: tuple[int, ItemT]) -> WorkResult[ResultT]:
            index, item = indexed
            try:
                return WorkResult(index=index, value=fn(item))
            except catch as exc:
                logger.warning("Work unit %d failed: %s", index, exc)
                return WorkResult(index=index, error=str(exc))

        if self._workers == 1 or len(items) <= 1:
            return [_run(indexed) for indexed in enumerate(items)]
        with ThreadPoolExecutor(max_workers=min(self._workers, len(items))) as pool:
            return list(pool.map(_run, enumerate(items)))
