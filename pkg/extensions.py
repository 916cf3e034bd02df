import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from config import Config

T = TypeVar("T")
R = TypeVar("R")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_handler: logging.StreamHandler | None = None


def init_logging(level: str | None = None) -> None:
    """Attach one stderr handler to the root logger; later calls re-point it at the
    current sys.stderr and adjust the level."""
    global _handler
    root = logging.getLogger()
    if _handler is None:
        _handler = logging.StreamHandler(sys.stderr)
        _handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(_handler)
    else:
        _handler.setStream(sys.stderr)
    root.setLevel((level or Config.LOG_LEVEL).upper())


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map fn over items, optionally on a thread pool; output order always follows input order."""
    items = list(items)
    workers = threads if threads is not None else Config.THREADS
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
