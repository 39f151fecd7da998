"""Outcome of a unit of work that may fail, such as one alignment method on one Monte Carlo run."""

import time
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Generic, Optional, TypeVar

T = TypeVar("T")


@dataclass
class Operation(Generic[T]):
    """Result of an operation.

    :param payload: Result on success.
    :param status: ``True`` when the operation completed.
    :param error: ``"<ExceptionType>: <message>"`` on failure.
    :param origin: ``file:line in function`` of the frame that raised.
    :param elapsed_s: Wall time spent inside :meth:`capture`.
    """

    payload: Optional[T] = None
    status: bool = False
    error: Optional[str] = None
    origin: Optional[str] = None
    elapsed_s: float = 0.0

    @classmethod
    def capture(cls, func: Callable[[], T]) -> "Operation[T]":
        """Run ``func`` and keep either its result or the exception it raised."""
        start = time.perf_counter()
        try:
            payload = func()
        except Exception as exc:
            frame = traceback.extract_tb(exc.__traceback__)[-1]
            return cls(
                status=False,
                error=f"{type(exc).__name__}: {exc}",
                origin=f"{Path(frame.filename).name}:{frame.lineno} in {frame.name}",
                elapsed_s=time.perf_counter() - start,
            )
        return cls(payload=payload, status=True, elapsed_s=time.perf_counter() - start)

    def is_op_ok(self) -> bool:
        return self.status

    def __str__(self) -> str:
        if self.status:
            return f"Operation(ok in {self.elapsed_s:.3f} s, payload={self.payload})"
        return f"Operation(failed: {self.error} at {self.origin})"
