"""
Cooperative cancellation for pipeline evaluations.

Long-running code polls the token between folds, between components and
between training iterations; polling an expired token raises
EvaluationTimeout.
"""

import threading
import time
from typing import Optional

from dsge_automl.core.errors import EvaluationTimeout


class CancelToken:
    """A cancellation flag with an optional wall-clock deadline."""

    def __init__(self, budget: Optional[float] = None):
        """
        Args:
            budget: Seconds until the token expires (None = never)
        """
        self.started = time.monotonic()
        self.deadline = None if budget is None else self.started + budget
        self._event = threading.Event()

    def cancel(self) -> None:
        self._event.set()

    @property
    def cancelled(self) -> bool:
        if self._event.is_set():
            return True
        return self.deadline is not None and time.monotonic() > self.deadline

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.started

    def check(self) -> None:
        """Raise EvaluationTimeout if the token was cancelled or expired."""
        if self.cancelled:
            raise EvaluationTimeout(f"evaluation cancelled after {self.elapsed:.2f}s")


def poll(cancel: Optional[CancelToken]) -> None:
    """Check a token that may be absent."""
    if cancel is not None:
        cancel.check()
