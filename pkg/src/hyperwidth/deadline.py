"""Cooperative deadlines shared by every solver."""
from __future__ import annotations

import threading
import time


class SearchTimeout(TimeoutError):
    """Raised at a poll point once the deadline has passed or the run was cancelled."""


class Deadline:
    """A wall-clock budget plus an optional cancellation flag.

    Solvers call :meth:`check` at every candidate they consider; that is the
    only place a search can stop early.
    """

    __slots__ = ("expires", "cancel")

    def __init__(self, seconds: float | None = None, cancel: threading.Event | None = None):
        self.expires = None if seconds is None else time.monotonic() + seconds
        self.cancel = cancel

    @classmethod
    def never(cls) -> "Deadline":
        return cls(None)

    def expired(self) -> bool:
        if self.cancel is not None and self.cancel.is_set():
            return True
        return self.expires is not None and time.monotonic() >= self.expires

    def check(self) -> None:
        if self.expired():
            raise SearchTimeout()

    def remaining(self) -> float | None:
        if self.expires is None:
            return None
        return max(0.0, self.expires - time.monotonic())


def as_deadline(deadline: "Deadline | float | None") -> Deadline:
    if isinstance(deadline, Deadline):
        return deadline
    return Deadline(deadline)
