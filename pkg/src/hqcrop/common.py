"""Shared error types and the warning sink used by parsers and mergers."""

from __future__ import annotations

from collections import Counter


class PipelineError(Exception):
    """Base class for errors raised by pipeline stages."""


class ConfigError(PipelineError):
    """Invalid configuration value or file (CLI exit code 2)."""


class ParseError(PipelineError):
    """Malformed annotation input.

    ``byte_offset`` locates the failure in the input stream when known.
    """

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset

    def __str__(self) -> str:
        base = super().__str__()
        if self.byte_offset is not None:
            return f"{base} (at byte offset {self.byte_offset})"
        return base


class WarningSink:
    """Collects record-level warnings and skip counters.

    Parsers run one instance per input shard; sinks are merged after the
    parallel section, so no locking is needed.
    """

    def __init__(self):
        self.messages: list[str] = []
        self.counts: Counter[str] = Counter()

    def warn(self, category: str, message: str) -> None:
        self.counts[category] += 1
        self.messages.append(f"{category}: {message}")

    def count(self, category: str, n: int = 1) -> None:
        self.counts[category] += n

    def merge(self, other: "WarningSink") -> None:
        self.messages.extend(other.messages)
        self.counts.update(other.counts)

    def __len__(self) -> int:
        return len(self.messages)

    def __bool__(self) -> bool:
        return bool(self.messages) or any(self.counts.values())
