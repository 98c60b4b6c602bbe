"""Append-only structured research memory.

One JSON-lines file per session under `<data_dir>/sessions/<sid>/memory.jsonl`.
Records carry a stage, a kind, ordered key-value pairs plus free text, and
refs that must resolve to known manifests, config hashes, or jobs at append
time. Nothing is ever mutated or deleted; context rendering drops oldest
records first when a character budget binds.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

STAGES = ("idea", "design", "execution", "analysis")
KINDS = ("theoretical_context", "experiment_spec", "execution_trace", "outcome_synthesis")


class MemoryStoreError(ValueError):
    pass


class DanglingRefError(MemoryStoreError):
    def __init__(self, ref: str):
        super().__init__(f"dangling ref {ref!r}: no matching manifest, config hash, or job")
        self.ref = ref


@dataclass
class MemoryRecord:
    record_id: int
    session_id: str
    stage: str
    kind: str
    timestamp: float
    body: dict[str, Any] = field(default_factory=dict)
    text: str = ""
    refs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "session_id": self.session_id,
            "stage": self.stage,
            "kind": self.kind,
            "timestamp": self.timestamp,
            "body": self.body,
            "text": self.text,
            "refs": self.refs,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "MemoryRecord":
        return cls(
            record_id=raw["record_id"],
            session_id=raw["session_id"],
            stage=raw["stage"],
            kind=raw["kind"],
            timestamp=raw["timestamp"],
            body=raw.get("body", {}),
            text=raw.get("text", ""),
            refs=list(raw.get("refs", [])),
        )

    def render(self) -> str:
        lines = [f"[{self.stage}/{self.kind} #{self.record_id}]"]
        for key, value in self.body.items():
            lines.append(f"{key}: {value}")
        if self.text:
            lines.append(self.text)
        if self.refs:
            lines.append("refs: " + ", ".join(self.refs))
        return "\n".join(lines)


class MemoryStore:
    """Per-session append-only record log with ref validation."""

    def __init__(
        self,
        data_dir: str,
        resolver: Optional[Callable[[str], bool]] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.data_dir = data_dir
        self.resolver = resolver
        self.clock = clock
        self._cache: dict[str, list[MemoryRecord]] = {}
        self._lock = threading.Lock()

    def _path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, "sessions", session_id, "memory.jsonl")

    def _records(self, session_id: str) -> list[MemoryRecord]:
        if session_id not in self._cache:
            path = self._path(session_id)
            records = []
            if os.path.exists(path):
                with open(path, encoding="utf-8") as fh:
                    for line in fh:
                        if line.strip():
                            records.append(MemoryRecord.from_dict(json.loads(line)))
            self._cache[session_id] = records
        return self._cache[session_id]

    def append(
        self,
        session_id: str,
        stage: str,
        kind: str,
        body: Optional[dict[str, Any]] = None,
        text: str = "",
        refs: Optional[list[str]] = None,
    ) -> int:
        if stage not in STAGES:
            raise MemoryStoreError(f"unknown stage {stage!r}; expected one of {STAGES}")
        if kind not in KINDS:
            raise MemoryStoreError(f"unknown kind {kind!r}; expected one of {KINDS}")
        refs = list(refs or [])
        if self.resolver is not None:
            for ref in refs:
                if not self.resolver(ref):
                    raise DanglingRefError(ref)
        with self._lock:
            records = self._records(session_id)
            record = MemoryRecord(
                record_id=records[-1].record_id + 1 if records else 1,
                session_id=session_id,
                stage=stage,
                kind=kind,
                timestamp=self.clock(),
                body=dict(body or {}),
                text=text,
                refs=refs,
            )
            path = self._path(session_id)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
            records.append(record)
            return record.record_id

    def query(
        self,
        session_id: str,
        kind: Optional[str] = None,
        stage: Optional[str] = None,
    ) -> list[MemoryRecord]:
        with self._lock:
            records = list(self._records(session_id))
        if kind is not None:
            records = [r for r in records if r.kind == kind]
        if stage is not None:
            records = [r for r in records if r.stage == stage]
        return records

    def render_context(self, session_id: str, budget: int) -> str:
        """Render history newest-last within a character budget.

        Whole records are dropped oldest-first; the newest record is always
        included intact even if it alone exceeds the budget.
        """
        if budget <= 0:
            raise MemoryStoreError("budget must be > 0")
        records = self.query(session_id)
        if not records:
            return ""
        rendered = [r.render() for r in records]
        kept: list[str] = [rendered[-1]]
        used = len(rendered[-1])
        for text in reversed(rendered[:-1]):
            cost = len(text) + 2  # joining blank line
            if used + cost > budget:
                break
            kept.append(text)
            used += cost
        return "\n\n".join(reversed(kept))
