"""Durable verdict log.

Verdicts append to a JSON-lines file, one object per line, written with a
single os.write on a file descriptor opened with O_APPEND so concurrent
writers from one process never interleave.  Replay tolerates a torn final
line (a crash mid-write) by discarding it; a malformed line anywhere else
means real corruption and raises.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Iterable, Optional, Sequence

from ..errors import DuplicateVerdict, MalformedRecord, UnknownTask
from .tasks import Judge, ReviewTask, Verdict, choice_valid_for_mode


def _verdict_to_obj(v: Verdict) -> dict:
    return {
        "task_id": v.task_id,
        "session_id": v.session_id,
        "judge_kind": v.judge.kind,
        "judge_name": v.judge.name,
        "choice": v.choice,
        "timestamp": v.timestamp,
        "latency_ms": v.latency_ms,
    }


def _verdict_from_obj(obj: dict) -> Verdict:
    return Verdict(
        task_id=obj["task_id"],
        session_id=obj["session_id"],
        judge=Judge(obj["judge_kind"], obj["judge_name"]),
        choice=obj["choice"],
        timestamp=float(obj["timestamp"]),
        latency_ms=int(obj["latency_ms"]),
    )


class VerdictStore:
    """Append-only verdict log bound to a fixed task set.

    One verdict per (task, session): a second submission for the same key
    raises DuplicateVerdict, which is what lets the HTTP layer return a
    conflict instead of silently double counting.
    """

    def __init__(self, path: str, tasks: Sequence[ReviewTask]):
        self._path = os.fspath(path)
        self._tasks = {t.task_id: t for t in tasks}
        self._lock = threading.Lock()
        self._seen: set = set()
        self._verdicts: list = []
        self._replay()
        self._fd = os.open(self._path, os.O_WRONLY | os.O_CREAT | os.O_APPEND, 0o644)

    def _replay(self) -> None:
        if not os.path.exists(self._path):
            return
        with open(self._path, "rb") as fh:
            raw = fh.read()
        if not raw:
            return
        lines = raw.split(b"\n")
        # a complete log ends with a newline, so the final split element is
        # empty; anything else there is a torn final append.  Drop it and
        # truncate the file so the next append starts on a clean line.
        torn = lines.pop()
        if torn:
            os.truncate(self._path, len(raw) - len(torn))
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                v = _verdict_from_obj(obj)
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecord(line.decode("utf-8", "replace"), f"corrupt log line {i + 1}: {exc}")
            self._admit(v)

    def _admit(self, v: Verdict) -> None:
        task = self._tasks.get(v.task_id)
        if task is None:
            raise UnknownTask(v.task_id)
        if not choice_valid_for_mode(v.choice, task.mode):
            raise ValueError(f"choice {v.choice!r} is not valid for a {task.mode} task")
        key = (v.task_id, v.session_id)
        if key in self._seen:
            raise DuplicateVerdict(v.task_id, v.session_id)
        self._seen.add(key)
        self._verdicts.append(v)

    def append(self, verdict: Verdict) -> None:
        """Validate, persist, then admit to the in-memory view."""
        with self._lock:
            task = self._tasks.get(verdict.task_id)
            if task is None:
                raise UnknownTask(verdict.task_id)
            if not choice_valid_for_mode(verdict.choice, task.mode):
                raise ValueError(f"choice {verdict.choice!r} is not valid for a {task.mode} task")
            key = (verdict.task_id, verdict.session_id)
            if key in self._seen:
                raise DuplicateVerdict(verdict.task_id, verdict.session_id)
            line = json.dumps(_verdict_to_obj(verdict), sort_keys=True) + "\n"
            os.write(self._fd, line.encode("utf-8"))
            self._seen.add(key)
            self._verdicts.append(verdict)

    def verdicts(self) -> list:
        with self._lock:
            return list(self._verdicts)

    def has_verdict(self, task_id: str, session_id: str) -> bool:
        with self._lock:
            return (task_id, session_id) in self._seen

    def pending_tasks(self, session_id: str, mode: Optional[str] = None) -> list:
        """Tasks this session has not judged yet, in batch order."""
        with self._lock:
            out = []
            for t in self._tasks.values():
                if mode is not None and t.mode != mode:
                    continue
                if (t.task_id, session_id) not in self._seen:
                    out.append(t)
            return out

    def task(self, task_id: str) -> ReviewTask:
        t = self._tasks.get(task_id)
        if t is None:
            raise UnknownTask(task_id)
        return t

    def tasks(self) -> list:
        return list(self._tasks.values())

    def close(self) -> None:
        os.close(self._fd)

    def __enter__(self) -> "VerdictStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
