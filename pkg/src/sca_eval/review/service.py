"""HTTP facade over the review store.

Serves tasks to reviewer sessions, accepts verdicts, reports aggregates,
and streams clip frames.  Task payloads carry only opaque clip references
and media URLs: nothing in a response identifies which model produced a
clip, so the UI stays blind by construction.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping, Optional

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse

from ..errors import DuplicateVerdict, EmptyInput, UnknownTask
from .store import VerdictStore
from .tasks import (
    MODE_2AFC,
    MODE_COMPLIANCE,
    Judge,
    ReviewTask,
    Verdict,
    choice_valid_for_mode,
    compliance_stats,
    preference_stats,
)

# clip and frame names must stay inside the media root
_SAFE_NAME = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _error(status: int, code: str, detail: str = "") -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "detail": detail}})


def _task_payload(task: ReviewTask, remaining: int) -> dict:
    clips = {"clip_a": task.clip_a}
    if task.clip_b is not None:
        clips["clip_b"] = task.clip_b
    media = {key: f"/media/{clip}/" for key, clip in clips.items()}
    return {
        "task": {
            "task_id": task.task_id,
            "mode": task.mode,
            "rule_context": task.rule_context,
            **clips,
            "media": media,
        },
        "remaining": remaining,
    }


def build_app(
    store: VerdictStore,
    media_root: str,
    clip_models: Optional[Mapping[str, str]] = None,
    model_pair: Optional[tuple] = None,
) -> FastAPI:
    """Wire the review endpoints around a store and a media directory.

    clip_models and model_pair are only consulted server-side for the
    stats endpoint; they never appear in any response payload.
    """
    app = FastAPI(title="review service", docs_url=None, redoc_url=None)
    root = Path(media_root).resolve()

    @app.get("/api/tasks/next")
    def next_task(session: str, mode: Optional[str] = None):
        if not session:
            return _error(422, "ValidationError", "session is required")
        if mode is not None and mode not in (MODE_2AFC, MODE_COMPLIANCE):
            return _error(422, "ValidationError", f"unknown mode {mode!r}")
        pending = store.pending_tasks(session, mode)
        if not pending:
            return {"task": None, "remaining": 0}
        return _task_payload(pending[0], len(pending))

    @app.post("/api/verdicts")
    async def post_verdict(request: Request):
        body = await request.json()
        try:
            task_id = body["task_id"]
            session_id = body["session_id"]
            choice = body["choice"]
        except (KeyError, TypeError):
            return _error(422, "ValidationError", "task_id, session_id, choice are required")
        reviewer = body.get("reviewer_id", session_id)
        latency = int(body.get("latency_ms", 0))
        try:
            task = store.task(task_id)
        except UnknownTask:
            return _error(404, "UnknownTask", task_id)
        if not choice_valid_for_mode(choice, task.mode):
            return _error(422, "ValidationError", f"choice {choice!r} not valid for {task.mode}")
        verdict = Verdict(
            task_id=task_id,
            session_id=session_id,
            judge=Judge.human(reviewer),
            choice=choice,
            latency_ms=latency,
        )
        try:
            store.append(verdict)
        except DuplicateVerdict:
            return _error(409, "DuplicateVerdict", f"{task_id}/{session_id}")
        return {"accepted": True, "task_id": task_id}

    @app.get("/api/stats")
    def stats(mode: str, scenario: Optional[str] = None):
        verdicts = store.verdicts()
        tasks = store.tasks()
        if mode == MODE_2AFC:
            if clip_models is None or model_pair is None:
                return _error(422, "ValidationError", "service not configured for preference stats")
            try:
                s = preference_stats(verdicts, tasks, clip_models, model_pair[0], model_pair[1])
            except EmptyInput as exc:
                return _error(404, "EmptyInput", str(exc))
            return {
                "mode": mode,
                "pct_a": s.pct_a,
                "pct_b": s.pct_b,
                "n": s.n,
                "n_abstain": s.n_abstain,
            }
        if mode == MODE_COMPLIANCE:
            if scenario is None:
                return _error(422, "ValidationError", "scenario is required for compliance stats")
            try:
                s = compliance_stats(verdicts, tasks, scenario)
            except EmptyInput as exc:
                return _error(404, "EmptyInput", str(exc))
            return {
                "mode": mode,
                "scenario": scenario,
                "pct_correct": s.pct_correct,
                "n": s.n,
                "n_abstain": s.n_abstain,
            }
        return _error(422, "ValidationError", f"unknown mode {mode!r}")

    @app.get("/media/{clip}/{frame}")
    def media(clip: str, frame: str):
        if not _SAFE_NAME.match(clip) or not _SAFE_NAME.match(frame):
            return _error(404, "NotFound", "bad media path")
        path = (root / clip / frame).resolve()
        # belt and suspenders: resolved path must stay under the root
        if root not in path.parents:
            return _error(404, "NotFound", "bad media path")
        if not path.is_file():
            return _error(404, "NotFound", f"{clip}/{frame}")
        return FileResponse(path)

    return app
