"""Automated judge client.

Drives review tasks through a chat-completion style endpoint: renders the
instruction plus a subsampled frame strip per clip, posts the request, and
parses the answer against a fixed token grammar.  Responses that stay
unparseable after the retry budget become Abstain verdicts rather than
guesses; transport failures surface with the task id attached.
"""

from __future__ import annotations

import base64
import os
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import httpx

from ..errors import TransportError
from .tasks import (
    CHOICE_ABSTAIN,
    CHOICES_2AFC,
    CHOICES_COMPLIANCE,
    MODE_2AFC,
    Judge,
    ReviewTask,
    Verdict,
)

DEFAULT_FRAME_STEP = 4
DEFAULT_RETRIES = 2
TOKEN_ENV = "SCA_EVAL_JUDGE_TOKEN"


@dataclass(frozen=True)
class JudgePromptSpec:
    """Template the judge sees: instructions, frame rate, answer tokens."""

    template_id: str
    instruction_text: str
    frame_step: int = DEFAULT_FRAME_STEP
    response_tokens: tuple = CHOICES_2AFC

    def __post_init__(self):
        if self.frame_step < 1:
            raise ValueError(f"frame_step must be >= 1, got {self.frame_step}")
        if len(self.response_tokens) < 2:
            raise ValueError("response grammar needs at least two tokens")
        lowered = [t.lower() for t in self.response_tokens]
        if len(set(lowered)) != len(lowered):
            raise ValueError(f"response tokens are ambiguous: {self.response_tokens}")


@dataclass(frozen=True)
class JudgeEndpoint:
    """Where to send judge requests.

    The auth token is read from the named environment variable at call
    time, never stored, so endpoint descriptors are safe to log.
    """

    base_url: str
    model: str
    token_env: str = TOKEN_ENV
    timeout_s: float = 60.0

    def auth_token(self) -> Optional[str]:
        return os.environ.get(self.token_env)


def parse_judge_response(text: str, tokens: Sequence[str]) -> Optional[str]:
    """Match exactly one grammar token in the reply, case-insensitive.

    Tokens are matched as whole words; zero or multiple matches mean the
    reply is unparseable and the caller should retry.
    """
    found = []
    for tok in tokens:
        if re.search(rf"(?<![A-Za-z0-9]){re.escape(tok)}(?![A-Za-z0-9])", text, re.IGNORECASE):
            found.append(tok)
    if len(found) == 1:
        return found[0]
    return None


def _frame_files(media_root: str, clip: str, step: int) -> list:
    clip_dir = os.path.join(media_root, clip)
    if not os.path.isdir(clip_dir):
        raise FileNotFoundError(f"no media directory for clip {clip!r}")
    names = sorted(n for n in os.listdir(clip_dir) if not n.startswith("."))
    return [os.path.join(clip_dir, n) for n in names[::step]]


def _data_url(path: str) -> str:
    ext = os.path.splitext(path)[1].lstrip(".").lower() or "jpeg"
    if ext == "jpg":
        ext = "jpeg"
    with open(path, "rb") as fh:
        payload = base64.b64encode(fh.read()).decode("ascii")
    return f"data:image/{ext};base64,{payload}"


def _build_messages(task: ReviewTask, prompt: JudgePromptSpec, media_root: str) -> list:
    content = [{"type": "text", "text": prompt.instruction_text}]
    clips = [("A", task.clip_a)]
    if task.clip_b is not None:
        clips.append(("B", task.clip_b))
    for label, clip in clips:
        content.append({"type": "text", "text": f"Clip {label}:"})
        for path in _frame_files(media_root, clip, prompt.frame_step):
            content.append({"type": "image_url", "image_url": {"url": _data_url(path)}})
    tokens = " or ".join(prompt.response_tokens)
    content.append({"type": "text", "text": f"Answer with exactly one of: {tokens}."})
    return [{"role": "user", "content": content}]


def run_ai_judge(
    tasks: Sequence[ReviewTask],
    prompt: JudgePromptSpec,
    endpoint: JudgeEndpoint,
    media_root: str,
    retries: int = DEFAULT_RETRIES,
    transport: Optional[httpx.BaseTransport] = None,
    session_id: str = "ai-judge",
) -> list:
    """Judge every task, returning one Verdict per task in task order.

    A scripted transport can be injected for tests; otherwise a real HTTP
    client talks to endpoint.base_url.
    """
    headers = {"Content-Type": "application/json"}
    token = endpoint.auth_token()
    if token:
        headers["Authorization"] = f"Bearer {token}"
    verdicts = []
    with httpx.Client(
        base_url=endpoint.base_url,
        headers=headers,
        timeout=endpoint.timeout_s,
        transport=transport,
    ) as client:
        for task in tasks:
            tokens = prompt.response_tokens if task.mode == MODE_2AFC else CHOICES_COMPLIANCE
            messages = _build_messages(task, prompt, media_root)
            body = {
                "model": endpoint.model,
                "messages": messages,
                "max_tokens": 16,
                "temperature": 0,
            }
            choice = None
            last_error = None
            for _attempt in range(retries + 1):
                try:
                    resp = client.post("/chat/completions", json=body)
                    resp.raise_for_status()
                    reply = resp.json()["choices"][0]["message"]["content"]
                except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                    last_error = exc
                    continue
                last_error = None
                choice = parse_judge_response(reply, tokens)
                if choice is not None:
                    break
            if last_error is not None:
                raise TransportError(task.task_id, str(last_error))
            if choice is None:
                choice = CHOICE_ABSTAIN
            verdicts.append(
                Verdict(
                    task_id=task.task_id,
                    session_id=session_id,
                    judge=Judge.model(endpoint.model),
                    choice=choice,
                )
            )
    return verdicts
