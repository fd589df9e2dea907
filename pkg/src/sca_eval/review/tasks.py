"""Review task construction and verdict statistics.

Two modes: two-alternative forced choice between clips from two models,
and single-clip rule-compliance review.  Reviewers only ever see opaque
clip references; model identity lives in a separate clip-to-model table
that never travels with a task.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import EmptyInput, MalformedRecord, UnknownTask

MODE_2AFC = "preference_2afc"
MODE_COMPLIANCE = "compliance"

CHOICES_2AFC = ("A", "B")
CHOICES_COMPLIANCE = ("Correct", "Incorrect")
CHOICE_ABSTAIN = "Abstain"


@dataclass(frozen=True)
class ReviewTask:
    """One unit of review work.

    clip_a and clip_b are stored in PRESENTED order; the low bit of
    presentation_order_seed says whether that order is flipped relative
    to the canonical input order, which is what ties a screen-side choice
    back to a model.
    """

    task_id: str
    mode: str
    clip_a: str
    clip_b: Optional[str]
    rule_context: Optional[str]
    presentation_order_seed: int

    def __post_init__(self):
        if self.mode == MODE_2AFC:
            if not self.clip_b:
                raise ValueError(f"task {self.task_id}: preference mode needs two clips")
        elif self.mode == MODE_COMPLIANCE:
            if self.clip_b is not None:
                raise ValueError(f"task {self.task_id}: compliance mode takes exactly one clip")
        else:
            raise ValueError(f"task {self.task_id}: unknown mode {self.mode!r}")

    @property
    def flipped(self) -> bool:
        return bool(self.presentation_order_seed & 1)


@dataclass(frozen=True)
class Judge:
    kind: str  # "human" | "model"
    name: str

    def __post_init__(self):
        if self.kind not in ("human", "model"):
            raise ValueError(f"judge kind must be human or model, got {self.kind!r}")

    @staticmethod
    def human(reviewer_id: str) -> "Judge":
        return Judge("human", reviewer_id)

    @staticmethod
    def model(name: str) -> "Judge":
        return Judge("model", name)


@dataclass(frozen=True)
class Verdict:
    """One judgment bound to a task and a reviewer session."""

    task_id: str
    session_id: str
    judge: Judge
    choice: str
    timestamp: float = field(default_factory=time.time)
    latency_ms: int = 0

    def __post_init__(self):
        valid = CHOICES_2AFC + CHOICES_COMPLIANCE + (CHOICE_ABSTAIN,)
        if self.choice not in valid:
            raise ValueError(f"choice must be one of {valid}, got {self.choice!r}")
        if self.latency_ms < 0:
            raise ValueError(f"negative latency {self.latency_ms}")


def choice_valid_for_mode(choice: str, mode: str) -> bool:
    if choice == CHOICE_ABSTAIN:
        return True
    if mode == MODE_2AFC:
        return choice in CHOICES_2AFC
    return choice in CHOICES_COMPLIANCE


def create_review_batch(
    pairs: Sequence,
    mode: str,
    shuffle_seed: int,
    rule_context: Optional[str] = None,
) -> list:
    """Build review tasks with counterbalanced A/B presentation.

    For preference mode each item is a (clip_from_model_a, clip_from_model_b)
    pair in canonical order; exactly half the tasks (rounded down) present
    them flipped, with the flip pattern shuffled by the seed so the batch
    is deterministic yet balanced for any seed.  Compliance items are
    single clip references and never flip.
    """
    if not pairs:
        raise ValueError("cannot build a review batch from zero items")
    rng = np.random.default_rng(shuffle_seed)
    n = len(pairs)
    flips = np.zeros(n, dtype=bool)
    flips[: n // 2] = True
    rng.shuffle(flips)
    # per-task seeds carry the flip in the low bit
    bases = rng.integers(0, 2**62, size=n, dtype=np.int64)
    tasks = []
    for i, item in enumerate(pairs):
        seed = int(bases[i]) * 2 + int(flips[i])
        tid = f"t{i + 1:04d}"
        if mode == MODE_2AFC:
            if not (isinstance(item, (tuple, list)) and len(item) == 2):
                raise ValueError(f"preference item {i} must be a (clip_a, clip_b) pair, got {item!r}")
            a, b = (item[1], item[0]) if flips[i] else (item[0], item[1])
            tasks.append(ReviewTask(tid, mode, str(a), str(b), rule_context, seed))
        elif mode == MODE_COMPLIANCE:
            if isinstance(item, (tuple, list)):
                raise ValueError(f"compliance item {i} must be a single clip reference, got {item!r}")
            # compliance has nothing to flip; force the bit off
            tasks.append(ReviewTask(tid, mode, str(item), None, rule_context, int(bases[i]) * 2))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return tasks


def tasks_to_json(tasks: Sequence[ReviewTask]) -> str:
    """Canonical JSON for a task batch: stable key order, one trailing newline."""
    objs = [
        {
            "task_id": t.task_id,
            "mode": t.mode,
            "clip_a": t.clip_a,
            "clip_b": t.clip_b,
            "rule_context": t.rule_context,
            "presentation_order_seed": t.presentation_order_seed,
        }
        for t in tasks
    ]
    return json.dumps(objs, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def tasks_from_json(text: str) -> list:
    try:
        objs = json.loads(text)
        return [
            ReviewTask(
                o["task_id"],
                o["mode"],
                o["clip_a"],
                o["clip_b"],
                o["rule_context"],
                int(o["presentation_order_seed"]),
            )
            for o in objs
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(text[:60], f"not a task batch: {exc}")


@dataclass(frozen=True)
class PreferenceStats:
    pct_a: float
    pct_b: float
    n: int
    n_abstain: int


def preference_stats(
    verdicts: Sequence,
    tasks: Sequence,
    clip_models: Mapping[str, str],
    model_a: str,
    model_b: str,
) -> PreferenceStats:
    """Resolve screen-side choices back to models and tally percentages.

    Abstentions are excluded from the percentages but counted.  pct_b is
    defined as 100 - pct_a so the two always sum to exactly 100.
    """
    by_id = {t.task_id: t for t in tasks}
    count_a = count_b = abstain = 0
    for v in verdicts:
        task = by_id.get(v.task_id)
        if task is None:
            raise UnknownTask(v.task_id)
        if task.mode != MODE_2AFC:
            continue
        if v.choice == CHOICE_ABSTAIN:
            abstain += 1
            continue
        if v.choice not in CHOICES_2AFC:
            raise ValueError(f"verdict for {v.task_id} has non-preference choice {v.choice!r}")
        chosen_clip = task.clip_a if v.choice == "A" else task.clip_b
        model = clip_models.get(chosen_clip)
        if model == model_a:
            count_a += 1
        elif model == model_b:
            count_b += 1
        else:
            raise ValueError(f"clip {chosen_clip!r} maps to neither {model_a!r} nor {model_b!r}")
    n = count_a + count_b
    if n == 0:
        raise EmptyInput("no resolvable preference verdicts")
    pct_a = 100.0 * count_a / n
    return PreferenceStats(pct_a, 100.0 - pct_a, n, abstain)


@dataclass(frozen=True)
class ComplianceStats:
    pct_correct: float
    n: int
    n_abstain: int


def compliance_stats(verdicts: Sequence, tasks: Sequence, scenario: str) -> ComplianceStats:
    """Percent Correct over compliance verdicts whose task matches scenario."""
    by_id = {t.task_id: t for t in tasks}
    correct = incorrect = abstain = 0
    for v in verdicts:
        task = by_id.get(v.task_id)
        if task is None:
            raise UnknownTask(v.task_id)
        if task.mode != MODE_COMPLIANCE or task.rule_context != scenario:
            continue
        if v.choice == CHOICE_ABSTAIN:
            abstain += 1
        elif v.choice == "Correct":
            correct += 1
        elif v.choice == "Incorrect":
            incorrect += 1
        else:
            raise ValueError(f"verdict for {v.task_id} has non-compliance choice {v.choice!r}")
    n = correct + incorrect
    if n == 0:
        raise EmptyInput(f"no compliance verdicts for scenario {scenario!r}")
    return ComplianceStats(100.0 * correct / n, n, abstain)
