"""Subjective review: task batches, verdict persistence, stats, judge, HTTP service."""

from __future__ import annotations

from .judge import JudgeEndpoint, JudgePromptSpec, parse_judge_response, run_ai_judge
from .store import VerdictStore
from .tasks import (
    CHOICE_ABSTAIN,
    CHOICES_2AFC,
    CHOICES_COMPLIANCE,
    MODE_2AFC,
    MODE_COMPLIANCE,
    ComplianceStats,
    Judge,
    PreferenceStats,
    ReviewTask,
    Verdict,
    compliance_stats,
    create_review_batch,
    preference_stats,
    tasks_from_json,
    tasks_to_json,
)

__all__ = [
    "CHOICE_ABSTAIN",
    "CHOICES_2AFC",
    "CHOICES_COMPLIANCE",
    "MODE_2AFC",
    "MODE_COMPLIANCE",
    "ComplianceStats",
    "Judge",
    "JudgeEndpoint",
    "JudgePromptSpec",
    "PreferenceStats",
    "ReviewTask",
    "Verdict",
    "VerdictStore",
    "compliance_stats",
    "create_review_batch",
    "parse_judge_response",
    "preference_stats",
    "run_ai_judge",
    "tasks_from_json",
    "tasks_to_json",
]
