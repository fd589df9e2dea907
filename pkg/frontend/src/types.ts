/**
 * Wire types for the review service HTTP API.
 *
 * Field names mirror the server payloads byte for byte; the view types
 * below them are what the rendering layer consumes.  Nothing in any
 * payload identifies which model produced a clip.
 */

export type Mode = "preference_2afc" | "compliance";

export const MODE_2AFC: Mode = "preference_2afc";
export const MODE_COMPLIANCE: Mode = "compliance";

export type Choice = "A" | "B" | "Correct" | "Incorrect" | "Abstain";

export const CHOICE_ABSTAIN: Choice = "Abstain";

/** Choices a reviewer can pick for a task of the given mode. */
export function choicesForMode(mode: Mode): readonly Choice[] {
  return mode === MODE_2AFC ? ["A", "B"] : ["Correct", "Incorrect"];
}

// --- server payloads --------------------------------------------------------

export interface TaskPayload {
  task_id: string;
  mode: Mode;
  rule_context: string | null;
  clip_a: string;
  clip_b?: string;
  /** slot name ("clip_a" / "clip_b") to media directory URL */
  media: Record<string, string>;
}

export interface NextTaskResponse {
  task: TaskPayload | null;
  remaining: number;
}

export interface VerdictSubmission {
  task_id: string;
  session_id: string;
  choice: Choice;
  reviewer_id?: string;
  latency_ms?: number;
}

export interface PreferenceStatsPayload {
  mode: Mode;
  pct_a: number;
  pct_b: number;
  n: number;
  n_abstain: number;
}

export interface ComplianceStatsPayload {
  mode: Mode;
  scenario: string;
  pct_correct: number;
  n: number;
  n_abstain: number;
}

export interface ErrorEnvelope {
  error: { code: string; detail: string };
}

// --- view model --------------------------------------------------------------

export interface PlayerSlot {
  /** screen position, left to right */
  slot: "a" | "b";
  /** opaque clip reference, never a model name */
  clip: string;
  /** media directory URL ending in a slash */
  media: string;
  frameCount: number;
}

export interface UiTaskView {
  taskId: string;
  mode: Mode;
  ruleContext: string | null;
  players: PlayerSlot[];
  remaining: number;
}
