/**
 * Reviewer session state machine.
 *
 * Optimistic UI with the server as source of truth: tasks come from
 * /api/tasks/next one at a time, verdicts leave through the outbox, and
 * whatever the server says about duplicates or remaining work wins.
 * Submission is single-flight per session, and a task already answered
 * in this session is never submitted again, so a double-click cannot
 * produce two verdicts even before the server's uniqueness check.
 */

import { ApiError, NetworkError, ReviewApi } from "./api.js";
import { FramePlayer, sharedFrameCount } from "./player.js";
import { VerdictOutbox } from "./queue.js";
import { renderDone, renderMediaError, renderOffline, renderTask } from "./render.js";
import type { Choice, Mode, NextTaskResponse, TaskPayload, UiTaskView } from "./types.js";
import { CHOICE_ABSTAIN } from "./types.js";

export type SessionState =
  | { kind: "idle" }
  | { kind: "task"; view: UiTaskView; player: FramePlayer }
  | { kind: "media-error"; view: UiTaskView; detail: string }
  | { kind: "offline"; queued: number }
  | { kind: "done" };

export type SubmitOutcome = "recorded" | "queued" | "ignored";

export interface SessionOptions {
  mode?: Mode;
  reviewerId?: string;
  fps?: number;
  /** clock used for latency measurement, defaults to Date.now */
  now?: () => number;
}

export function toView(payload: TaskPayload, remaining: number): UiTaskView {
  const players: UiTaskView["players"] = [
    { slot: "a", clip: payload.clip_a, media: payload.media["clip_a"] ?? "", frameCount: 0 },
  ];
  if (payload.clip_b !== undefined) {
    players.push({
      slot: "b",
      clip: payload.clip_b,
      media: payload.media["clip_b"] ?? "",
      frameCount: 0,
    });
  }
  return {
    taskId: payload.task_id,
    mode: payload.mode,
    ruleContext: payload.rule_context,
    players,
    remaining,
  };
}

export class ReviewSession {
  state: SessionState = { kind: "idle" };

  private submitting = false;
  private readonly answered = new Set<string>();
  private shownAt = 0;
  private readonly now: () => number;

  constructor(
    private readonly api: ReviewApi,
    private readonly outbox: VerdictOutbox,
    readonly sessionId: string,
    private readonly options: SessionOptions = {},
  ) {
    this.now = options.now ?? (() => Date.now());
  }

  async start(): Promise<void> {
    await this.advance();
  }

  /** Submit the displayed task's verdict; extra calls while one is in flight are ignored. */
  async submit(choice: Choice): Promise<SubmitOutcome> {
    const view = this.currentView();
    if (view === null || this.submitting || this.answered.has(view.taskId)) {
      return "ignored";
    }
    this.submitting = true;
    try {
      this.outbox.enqueue({
        task_id: view.taskId,
        session_id: this.sessionId,
        choice,
        reviewer_id: this.options.reviewerId ?? this.sessionId,
        latency_ms: Math.max(0, Math.round(this.now() - this.shownAt)),
      });
      this.answered.add(view.taskId);
      const result = await this.outbox.flush();
      if (result.offline) {
        this.state = { kind: "offline", queued: this.outbox.size };
        return "queued";
      }
      await this.advance();
      return "recorded";
    } finally {
      this.submitting = false;
    }
  }

  /** Explicit skip: recorded server-side as an Abstain verdict. */
  async skip(): Promise<SubmitOutcome> {
    return this.submit(CHOICE_ABSTAIN);
  }

  /** Re-attempt delivery and loading after a connection loss. */
  async retry(): Promise<void> {
    const result = await this.outbox.flush();
    if (result.offline) {
      this.state = { kind: "offline", queued: this.outbox.size };
      return;
    }
    await this.advance();
  }

  render(): string {
    switch (this.state.kind) {
      case "idle":
        return "";
      case "task":
        return renderTask(this.state.view, this.state.player.currentFrame);
      case "media-error":
        return renderMediaError(this.state.view, this.state.detail);
      case "offline":
        return renderOffline(this.state.queued);
      case "done":
        return renderDone();
    }
  }

  private currentView(): UiTaskView | null {
    if (this.state.kind === "task" || this.state.kind === "media-error") {
      return this.state.view;
    }
    return null;
  }

  private async advance(): Promise<void> {
    let next: NextTaskResponse;
    try {
      next = await this.api.fetchNextTask(this.sessionId, this.options.mode);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.state = { kind: "offline", queued: this.outbox.size };
        return;
      }
      throw err;
    }
    if (next.task === null) {
      this.state = { kind: "done" };
      return;
    }
    const view = toView(next.task, next.remaining);
    try {
      for (const player of view.players) {
        player.frameCount = await this.api.probeFrameCount(player.media);
      }
    } catch (err) {
      if (err instanceof NetworkError) {
        this.state = { kind: "offline", queued: this.outbox.size };
        return;
      }
      if (err instanceof ApiError) {
        this.state = { kind: "media-error", view, detail: err.message };
        this.shownAt = this.now();
        return;
      }
      throw err;
    }
    const frames = sharedFrameCount(view.players.map((p) => p.frameCount));
    if (frames < 1) {
      this.state = { kind: "media-error", view, detail: "clip has no frames" };
      this.shownAt = this.now();
      return;
    }
    this.state = { kind: "task", view, player: new FramePlayer(frames, this.options.fps) };
    this.shownAt = this.now();
  }
}
