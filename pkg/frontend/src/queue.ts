/**
 * Offline-safe verdict delivery with exactly-once semantics.
 *
 * Verdicts are persisted before the first send attempt and removed only
 * on acknowledgment.  The server holds one verdict per task and session,
 * so redelivery after a lost response comes back as DuplicateVerdict;
 * the outbox treats that as the acknowledgment it missed.  Net effect:
 * at-least-once transport underneath, exactly-once storage on top.
 */

import { isDuplicateVerdict, ApiError, NetworkError, ReviewApi } from "./api.js";
import type { VerdictSubmission } from "./types.js";

export interface OutboxStorage {
  read(): string | null;
  write(value: string): void;
}

export class MemoryStorage implements OutboxStorage {
  private value: string | null = null;

  read(): string | null {
    return this.value;
  }

  write(value: string): void {
    this.value = value;
  }
}

export interface FlushResult {
  delivered: number;
  /** verdicts the server rejected outright (bad choice, unknown task) */
  rejected: VerdictSubmission[];
  /** true when a network failure stopped the flush early */
  offline: boolean;
}

export class VerdictOutbox {
  private pending: VerdictSubmission[];

  constructor(
    private readonly api: ReviewApi,
    private readonly storage: OutboxStorage,
  ) {
    const raw = storage.read();
    this.pending = raw === null ? [] : (JSON.parse(raw) as VerdictSubmission[]);
  }

  get size(): number {
    return this.pending.length;
  }

  has(taskId: string, sessionId: string): boolean {
    return this.pending.some((v) => v.task_id === taskId && v.session_id === sessionId);
  }

  /** Persist a verdict for delivery; duplicates of a queued verdict are dropped. */
  enqueue(verdict: VerdictSubmission): void {
    if (this.has(verdict.task_id, verdict.session_id)) return;
    this.pending.push(verdict);
    this.persist();
  }

  /**
   * Try to deliver everything queued, in order.
   *
   * Stops at the first network failure and keeps the rest for the next
   * call.  Server-side rejections other than DuplicateVerdict drop the
   * verdict (retrying cannot fix it) and report it.
   */
  async flush(): Promise<FlushResult> {
    const rejected: VerdictSubmission[] = [];
    let delivered = 0;
    while (this.pending.length > 0) {
      const head = this.pending[0]!;
      try {
        await this.api.submitVerdict(head);
        delivered += 1;
      } catch (err) {
        if (err instanceof NetworkError) {
          this.persist();
          return { delivered, rejected, offline: true };
        }
        if (isDuplicateVerdict(err)) {
          // the earlier attempt landed; this is our acknowledgment
        } else if (err instanceof ApiError) {
          rejected.push(head);
        } else {
          throw err;
        }
      }
      this.pending.shift();
      this.persist();
    }
    return { delivered, rejected, offline: false };
  }

  private persist(): void {
    this.storage.write(JSON.stringify(this.pending));
  }
}
