/**
 * Typed client for the review service.
 *
 * Every call goes through an injectable fetch so tests can script the
 * server.  Failures split into two kinds the caller handles differently:
 * ApiError carries the server's machine-readable code (the request was
 * received and judged), NetworkError means the request may or may not
 * have arrived and is worth retrying.
 */

import type {
  Choice,
  ComplianceStatsPayload,
  ErrorEnvelope,
  Mode,
  NextTaskResponse,
  PreferenceStatsPayload,
  VerdictSubmission,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

/** Frame files follow f00.jpg, f01.jpg, ...; probing stops at this many. */
export const FRAME_PROBE_CAP = 400;

function frameName(index: number): string {
  return `f${String(index).padStart(2, "0")}.jpg`;
}

export class ReviewApi {
  private readonly fetchFn: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      let code = "UnknownError";
      let detail = "";
      try {
        const body = (await response.json()) as ErrorEnvelope;
        code = body.error.code;
        detail = body.error.detail;
      } catch {
        // non-JSON error body: keep the status code as the only signal
      }
      throw new ApiError(response.status, code, detail);
    }
    return response;
  }

  async fetchNextTask(sessionId: string, mode?: Mode): Promise<NextTaskResponse> {
    const params = new URLSearchParams({ session: sessionId });
    if (mode !== undefined) params.set("mode", mode);
    const response = await this.request(`/api/tasks/next?${params.toString()}`);
    return (await response.json()) as NextTaskResponse;
  }

  async submitVerdict(verdict: VerdictSubmission): Promise<void> {
    await this.request("/api/verdicts", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(verdict),
    });
  }

  async fetchPreferenceStats(): Promise<PreferenceStatsPayload> {
    const response = await this.request("/api/stats?mode=preference_2afc");
    return (await response.json()) as PreferenceStatsPayload;
  }

  async fetchComplianceStats(scenario: string): Promise<ComplianceStatsPayload> {
    const params = new URLSearchParams({ mode: "compliance", scenario });
    const response = await this.request(`/api/stats?${params.toString()}`);
    return (await response.json()) as ComplianceStatsPayload;
  }

  /** URL of one frame inside a task's media directory. */
  frameUrl(mediaPath: string, index: number): string {
    return this.baseUrl + mediaPath + frameName(index);
  }

  /**
   * Count a clip's frames by probing f00.jpg upward until the first 404.
   *
   * The API serves individual frames only, so discovery has to walk the
   * naming convention; the cap bounds the walk on misconfigured roots.
   */
  async probeFrameCount(mediaPath: string): Promise<number> {
    for (let index = 0; index < FRAME_PROBE_CAP; index++) {
      try {
        await this.request(mediaPath + frameName(index));
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) return index;
        throw err;
      }
    }
    return FRAME_PROBE_CAP;
  }
}

export function isDuplicateVerdict(err: unknown): boolean {
  return err instanceof ApiError && err.code === "DuplicateVerdict";
}
