/**
 * Offline outbox: a verdict submitted without a connection is delivered
 * exactly once after reconnect, through lost responses and restarts.
 */

import { describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { MemoryStorage, VerdictOutbox } from "../src/queue.js";
import type { VerdictSubmission } from "../src/types.js";
import { pairServer } from "./mock_server.js";

const BASE = "http://review.test";

function verdict(taskId: string, choice: VerdictSubmission["choice"] = "A"): VerdictSubmission {
  return { task_id: taskId, session_id: "s1", choice, reviewer_id: "s1", latency_ms: 50 };
}

describe("queueing while offline", () => {
  it("persists the verdict before any delivery attempt", () => {
    const server = pairServer(1);
    const storage = new MemoryStorage();
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), storage);
    outbox.enqueue(verdict("t0001"));
    const onDisk = JSON.parse(storage.read() ?? "[]") as VerdictSubmission[];
    expect(onDisk).toHaveLength(1);
    expect(onDisk[0]?.task_id).toBe("t0001");
    expect(server.countFor("t0001")).toBe(0);
  });

  it("keeps the verdict through a failed flush", async () => {
    const server = pairServer(1);
    server.online = false;
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t0001"));
    const result = await outbox.flush();
    expect(result.offline).toBe(true);
    expect(result.delivered).toBe(0);
    expect(outbox.size).toBe(1);
    expect(server.countFor("t0001")).toBe(0);
  });

  it("delivers exactly once after reconnecting", async () => {
    const server = pairServer(1);
    server.online = false;
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t0001"));
    await outbox.flush();

    server.online = true;
    const result = await outbox.flush();
    expect(result).toEqual({ delivered: 1, rejected: [], offline: false });
    expect(outbox.size).toBe(0);
    expect(server.countFor("t0001")).toBe(1);

    const again = await outbox.flush();
    expect(again.delivered).toBe(0);
    expect(server.countFor("t0001")).toBe(1);
  });

  it("drops an exact duplicate enqueue", () => {
    const server = pairServer(1);
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t0001", "A"));
    outbox.enqueue(verdict("t0001", "B"));
    expect(outbox.size).toBe(1);
  });
});

describe("exactly-once under lost responses", () => {
  it("treats DuplicateVerdict on retry as the missing acknowledgment", async () => {
    const server = pairServer(1);
    server.loseResponses = 1; // first POST stores the verdict, reply never arrives
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t0001"));

    const first = await outbox.flush();
    expect(first.offline).toBe(true);
    expect(outbox.size).toBe(1);
    expect(server.countFor("t0001")).toBe(1);

    const second = await outbox.flush();
    expect(second.offline).toBe(false);
    expect(outbox.size).toBe(0);
    expect(server.countFor("t0001")).toBe(1);
    expect(server.verdictFor("t0001", "s1")?.choice).toBe("A");
  });

  it("survives a restart between store and acknowledgment", async () => {
    const server = pairServer(1);
    server.loseResponses = 1;
    const storage = new MemoryStorage();
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), storage);
    outbox.enqueue(verdict("t0001"));
    await outbox.flush();
    expect(server.countFor("t0001")).toBe(1);

    // a fresh outbox over the same storage stands in for a page reload
    const reborn = new VerdictOutbox(new ReviewApi(BASE, server.fetch), storage);
    expect(reborn.size).toBe(1);
    const result = await reborn.flush();
    expect(result.offline).toBe(false);
    expect(reborn.size).toBe(0);
    expect(server.countFor("t0001")).toBe(1);
  });
});

describe("ordering and poison verdicts", () => {
  it("delivers queued verdicts in submission order", async () => {
    const server = pairServer(3);
    server.online = false;
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t0001"));
    outbox.enqueue(verdict("t0002", "B"));
    outbox.enqueue(verdict("t0003"));
    await outbox.flush();

    server.online = true;
    const result = await outbox.flush();
    expect(result.delivered).toBe(3);
    const posts = server.requests.filter((r) => r.startsWith("POST"));
    expect(posts).toHaveLength(3);
    expect(server.verdictFor("t0002", "s1")?.choice).toBe("B");
  });

  it("sets aside a verdict the server rejects and keeps going", async () => {
    const server = pairServer(2);
    const outbox = new VerdictOutbox(new ReviewApi(BASE, server.fetch), new MemoryStorage());
    outbox.enqueue(verdict("t9999")); // unknown on the server
    outbox.enqueue(verdict("t0002"));
    const result = await outbox.flush();
    expect(result.delivered).toBe(1);
    expect(result.rejected).toHaveLength(1);
    expect(result.rejected[0]?.task_id).toBe("t9999");
    expect(outbox.size).toBe(0);
    expect(server.countFor("t0002")).toBe(1);
  });
});
