/**
 * Browser bootstrap: wires the session to the DOM.
 *
 * Reads the service origin and session id from the page URL, renders
 * into #app, and maps clicks, keyboard shortcuts, and the scrub slider
 * onto session calls.  Everything testable lives in the other modules;
 * this file is deliberately thin glue.
 */

import { ReviewApi } from "./api.js";
import { VerdictOutbox, type OutboxStorage } from "./queue.js";
import { choiceForKey } from "./render.js";
import { ReviewSession } from "./session.js";
import type { Choice, Mode } from "./types.js";

class BrowserStorage implements OutboxStorage {
  constructor(private readonly storageKey: string) {}

  read(): string | null {
    return window.localStorage.getItem(this.storageKey);
  }

  write(value: string): void {
    window.localStorage.setItem(this.storageKey, value);
  }
}

function refreshFrame(root: HTMLElement, session: ReviewSession): void {
  if (session.state.kind !== "task") return;
  const { view, player } = session.state;
  const frame = player.currentFrame;
  for (const slot of view.players) {
    const figure = root.querySelector(`figure[data-slot="${slot.slot}"]`);
    if (figure === null) continue;
    const img = figure.querySelector("img");
    const range = figure.querySelector<HTMLInputElement>('input[data-action="scrub"]');
    const counter = figure.querySelector(".frame-counter");
    const name = `f${String(frame).padStart(2, "0")}.jpg`;
    if (img !== null) img.setAttribute("src", slot.media + name);
    if (range !== null) range.value = String(frame);
    if (counter !== null) counter.textContent = `${frame + 1} / ${slot.frameCount}`;
  }
}

export function mount(root: HTMLElement, session: ReviewSession): void {
  const paint = () => {
    root.innerHTML = session.render();
  };

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    if (target === null) return;
    const choice = target.getAttribute("data-choice");
    if (choice !== null) {
      void session.submit(choice as Choice).then(paint);
      return;
    }
    const action = target.getAttribute("data-action");
    if (action === "retry") {
      void session.retry().then(paint);
    } else if (action === "toggle-play" && session.state.kind === "task") {
      session.state.player.toggle();
    }
  });

  root.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement | null;
    if (target?.getAttribute("data-action") === "scrub" && session.state.kind === "task") {
      session.state.player.pause();
      session.state.player.scrubTo(Number(target.value));
      refreshFrame(root, session);
    }
  });

  window.addEventListener("keydown", (event) => {
    if (session.state.kind !== "task") return;
    if (event.key === " ") {
      event.preventDefault();
      session.state.player.toggle();
      return;
    }
    const choice = choiceForKey(event.key, session.state.view.mode);
    if (choice !== null) {
      void session.submit(choice).then(paint);
    }
  });

  window.addEventListener("online", () => {
    void session.retry().then(paint);
  });

  let last = performance.now();
  const tick = (stamp: number) => {
    if (session.state.kind === "task") {
      session.state.player.advance(stamp - last);
      refreshFrame(root, session);
    }
    last = stamp;
    window.requestAnimationFrame(tick);
  };

  void session.start().then(() => {
    paint();
    window.requestAnimationFrame(tick);
  });
}

export function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? `s-${Math.random().toString(36).slice(2, 10)}`;
  const mode = (params.get("mode") as Mode | null) ?? undefined;
  const api = new ReviewApi(window.location.origin);
  const outbox = new VerdictOutbox(api, new BrowserStorage(`outbox:${sessionId}`));
  const session = new ReviewSession(api, outbox, sessionId, { mode });
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app mount point");
  mount(root, session);
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  bootstrap();
}
