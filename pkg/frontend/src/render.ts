/**
 * Pure markup construction: state in, HTML string out.
 *
 * Keeping rendering as string functions makes the blinding property
 * directly checkable in tests: the crawl inspects exactly the markup a
 * browser would receive, with no hidden attributes on live nodes.
 */

import type { Choice, Mode, UiTaskView } from "./types.js";
import { MODE_2AFC, choicesForMode } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

function playerMarkup(view: UiTaskView, slot: "a" | "b", frame: number): string {
  const player = view.players.find((p) => p.slot === slot);
  if (player === undefined) return "";
  const label = slot.toUpperCase();
  const src = `${player.media}f${String(frame).padStart(2, "0")}.jpg`;
  const last = player.frameCount - 1;
  return `
  <figure class="player" data-slot="${slot}">
    <figcaption>Clip ${label}</figcaption>
    <img src="${escapeHtml(src)}" alt="clip ${label} frame ${frame}" draggable="false">
    <div class="controls">
      <button type="button" data-action="toggle-play" aria-label="play or pause">&#9199;</button>
      <input type="range" data-action="scrub" min="0" max="${last}" value="${frame}" step="1">
      <span class="frame-counter">${frame + 1} / ${player.frameCount}</span>
    </div>
  </figure>`;
}

function choiceLabel(choice: Choice, mode: Mode): string {
  if (mode === MODE_2AFC) return choice === "A" ? "A better" : "B better";
  return choice;
}

/** Keyboard shortcut for a choice button, or null for unmapped keys. */
export function choiceForKey(key: string, mode: Mode): Choice | null {
  if (mode === MODE_2AFC) {
    if (key === "ArrowLeft") return "A";
    if (key === "ArrowRight") return "B";
    return null;
  }
  if (key === "c" || key === "C") return "Correct";
  if (key === "i" || key === "I") return "Incorrect";
  return null;
}

export function renderTask(view: UiTaskView, frame: number): string {
  const banner =
    view.ruleContext === null
      ? ""
      : `\n  <aside class="rule-banner">${escapeHtml(view.ruleContext)}</aside>`;
  const buttons = choicesForMode(view.mode)
    .map(
      (choice) =>
        `<button type="button" data-choice="${choice}">${choiceLabel(choice, view.mode)}</button>`,
    )
    .join("\n      ");
  return `<section class="task" data-task-id="${escapeHtml(view.taskId)}" data-mode="${view.mode}">${banner}
  <div class="players">${playerMarkup(view, "a", frame)}${playerMarkup(view, "b", frame)}
  </div>
  <nav class="choices">
      ${buttons}
      <button type="button" data-choice="Abstain" class="skip">Skip</button>
  </nav>
  <footer class="progress">${view.remaining} task${view.remaining === 1 ? "" : "s"} remaining</footer>
</section>`;
}

export function renderDone(): string {
  return `<section class="done"><p>No tasks remaining. Thank you for reviewing.</p></section>`;
}

export function renderMediaError(view: UiTaskView, detail: string): string {
  return `<section class="task-error" data-task-id="${escapeHtml(view.taskId)}">
  <p class="error">A clip for this task failed to load (${escapeHtml(detail)}).</p>
  <button type="button" data-choice="Abstain" class="skip">Skip this task</button>
</section>`;
}

export function renderOffline(queued: number): string {
  const note = queued === 1 ? "1 verdict" : `${queued} verdicts`;
  return `<section class="offline">
  <p class="error">Connection lost. ${note} saved locally and will be delivered on reconnect.</p>
  <button type="button" data-action="retry">Retry now</button>
</section>`;
}
