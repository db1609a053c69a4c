/** The public operational status board and notice board. */

import { LiftStatus, NoticeEntry, StatusPayload } from "./api.js";
import { crossGlyph, tickGlyph } from "./glyphs.js";

/** Data older than one missed logger batch gets a staleness caption. */
export const STALE_AFTER_S = 300;

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

function modeText(mode: string): string {
  return mode.replace(/_/g, " ");
}

function statusCard(status: LiftStatus): string {
  const glyph = status.working ? tickGlyph() : crossGlyph();
  const staleness =
    status.data_age_s !== null && status.data_age_s > STALE_AFTER_S
      ? `<p class="staleness">data ${status.data_age_s} s old</p>`
      : "";
  const never =
    status.data_age_s === null ? `<p class="staleness">no data received yet</p>` : "";
  return (
    `<article class="status-card ${status.working ? "working" : "not-working"}" ` +
    `data-lift="${escapeHtml(status.lift_id)}" data-age="${status.data_age_s ?? ""}">` +
    `${glyph}<h3>${escapeHtml(status.lift_id)}</h3>` +
    `<p class="mode">${escapeHtml(modeText(status.mode))}</p>` +
    staleness + never +
    `</article>`
  );
}

/** Render the status grid; on fetch failure pass the retained payload plus an
 * error so the banner shows over the last known state. */
export function renderStatusBoard(
  container: HTMLElement,
  payload: StatusPayload | null,
  error?: string,
): void {
  const banner = error
    ? `<div class="banner error" role="alert">${escapeHtml(error)} (showing last known state)</div>`
    : "";
  if (!payload) {
    container.innerHTML = banner || `<p class="empty">Loading lift statuses…</p>`;
    return;
  }
  container.innerHTML =
    banner +
    `<div class="status-grid">${payload.statuses.map(statusCard).join("")}</div>` +
    `<p class="as-of">as of ${escapeHtml(payload.now)}</p>`;
}

export function renderNoticeBoard(container: HTMLElement, notices: NoticeEntry[]): void {
  if (notices.length === 0) {
    container.innerHTML = `<p class="empty">All lifts are working.</p>`;
    return;
  }
  container.innerHTML =
    `<ul class="notice-list">` +
    notices
      .map(
        (n) =>
          `<li class="notice" data-lift="${escapeHtml(n.lift_id)}">` +
          `${crossGlyph()}<span class="notice-text">${escapeHtml(n.message)}</span></li>`,
      )
      .join("") +
    `</ul>`;
}
