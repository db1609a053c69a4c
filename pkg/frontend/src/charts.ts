/** Bar-chart rendering for the analytics pages.
 *
 * Bars are plain divs scaled to the largest value; the number shown beside
 * each bar is the untouched API field (kept raw in data-value), because the
 * client never aggregates anything itself.
 */

import {
  DirectionSplitPayload,
  HallCallsPayload,
  ModeSplitPayload,
  WaitDirection,
  WaitTimesPayload,
  isNoData,
} from "./api.js";

export const NO_DATA_TEXT = "No Data Available";

export interface Bar {
  label: string;
  value: number;
  display: string;
}

export function renderNoData(container: HTMLElement): void {
  container.innerHTML = `<p class="no-data">${NO_DATA_TEXT}</p>`;
}

export function renderBars(container: HTMLElement, bars: Bar[], unit: string): void {
  const max = Math.max(...bars.map((b) => b.value), 0);
  container.innerHTML =
    `<div class="chart" role="img">` +
    bars
      .map((bar) => {
        const width = max > 0 ? (bar.value / max) * 100 : 0;
        return (
          `<div class="chart-row">` +
          `<span class="chart-label">${bar.label}</span>` +
          `<span class="chart-bar ${bar.label.replace(/\W+/g, "-")}" style="width: ${width.toFixed(2)}%"></span>` +
          `<span class="chart-value" data-value="${bar.value}">${bar.display}${unit}</span>` +
          `</div>`
        );
      })
      .join("") +
    `</div>`;
}

function waitValue(entry: WaitDirection, stat: string): number | null {
  if (isNoData(entry)) return null;
  if ("value" in entry) return entry.value;
  if (stat === "max") return entry.max_s;
  if (stat === "min") return entry.min_s;
  return entry.mean_s;
}

function trim(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(1);
}

/** Two bars, up and down hall calls; either side may be no-data on its own. */
export function renderWaitTimes(
  container: HTMLElement,
  payload: WaitTimesPayload,
  stat: "mean" | "max" | "min",
): void {
  const up = waitValue(payload.up, stat);
  const down = waitValue(payload.down, stat);
  if (up === null && down === null) {
    renderNoData(container);
    return;
  }
  const bars: Bar[] = [];
  for (const [label, value] of [["up hall call", up], ["down hall call", down]] as const) {
    bars.push(
      value === null
        ? { label, value: 0, display: NO_DATA_TEXT }
        : { label, value, display: trim(value) },
    );
  }
  renderBars(container, bars, " s");
}

export function renderHallCalls(container: HTMLElement, payload: HallCallsPayload): void {
  if (isNoData(payload)) {
    renderNoData(container);
    return;
  }
  renderBars(
    container,
    [
      { label: "up hall call", value: payload.up, display: String(payload.up) },
      { label: "down hall call", value: payload.down, display: String(payload.down) },
    ],
    "",
  );
}

export function renderDirectionSplit(container: HTMLElement, payload: DirectionSplitPayload): void {
  if (isNoData(payload)) {
    renderNoData(container);
    return;
  }
  renderBars(
    container,
    [
      { label: "up", value: payload.up_pct, display: payload.up_pct.toFixed(1) },
      { label: "down", value: payload.down_pct, display: payload.down_pct.toFixed(1) },
    ],
    "%",
  );
}

export function renderModeSplit(container: HTMLElement, payload: ModeSplitPayload): void {
  if (isNoData(payload)) {
    renderNoData(container);
    return;
  }
  const bars = Object.entries(payload.percentages).map(([mode, pct]) => ({
    label: mode.replace(/_/g, " "),
    value: pct,
    display: pct.toFixed(1),
  }));
  renderBars(container, bars, "%");
}
