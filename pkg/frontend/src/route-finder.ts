/** Route-finder form and plan rendering; re-queries on every form change. */

import { RouteLeg, RoutePayload, SitePayload } from "./api.js";
import { MODE_ICONS } from "./glyphs.js";

function legRow(leg: RouteLeg, index: number): string {
  const icon = MODE_ICONS[leg.mode] ?? "";
  const wait = leg.expected_wait_s > 0 ? ` (wait ~${Math.round(leg.expected_wait_s)} s)` : "";
  return (
    `<li class="route-leg mode-${leg.mode}">` +
    `<span class="leg-icon" aria-hidden="true">${icon}</span>` +
    `<span class="leg-mode">${leg.mode}</span> ` +
    `${leg.from.building} level ${leg.from.level} → ${leg.to.building} level ${leg.to.level}` +
    `${wait}, ${Math.round(leg.travel_s)} s` +
    `</li>`
  );
}

export function renderRoutePlan(container: HTMLElement, payload: RoutePayload): void {
  if ("no_route" in payload) {
    container.innerHTML =
      `<p class="no-route">No route is available right now; every path uses a lift ` +
      `that is out of action. Try again later.</p>`;
    return;
  }
  if (payload.legs.length === 0) {
    container.innerHTML = `<p class="already-there">You are already there.</p>`;
    return;
  }
  const advisory = payload.stairs_advisory
    ? `<p class="stairs-advisory">Consider the stairs: about ` +
      `${Math.round(payload.stairs_total_s ?? 0)} s all the way, and better for you.</p>`
    : "";
  container.innerHTML =
    `<ol class="route-legs">${payload.legs.map(legRow).join("")}</ol>` +
    `<p class="route-total" data-total="${payload.total_s}">` +
    `Total: ${Math.round(payload.total_s)} s</p>` +
    advisory;
}

/** Populate the origin/destination selects from the site topology. */
export function populateNodeSelects(
  originSelect: HTMLSelectElement,
  destinationSelect: HTMLSelectElement,
  site: SitePayload,
): void {
  const options = site.buildings
    .flatMap((b) =>
      Array.from({ length: b.max_level - b.min_level + 1 }, (_, i) => b.min_level + i).map(
        (level) => `<option value="${b.code}:${level}">${b.code} level ${level}</option>`,
      ),
    )
    .join("");
  originSelect.innerHTML = options;
  destinationSelect.innerHTML = options;
}

export function parseNode(value: string): { building: string; level: number } {
  const [building, level] = value.split(":");
  return { building, level: Number(level) };
}
