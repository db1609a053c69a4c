/** The analytics filter form: building/lift scope, start, end, stat radio.
 *
 * Mirrors the portal form: first visit shows all lifts over the trailing
 * 24 hours with the mean statistic selected.
 */

import { Filters, SitePayload, defaultFilters } from "./api.js";

export function renderFilterForm(form: HTMLFormElement, site: SitePayload): void {
  const buildingOptions = site.buildings
    .map((b) => `<option value="${b.code}">${b.code}</option>`)
    .join("");
  const liftOptions = site.buildings
    .flatMap((b) => b.lifts.map((l) => `<option value="${l.lift_id}">${l.lift_id}</option>`))
    .join("");
  form.innerHTML = `
    <label>Scope
      <select name="scope">
        <option value="all" selected>All Lifts</option>
        <optgroup label="Building">${buildingOptions}</optgroup>
        <optgroup label="Lift">${liftOptions}</optgroup>
      </select>
    </label>
    <label>Start <input type="datetime-local" name="start" step="1"></label>
    <label>End <input type="datetime-local" name="end" step="1"></label>
    <fieldset class="stat-radio">
      <legend>Waiting time</legend>
      <label><input type="radio" name="stat" value="mean" checked> average</label>
      <label><input type="radio" name="stat" value="max"> maximum</label>
      <label><input type="radio" name="stat" value="min"> minimum</label>
    </fieldset>
    <button type="submit">Get Data</button>
  `;
}

function toRfc3339(local: string): string | null {
  if (!local) return null;
  const date = new Date(local);
  if (Number.isNaN(date.getTime())) return null;
  return date.toISOString().replace(/\.\d{3}Z$/, "Z");
}

/** Read the form into a Filters value; empty dates mean the server default. */
export function readFilters(form: HTMLFormElement, site: SitePayload): Filters {
  const filters = defaultFilters();
  const data = new FormData(form);
  const scope = String(data.get("scope") ?? "all");
  if (scope !== "all") {
    const isBuilding = site.buildings.some((b) => b.code === scope);
    filters.scope = isBuilding ? { kind: "building", code: scope } : { kind: "lift", id: scope };
  }
  filters.start = toRfc3339(String(data.get("start") ?? ""));
  filters.end = toRfc3339(String(data.get("end") ?? ""));
  const stat = String(data.get("stat") ?? "mean");
  if (stat === "max" || stat === "min" || stat === "mean") filters.stat = stat;
  return filters;
}
