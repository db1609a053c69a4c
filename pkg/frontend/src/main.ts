/** Page wiring: tabs, auto-refresh, fetch lifecycle, sign-in. */

import { ApiClient, ApiError, Filters, SitePayload, StatusPayload, defaultFilters } from "./api.js";
import {
  renderDirectionSplit,
  renderHallCalls,
  renderModeSplit,
  renderWaitTimes,
} from "./charts.js";
import { readFilters, renderFilterForm } from "./filters.js";
import { parseNode, populateNodeSelects, renderRoutePlan } from "./route-finder.js";
import { renderNoticeBoard, renderStatusBoard } from "./status-board.js";

const STATUS_REFRESH_MS = 60_000;

const api = new ApiClient("");

let site: SitePayload | null = null;
let lastStatus: StatusPayload | null = null;
let analyticsAbort: AbortController | null = null;
let routeAbort: AbortController | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function refreshStatus(): Promise<void> {
  const board = el("status-board");
  const notices = el("notice-board");
  try {
    lastStatus = await api.getStatus();
    renderStatusBoard(board, lastStatus);
    const noticePayload = await api.getNotices();
    renderNoticeBoard(notices, noticePayload.notices);
  } catch (error) {
    // keep the last payload on screen under an error banner
    renderStatusBoard(board, lastStatus, error instanceof Error ? error.message : String(error));
  }
}

async function refreshAnalytics(filters: Filters): Promise<void> {
  analyticsAbort?.abort();
  analyticsAbort = new AbortController();
  const signal = analyticsAbort.signal;
  const panels = {
    waits: el("chart-wait-times"),
    calls: el("chart-hall-calls"),
    direction: el("chart-direction-split"),
    modes: el("chart-mode-split"),
  };
  try {
    renderWaitTimes(panels.waits, await api.getWaitTimes(filters, signal), filters.stat);
    renderHallCalls(panels.calls, await api.getHallCalls(filters, signal));
    renderDirectionSplit(panels.direction, await api.getDirectionSplit(filters, signal));
    renderModeSplit(panels.modes, await api.getModeSplit(filters, signal));
  } catch (error) {
    if (signal.aborted) return; // superseded by a newer filter change
    if (error instanceof ApiError && error.status === 401) {
      showSignInGate();
      return;
    }
    for (const panel of Object.values(panels)) {
      panel.innerHTML = `<p class="banner error">Could not load data.</p>`;
    }
  }
}

function showSignInGate(): void {
  el("analytics-gate").hidden = false;
  el("analytics-content").hidden = true;
}

function showAnalytics(): void {
  el("analytics-gate").hidden = true;
  el("analytics-content").hidden = false;
}

async function replan(): Promise<void> {
  if (!site) return;
  routeAbort?.abort();
  routeAbort = new AbortController();
  const origin = parseNode(el<HTMLSelectElement>("route-origin").value);
  const destination = parseNode(el<HTMLSelectElement>("route-destination").value);
  const output = el("route-plan");
  try {
    const plan = await api.postRoute(origin, destination, routeAbort.signal);
    renderRoutePlan(output, plan);
  } catch (error) {
    if (routeAbort.signal.aborted) return;
    output.innerHTML = `<p class="banner error">Route request failed.</p>`;
  }
}

function wireTabs(): void {
  const tabs = document.querySelectorAll<HTMLButtonElement>("nav button[data-page]");
  tabs.forEach((tab) =>
    tab.addEventListener("click", () => {
      tabs.forEach((t) => t.classList.toggle("active", t === tab));
      document.querySelectorAll<HTMLElement>("main > section").forEach((section) => {
        section.hidden = section.id !== tab.dataset.page;
      });
    }),
  );
}

async function boot(): Promise<void> {
  wireTabs();
  site = await api.getSite();

  // status page: first paint plus a 60 s auto-refresh
  await refreshStatus();
  setInterval(refreshStatus, STATUS_REFRESH_MS);

  // analytics page: the filter form drives every chart
  const form = el<HTMLFormElement>("filter-form");
  renderFilterForm(form, site);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void refreshAnalytics(readFilters(form, site!));
  });
  form.addEventListener("change", () => {
    void refreshAnalytics(readFilters(form, site!));
  });
  if (api.token) {
    showAnalytics();
    void refreshAnalytics(defaultFilters());
  } else {
    showSignInGate();
  }

  // route finder: re-plan on every change so users can explore what-ifs
  populateNodeSelects(
    el<HTMLSelectElement>("route-origin"),
    el<HTMLSelectElement>("route-destination"),
    site,
  );
  el("route-origin").addEventListener("change", () => void replan());
  el("route-destination").addEventListener("change", () => void replan());
  void replan();

  // sign-in
  el<HTMLFormElement>("signin-form").addEventListener("submit", async (event) => {
    event.preventDefault();
    const user = el<HTMLInputElement>("signin-user").value;
    const password = el<HTMLInputElement>("signin-password").value;
    const message = el("signin-message");
    try {
      const session = await api.signIn(user, password);
      message.textContent = `Signed in as ${session.display_name} (${session.role}).`;
      showAnalytics();
      void refreshAnalytics(readFilters(form, site!));
    } catch (error) {
      message.textContent =
        error instanceof ApiError ? "User id or password is wrong." : "Sign-in failed.";
    }
  });
}

document.addEventListener("DOMContentLoaded", () => void boot());
