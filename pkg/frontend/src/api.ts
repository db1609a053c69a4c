/** Typed client for the operations service JSON API.
 *
 * The dashboard performs no aggregation: every payload field lands on screen
 * as-is, so these shapes mirror the server responses exactly.
 */

export interface LiftStatus {
  lift_id: string;
  building: string;
  unit: number;
  working: boolean;
  mode: string;
  mode_id: number;
  since: string | null;
  data_age_s: number | null;
}

export interface StatusPayload {
  now: string;
  statuses: LiftStatus[];
}

export interface NoticeEntry {
  lift_id: string;
  mode: string;
  mode_id: number;
  since: string | null;
  message: string;
}

export interface NoData {
  no_data: true;
}

export function isNoData(value: unknown): value is NoData {
  return typeof value === "object" && value !== null && (value as NoData).no_data === true;
}

export interface WaitDirectionFull {
  count: number;
  mean_s: number;
  min_s: number;
  max_s: number;
}

export interface WaitDirectionSingle {
  count: number;
  value: number;
}

export type WaitDirection = WaitDirectionFull | WaitDirectionSingle | NoData;

export interface WaitTimesPayload {
  stat?: "mean" | "max" | "min";
  up: WaitDirection;
  down: WaitDirection;
}

export type HallCallsPayload = { up: number; down: number } | NoData;
export type DirectionSplitPayload = { up_pct: number; down_pct: number } | NoData;
export type ModeSplitPayload =
  | { percentages: Record<string, number>; total_lift_seconds: number }
  | NoData;

export interface SiteBuilding {
  code: string;
  min_level: number;
  max_level: number;
  lifts: { lift_id: string; unit: number; served_levels: number[] }[];
}

export interface SitePayload {
  buildings: SiteBuilding[];
  bridges: unknown[];
}

export interface RouteLeg {
  mode: string;
  from: { building: string; level: number };
  to: { building: string; level: number };
  expected_wait_s: number;
  travel_s: number;
}

export type RoutePayload =
  | { legs: RouteLeg[]; total_s: number; stairs_advisory: boolean; stairs_total_s: number | null }
  | { no_route: true };

export interface SessionPayload {
  token: string;
  role: string;
  display_name: string;
  expires_at: string;
}

export interface Filters {
  scope: { kind: "all" } | { kind: "building"; code: string } | { kind: "lift"; id: string };
  start: string | null; // RFC-3339 or null for the server's trailing-24h default
  end: string | null;
  stat: "mean" | "max" | "min";
}

export function defaultFilters(): Filters {
  return { scope: { kind: "all" }, start: null, end: null, stat: "mean" };
}

/** Query string for an analytics request; omitted fields use server defaults. */
export function filterQuery(filters: Filters, withStat: boolean): string {
  const params = new URLSearchParams();
  if (filters.scope.kind === "building") params.set("building", filters.scope.code);
  if (filters.scope.kind === "lift") params.set("lift", filters.scope.id);
  if (filters.start) params.set("start", filters.start);
  if (filters.end) params.set("end", filters.end);
  if (withStat) params.set("stat", filters.stat);
  const qs = params.toString();
  return qs ? `?${qs}` : "";
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, detail: string) {
    super(detail);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(public baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown, signal?: AbortSignal): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
      signal,
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload.error ?? "error", payload.detail ?? response.statusText);
    }
    return payload as T;
  }

  getStatus(signal?: AbortSignal): Promise<StatusPayload> {
    return this.request("GET", "/api/v1/status", undefined, signal);
  }

  getNotices(signal?: AbortSignal): Promise<{ notices: NoticeEntry[] }> {
    return this.request("GET", "/api/v1/notices", undefined, signal);
  }

  getSite(signal?: AbortSignal): Promise<SitePayload> {
    return this.request("GET", "/api/v1/site", undefined, signal);
  }

  getWaitTimes(filters: Filters, signal?: AbortSignal): Promise<WaitTimesPayload> {
    return this.request("GET", `/api/v1/analytics/wait-times${filterQuery(filters, true)}`, undefined, signal);
  }

  getHallCalls(filters: Filters, signal?: AbortSignal): Promise<HallCallsPayload> {
    return this.request("GET", `/api/v1/analytics/hall-calls${filterQuery(filters, false)}`, undefined, signal);
  }

  getDirectionSplit(filters: Filters, signal?: AbortSignal): Promise<DirectionSplitPayload> {
    return this.request("GET", `/api/v1/analytics/direction-split${filterQuery(filters, false)}`, undefined, signal);
  }

  getModeSplit(filters: Filters, signal?: AbortSignal): Promise<ModeSplitPayload> {
    return this.request("GET", `/api/v1/analytics/mode-split${filterQuery(filters, false)}`, undefined, signal);
  }

  postRoute(
    origin: { building: string; level: number },
    destination: { building: string; level: number },
    signal?: AbortSignal,
  ): Promise<RoutePayload> {
    return this.request("POST", "/api/v1/route", { origin, destination }, signal);
  }

  async signIn(userId: string, password: string): Promise<SessionPayload> {
    const session = await this.request<SessionPayload>("POST", "/api/v1/session", {
      user_id: userId,
      password,
    });
    this.token = session.token;
    return session;
  }

  async signOut(): Promise<void> {
    await this.request("DELETE", "/api/v1/session");
    this.token = null;
  }
}
