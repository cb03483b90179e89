import type {
  Advice,
  Api,
  DaySummary,
  Device,
  EstimateToday,
  EventRecord,
  FeedbackAction,
  ItemizationEntry,
  Period,
  RejectCause,
  UsageModel,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = typeof fetch;

/** Thin typed client for /api/v1. The session token travels as a bearer
 * credential on every call; all displayed numbers come back readymade. */
export class HttpApi implements Api {
  constructor(
    private token: string,
    private base: string = "",
    private fetchFn: FetchLike = fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.base}/api/v1${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      let detail = response.statusText;
      try {
        detail = ((await response.json()) as { detail?: string }).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  daySummary(date: string): Promise<DaySummary> {
    return this.request("GET", `/summary/day?date=${encodeURIComponent(date)}`);
  }

  itemization(period: Period): Promise<ItemizationEntry[]> {
    return this.request("GET", `/itemization?period=${period}`);
  }

  estimateToday(): Promise<EstimateToday> {
    return this.request("GET", "/estimate/today");
  }

  events(params: { device?: string; from?: string; to?: string } = {}): Promise<EventRecord[]> {
    const query = new URLSearchParams();
    if (params.device) query.set("device", params.device);
    if (params.from) query.set("from", params.from);
    if (params.to) query.set("to", params.to);
    const suffix = query.toString() ? `?${query.toString()}` : "";
    return this.request("GET", `/events${suffix}`);
  }

  devices(): Promise<Device[]> {
    return this.request("GET", "/devices");
  }

  usage(deviceId: string, period: Period = "month"): Promise<UsageModel> {
    return this.request("GET", `/usage/${encodeURIComponent(deviceId)}?period=${period}`);
  }

  advices(): Promise<Advice[]> {
    return this.request("GET", "/advices");
  }

  sendFeedback(adviceId: string, action: FeedbackAction, cause?: RejectCause): Promise<Advice[]> {
    return this.request("POST", `/advices/${encodeURIComponent(adviceId)}/feedback`, {
      action,
      ...(cause ? { cause } : {}),
    });
  }
}
