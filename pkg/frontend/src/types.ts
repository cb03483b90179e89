/** Wire types of the /api/v1 JSON contract. */

export interface DaySummary {
  date: string; // YYYY-MM-DD
  consumption_kwh: number;
  production_kwh: number;
  cost_eur: number;
}

export interface ItemizationEntry {
  device_id: string;
  energy_kwh: number;
  cost_eur: number;
  share: number; // fraction of monitored consumption, used for bar widths only
}

export interface EstimateToday {
  consumption_kwh: number;
  production_kwh: number;
}

export interface EventRecord {
  device_id: string;
  t_start: string; // ISO-8601 UTC
  duration_s: number;
  energy_kwh: number;
  cost_eur: number | null;
}

export interface Device {
  device_id: string;
  device_type: string;
  room: string;
  mobility: string;
  curtailable: boolean;
  user_driven: boolean;
  has_standby: boolean;
  credit_eur: number;
}

export interface UsageModel {
  device_id: string;
  events_per_week: number;
  start_hour_histogram: number[]; // 24 bins
  mean_event_kwh: number;
  event_count: number;
}

export interface Advice {
  advice_id: string;
  advice_type: string;
  device_id: string;
  device_type: string;
  score: number;
  message: string;
  params: Record<string, unknown>;
}

export type FeedbackAction = "accept" | "converted" | "reject";
export type RejectCause = "device_reluctance" | "advice_mistrust";

export type Period = "day" | "week" | "month" | "year";

/** What widgets need from the backend; the HTTP client and the test mock
 * both implement this. */
export interface Api {
  daySummary(date: string): Promise<DaySummary>;
  itemization(period: Period): Promise<ItemizationEntry[]>;
  estimateToday(): Promise<EstimateToday>;
  events(params?: { device?: string; from?: string; to?: string }): Promise<EventRecord[]>;
  devices(): Promise<Device[]>;
  usage(deviceId: string, period?: Period): Promise<UsageModel>;
  advices(): Promise<Advice[]>;
  sendFeedback(adviceId: string, action: FeedbackAction, cause?: RejectCause): Promise<Advice[]>;
}
