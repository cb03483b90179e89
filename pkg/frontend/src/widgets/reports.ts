/** Last-month daily reports: energy (consumption + production) and cost. */

import { barWidth, el, verbatim } from "../dom.js";
import type { Api, DaySummary } from "../types.js";

export function lastDays(count: number, today: Date): string[] {
  const dates: string[] = [];
  for (let offset = count - 1; offset >= 0; offset -= 1) {
    const day = new Date(today.getTime() - offset * 86400_000);
    dates.push(day.toISOString().slice(0, 10));
  }
  return dates;
}

export async function loadDailySummaries(api: Api, today: Date, days = 30): Promise<DaySummary[]> {
  const summaries = await Promise.all(lastDays(days, today).map((date) => api.daySummary(date)));
  return summaries;
}

export function energyReportView(summaries: DaySummary[]): HTMLElement {
  const maxKwh = Math.max(...summaries.map((s) => Math.max(s.consumption_kwh, s.production_kwh)), 0);
  const rows = summaries.map((s) =>
    el(
      "div",
      { class: "report-row", "data-date": s.date },
      el("span", { class: "report-date" }, s.date),
      el(
        "span",
        { class: "bars" },
        el("span", {
          class: "bar consumption",
          style: `width:${barWidth(s.consumption_kwh, maxKwh)}`,
          title: `consumption ${verbatim(s.consumption_kwh)} kWh`,
        }),
        el("span", {
          class: "bar production",
          style: `width:${barWidth(s.production_kwh, maxKwh)}`,
          title: `production ${verbatim(s.production_kwh)} kWh`,
        }),
      ),
      el("span", { class: "report-value" }, `${verbatim(s.consumption_kwh)} kWh`),
    ),
  );
  return el("div", { class: "energy-report" }, ...rows);
}

export function costReportView(summaries: DaySummary[]): HTMLElement {
  const maxCost = Math.max(...summaries.map((s) => s.cost_eur), 0);
  const rows = summaries.map((s) =>
    el(
      "div",
      { class: "report-row", "data-date": s.date },
      el("span", { class: "report-date" }, s.date),
      el(
        "span",
        { class: "bars" },
        el("span", {
          class: "bar cost",
          style: `width:${barWidth(s.cost_eur, maxCost)}`,
          title: `cost ${verbatim(s.cost_eur)} EUR`,
        }),
      ),
      el("span", { class: "report-value" }, `${verbatim(s.cost_eur)} EUR`),
    ),
  );
  return el("div", { class: "cost-report" }, ...rows);
}
