/** Current-day gauges and the day-end estimation widget. */

import { barWidth, el, verbatim } from "../dom.js";
import type { DaySummary, EstimateToday } from "../types.js";

function gauge(label: string, value: number, max: number, unit: string): HTMLElement {
  return el(
    "div",
    { class: `gauge gauge-${label.replace(/\s+/g, "-")}` },
    el("span", { class: "gauge-label" }, label),
    el(
      "span",
      { class: "gauge-track" },
      el("span", { class: "gauge-fill", style: `width:${barWidth(value, max)}` }),
    ),
    el("span", { class: "gauge-value" }, `${verbatim(value)} ${unit}`),
  );
}

export function gaugesView(today: DaySummary): HTMLElement {
  const max = Math.max(today.consumption_kwh, today.production_kwh, 1);
  return el(
    "div",
    { class: "gauges" },
    gauge("consumption", today.consumption_kwh, max, "kWh"),
    gauge("production", today.production_kwh, max, "kWh"),
    el("div", { class: "gauge-cost" }, `cost so far: ${verbatim(today.cost_eur)} EUR`),
  );
}

export function estimateView(estimate: EstimateToday): HTMLElement {
  return el(
    "div",
    { class: "estimate" },
    el(
      "div",
      { class: "estimate-row" },
      el("span", {}, "expected consumption today"),
      el("strong", { class: "estimate-consumption" }, `${verbatim(estimate.consumption_kwh)} kWh`),
    ),
    el(
      "div",
      { class: "estimate-row" },
      el("span", {}, "expected production today"),
      el("strong", { class: "estimate-production" }, `${verbatim(estimate.production_kwh)} kWh`),
    ),
  );
}
