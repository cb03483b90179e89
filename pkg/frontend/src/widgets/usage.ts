/** Usage models of user-driven devices: weekly frequency, start-hour
 * histogram, mean energy per run. */

import { barWidth, el, verbatim } from "../dom.js";
import type { UsageModel } from "../types.js";

export function usageView(
  model: UsageModel,
  deviceIds: string[],
  onDevice?: (deviceId: string) => void,
): HTMLElement {
  const select = el("select", { class: "usage-device" });
  for (const id of deviceIds) {
    const option = el("option", { value: id }, id);
    if (id === model.device_id) option.selected = true;
    select.append(option);
  }
  if (onDevice) select.addEventListener("change", () => onDevice(select.value));

  const peak = Math.max(...model.start_hour_histogram, 1);
  const bars = model.start_hour_histogram.map((count, hour) =>
    el(
      "span",
      {
        class: "hist-bar",
        "data-hour": String(hour),
        "data-count": verbatim(count),
        title: `${String(hour).padStart(2, "0")}:00 - ${verbatim(count)} runs`,
      },
      el("span", { class: "hist-fill", style: `height:${barWidth(count, peak)}` }),
    ),
  );
  return el(
    "div",
    { class: "usage" },
    select,
    el(
      "div",
      { class: "usage-stats" },
      el("span", { class: "usage-per-week" }, `${verbatim(model.events_per_week)} runs/week`),
      el("span", { class: "usage-mean-kwh" }, `${verbatim(model.mean_event_kwh)} kWh/run`),
      el("span", { class: "usage-count" }, `${verbatim(model.event_count)} runs total`),
    ),
    el("div", { class: "histogram" }, ...bars),
  );
}

export function noUserDrivenView(): HTMLElement {
  return el("p", { class: "empty" }, "no user-driven devices registered");
}
