/** Usage events per device with their consumption and cost, grouped by the
 * UTC day each event starts on (the server's event list is the truth). */

import { el, verbatim } from "../dom.js";
import type { EventRecord } from "../types.js";

export function eventDay(event: EventRecord): string {
  return event.t_start.slice(0, 10);
}

export function timelineView(events: EventRecord[]): HTMLElement {
  if (events.length === 0) {
    return el("div", { class: "timeline" }, el("p", { class: "empty" }, "no events yet"));
  }
  const byDay = new Map<string, EventRecord[]>();
  for (const event of events) {
    const day = eventDay(event);
    const bucket = byDay.get(day);
    if (bucket) bucket.push(event);
    else byDay.set(day, [event]);
  }
  const sections = [...byDay.entries()]
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([day, dayEvents]) =>
      el(
        "section",
        { class: "timeline-day", "data-day": day },
        el("h4", {}, day),
        ...dayEvents.map((event) =>
          el(
            "div",
            { class: "timeline-event", "data-device": event.device_id },
            el("span", { class: "event-device" }, event.device_id),
            el("span", { class: "event-start" }, event.t_start),
            el("span", { class: "event-duration" }, `${verbatim(event.duration_s)} s`),
            el("span", { class: "event-energy" }, `${verbatim(event.energy_kwh)} kWh`),
            el("span", { class: "event-cost" }, `${verbatim(event.cost_eur)} EUR`),
          ),
        ),
      ),
    );
  return el("div", { class: "timeline" }, ...sections);
}
