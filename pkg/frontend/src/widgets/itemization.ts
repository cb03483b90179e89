/** Per-device consumption and cost, for the current day, week or year.
 * The share drives bar widths only; the printed figures are the server's. */

import { barWidth, el, verbatim } from "../dom.js";
import type { ItemizationEntry, Period } from "../types.js";

export const ITEMIZATION_PERIODS: Period[] = ["day", "week", "year"];

export function itemizationView(
  entries: ItemizationEntry[],
  period: Period,
  onPeriod?: (period: Period) => void,
): HTMLElement {
  const tabs = el(
    "div",
    { class: "period-tabs" },
    ...ITEMIZATION_PERIODS.map((p) => {
      const button = el(
        "button",
        { class: p === period ? "tab active" : "tab", "data-period": p },
        p,
      );
      if (onPeriod) button.addEventListener("click", () => onPeriod(p));
      return button;
    }),
  );
  if (entries.length === 0) {
    return el("div", { class: "itemization" }, tabs,
      el("p", { class: "empty" }, "no usage recorded in this period"));
  }
  const rows = entries.map((entry) =>
    el(
      "div",
      { class: "item-row", "data-device": entry.device_id },
      el("span", { class: "item-device" }, entry.device_id),
      el(
        "span",
        { class: "bars" },
        el("span", { class: "bar share", style: `width:${barWidth(entry.share, 1)}` }),
      ),
      el("span", { class: "item-energy" }, `${verbatim(entry.energy_kwh)} kWh`),
      el("span", { class: "item-cost" }, `${verbatim(entry.cost_eur)} EUR`),
    ),
  );
  return el("div", { class: "itemization" }, tabs, ...rows);
}
