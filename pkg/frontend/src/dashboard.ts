/** Dashboard shell: pages of cells, one widget per cell, each widget
 * loading independently so one failing endpoint never takes down the rest.
 * Layout edits (move, remove, add) persist locally and survive reloads. */

import { el } from "./dom.js";
import {
  ALL_WIDGET_TYPES,
  LayoutError,
  LayoutState,
  LayoutStore,
  WidgetInstance,
  WidgetType,
  addWidget,
  moveWidget,
  removeWidget,
} from "./layout.js";
import type { Api, Period } from "./types.js";
import { AdvisorWidget } from "./widgets/advisor.js";
import { estimateView, gaugesView } from "./widgets/gauges.js";
import { ITEMIZATION_PERIODS, itemizationView } from "./widgets/itemization.js";
import { costReportView, energyReportView, loadDailySummaries } from "./widgets/reports.js";
import { timelineView } from "./widgets/timeline.js";
import { noUserDrivenView, usageView } from "./widgets/usage.js";

export const WIDGET_TITLES: Record<WidgetType, string> = {
  "energy-report": "Production & consumption",
  "cost-report": "Cost",
  gauges: "Today's gauges",
  estimate: "Energy estimation",
  itemization: "Device itemization",
  timeline: "Timeline",
  advisor: "Energy advisor",
  usage: "Appliance usage",
};

export interface DashboardOptions {
  now?: () => Date;
}

export class Dashboard {
  private state: LayoutState;
  private activePage = 0;
  private now: () => Date;

  constructor(
    private api: Api,
    private store: LayoutStore,
    readonly root: HTMLElement,
    options: DashboardOptions = {},
  ) {
    this.state = store.load();
    this.now = options.now ?? (() => new Date());
  }

  render(): void {
    const tabs = el(
      "nav",
      { class: "page-tabs" },
      ...Array.from({ length: this.state.pages }, (_, page) => {
        const button = el(
          "button",
          { class: page === this.activePage ? "page-tab active" : "page-tab", "data-page": String(page) },
          `Page ${page + 1}`,
        );
        button.addEventListener("click", () => {
          this.activePage = page;
          this.render();
        });
        return button;
      }),
      this.addControl(),
    );
    const grid = el("div", { class: "grid" });
    for (let cell = 0; cell < this.state.cellsPerPage; cell += 1) {
      const instance = this.state.instances.find(
        (w) => w.page === this.activePage && w.cell === cell,
      );
      grid.append(instance ? this.widgetShell(instance) : el("div", { class: "cell empty-cell", "data-cell": String(cell) }));
    }
    this.root.replaceChildren(tabs, grid);
  }

  private addControl(): HTMLElement {
    const picker = el("select", { class: "add-widget" });
    picker.append(el("option", { value: "" }, "add widget..."));
    for (const type of ALL_WIDGET_TYPES) {
      picker.append(el("option", { value: type }, WIDGET_TITLES[type]));
    }
    picker.addEventListener("change", () => {
      if (!picker.value) return;
      const free = this.freeCell();
      if (free === null) {
        picker.value = "";
        return;
      }
      this.apply((state) => addWidget(state, picker.value as WidgetType, this.activePage, free));
      picker.value = "";
    });
    return picker;
  }

  private freeCell(): number | null {
    for (let cell = 0; cell < this.state.cellsPerPage; cell += 1) {
      if (!this.state.instances.some((w) => w.page === this.activePage && w.cell === cell)) {
        return cell;
      }
    }
    return null;
  }

  /** Run a layout edit; invalid edits leave both state and storage untouched. */
  apply(edit: (state: LayoutState) => LayoutState): boolean {
    try {
      this.state = edit(this.state);
    } catch (error) {
      if (error instanceof LayoutError) return false;
      throw error;
    }
    this.store.save(this.state);
    this.render();
    return true;
  }

  move(id: string, page: number, cell: number): boolean {
    return this.apply((state) => moveWidget(state, id, page, cell));
  }

  remove(id: string): boolean {
    return this.apply((state) => removeWidget(state, id));
  }

  get layout(): LayoutState {
    return this.state;
  }

  private widgetShell(instance: WidgetInstance): HTMLElement {
    const body = el("div", { class: "widget-body" }, el("p", { class: "loading" }, "loading..."));
    const moveButton = el("button", { class: "widget-move", title: "move to next free cell" }, "⇄");
    moveButton.addEventListener("click", () => {
      const free = this.freeCell();
      if (free !== null) this.move(instance.id, this.activePage, free);
    });
    const removeButton = el("button", { class: "widget-remove", title: "remove" }, "×");
    removeButton.addEventListener("click", () => this.remove(instance.id));
    const shell = el(
      "section",
      { class: "cell widget", "data-widget": instance.widget, "data-instance": instance.id, "data-cell": String(instance.cell) },
      el(
        "header",
        { class: "widget-header" },
        el("h3", {}, WIDGET_TITLES[instance.widget]),
        el("span", { class: "widget-tools" }, moveButton, removeButton),
      ),
      body,
    );
    void this.mount(instance.widget, body);
    return shell;
  }

  /** Load one widget; failures stay local to the widget's body. */
  async mount(widget: WidgetType, body: HTMLElement): Promise<void> {
    try {
      const content = await this.widgetContent(widget, body);
      body.replaceChildren(content);
    } catch (error) {
      const retry = el("button", { class: "widget-retry" }, "retry");
      retry.addEventListener("click", () => {
        body.replaceChildren(el("p", { class: "loading" }, "loading..."));
        void this.mount(widget, body);
      });
      body.replaceChildren(
        el("p", { class: "widget-error" }, `failed to load: ${(error as Error).message}`),
        retry,
      );
    }
  }

  private async widgetContent(widget: WidgetType, body: HTMLElement): Promise<HTMLElement> {
    switch (widget) {
      case "energy-report":
        return energyReportView(await loadDailySummaries(this.api, this.now()));
      case "cost-report":
        return costReportView(await loadDailySummaries(this.api, this.now()));
      case "gauges": {
        const today = this.now().toISOString().slice(0, 10);
        return gaugesView(await this.api.daySummary(today));
      }
      case "estimate":
        return estimateView(await this.api.estimateToday());
      case "itemization": {
        const load = async (period: Period): Promise<void> => {
          const entries = await this.api.itemization(period);
          body.replaceChildren(
            itemizationView(entries, period, (next) => void load(next)),
          );
        };
        const entries = await this.api.itemization(ITEMIZATION_PERIODS[0]);
        return itemizationView(entries, ITEMIZATION_PERIODS[0], (next) => void load(next));
      }
      case "timeline": {
        const events = await this.api.events();
        return timelineView(events);
      }
      case "advisor": {
        const container = el("div", {});
        const advisor = new AdvisorWidget(this.api, container);
        await advisor.load();
        return container;
      }
      case "usage": {
        const devices = await this.api.devices();
        const userDriven = devices.filter((d) => d.user_driven).map((d) => d.device_id);
        if (userDriven.length === 0) return noUserDrivenView();
        const show = async (deviceId: string): Promise<void> => {
          const model = await this.api.usage(deviceId);
          body.replaceChildren(usageView(model, userDriven, (next) => void show(next)));
        };
        const model = await this.api.usage(userDriven[0]);
        return usageView(model, userDriven, (next) => void show(next));
      }
    }
  }
}
