/** Widget layout: pages of cells, each widget instance pinned to exactly
 * one cell. The layout persists locally and survives reloads; invalid
 * edits are rejected and leave the stored layout untouched. */

export type WidgetType =
  | "energy-report"
  | "cost-report"
  | "gauges"
  | "estimate"
  | "itemization"
  | "timeline"
  | "advisor"
  | "usage";

export const ALL_WIDGET_TYPES: WidgetType[] = [
  "energy-report",
  "cost-report",
  "gauges",
  "estimate",
  "itemization",
  "timeline",
  "advisor",
  "usage",
];

export interface WidgetInstance {
  id: string;
  widget: WidgetType;
  page: number;
  cell: number;
}

export interface LayoutState {
  pages: number;
  cellsPerPage: number;
  instances: WidgetInstance[];
  nextId: number;
}

export class LayoutError extends Error {}

export function defaultLayout(): LayoutState {
  const placements: [WidgetType, number, number][] = [
    ["energy-report", 0, 0],
    ["cost-report", 0, 1],
    ["gauges", 0, 2],
    ["estimate", 0, 3],
    ["itemization", 0, 4],
    ["timeline", 0, 5],
    ["advisor", 1, 0],
    ["usage", 1, 1],
  ];
  return {
    pages: 2,
    cellsPerPage: 6,
    instances: placements.map(([widget, page, cell], index) => ({
      id: `w${index}`,
      widget,
      page,
      cell,
    })),
    nextId: placements.length,
  };
}

function cellOccupant(state: LayoutState, page: number, cell: number): WidgetInstance | undefined {
  return state.instances.find((w) => w.page === page && w.cell === cell);
}

function checkPlacement(state: LayoutState, page: number, cell: number): void {
  if (!Number.isInteger(page) || page < 0 || page >= state.pages) {
    throw new LayoutError(`page out of range: ${page}`);
  }
  if (!Number.isInteger(cell) || cell < 0 || cell >= state.cellsPerPage) {
    throw new LayoutError(`cell out of range: ${cell}`);
  }
  if (cellOccupant(state, page, cell)) {
    throw new LayoutError(`cell (${page}, ${cell}) is already occupied`);
  }
}

export function addWidget(state: LayoutState, widget: WidgetType, page: number, cell: number): LayoutState {
  checkPlacement(state, page, cell);
  return {
    ...state,
    instances: [...state.instances, { id: `w${state.nextId}`, widget, page, cell }],
    nextId: state.nextId + 1,
  };
}

export function moveWidget(state: LayoutState, id: string, page: number, cell: number): LayoutState {
  const instance = state.instances.find((w) => w.id === id);
  if (!instance) throw new LayoutError(`unknown widget instance: ${id}`);
  if (instance.page === page && instance.cell === cell) return state;
  checkPlacement(state, page, cell);
  return {
    ...state,
    instances: state.instances.map((w) => (w.id === id ? { ...w, page, cell } : w)),
  };
}

export function removeWidget(state: LayoutState, id: string): LayoutState {
  if (!state.instances.some((w) => w.id === id)) {
    throw new LayoutError(`unknown widget instance: ${id}`);
  }
  return { ...state, instances: state.instances.filter((w) => w.id !== id) };
}

const STORAGE_KEY = "hems.layout";

export class LayoutStore {
  constructor(private storage: Storage, private key: string = STORAGE_KEY) {}

  load(): LayoutState {
    const raw = this.storage.getItem(this.key);
    if (raw === null) return defaultLayout();
    try {
      const parsed = JSON.parse(raw) as LayoutState;
      if (!Array.isArray(parsed.instances)) return defaultLayout();
      return parsed;
    } catch {
      return defaultLayout();
    }
  }

  save(state: LayoutState): void {
    this.storage.setItem(this.key, JSON.stringify(state));
  }
}
