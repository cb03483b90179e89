/** Tiny DOM builder; keeps widget views declarative and dependency-free. */

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

/** Server-provided numbers are displayed verbatim, never recomputed. */
export function verbatim(value: number | string | null): string {
  return value === null ? "-" : String(value);
}

/** Presentation-only scaling for bar lengths (not a displayed number). */
export function barWidth(value: number, max: number): string {
  if (!(max > 0) || !(value > 0)) return "0%";
  return `${Math.min(100, (value / max) * 100)}%`;
}
