/**
 * Navigation-grid preview: the same row-clustering rule the runtime uses,
 * duplicated here and pinned by the shared fixtures in fixtures/grid/.
 *
 * Two interactive elements share a row iff their vertical centers differ
 * by less than half the smaller block height; rows are the transitive
 * closure, ordered by mean vertical center, columns by horizontal center.
 */

import { blockHeight, center, type Block } from "./blocks.js";

export const ROW_TOLERANCE = 0.5;

export interface GridEntry<T> {
  element: T;
  row: number; // 1-based
  col: number; // 1-based
  rows: number;
  cols: number; // width of this element's row
}

interface Like {
  block: Block;
  interactivity: boolean;
}

export function buildGridRows<T extends Like>(elements: T[]): T[][] {
  const interactive = elements.filter((e) => e.interactivity);
  if (interactive.length === 0) return [];
  const parent = interactive.map((_, i) => i);
  const find = (i: number): number => {
    while (parent[i] !== i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (let i = 0; i < interactive.length; i++) {
    for (let j = i + 1; j < interactive.length; j++) {
      const a = interactive[i];
      const b = interactive[j];
      const limit =
        ROW_TOLERANCE * Math.min(blockHeight(a.block), blockHeight(b.block));
      if (Math.abs(center(a.block)[1] - center(b.block)[1]) < limit) {
        parent[find(i)] = find(j);
      }
    }
  }
  const clusters = new Map<number, T[]>();
  interactive.forEach((element, i) => {
    const root = find(i);
    const row = clusters.get(root);
    if (row) row.push(element);
    else clusters.set(root, [element]);
  });
  const rows = [...clusters.values()];
  const meanCy = (row: T[]) =>
    row.reduce((acc, e) => acc + center(e.block)[1], 0) / row.length;
  rows.sort((a, b) => meanCy(a) - meanCy(b));
  for (const row of rows) {
    row.sort((a, b) => center(a.block)[0] - center(b.block)[0]);
  }
  return rows;
}

/** Numbers every interactive element exactly as the runtime grid would. */
export function previewGrid<T extends Like>(elements: T[]): GridEntry<T>[] {
  const rows = buildGridRows(elements);
  const entries: GridEntry<T>[] = [];
  rows.forEach((row, r) => {
    row.forEach((element, c) => {
      entries.push({
        element,
        row: r + 1,
        col: c + 1,
        rows: rows.length,
        cols: row.length,
      });
    });
  });
  return entries;
}
