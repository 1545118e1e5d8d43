import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import type { Block } from "../src/blocks.js";
import { buildGridRows, previewGrid } from "../src/grid.js";

interface FixtureCase {
  name: string;
  elements: { block: Block; content: string; interactivity: boolean }[];
  expected_rows: string[][];
}

const here = dirname(fileURLToPath(import.meta.url));
const cases: FixtureCase[] = JSON.parse(
  readFileSync(join(here, "..", "..", "fixtures", "grid", "cases.json"), "utf-8"),
);

describe("grid clustering agrees with the shared fixtures", () => {
  for (const fixture of cases) {
    it(fixture.name, () => {
      const rows = buildGridRows(fixture.elements).map((row) =>
        row.map((e) => e.content),
      );
      expect(rows).toEqual(fixture.expected_rows);
    });
  }
});

describe("previewGrid", () => {
  it("numbers a single band left to right", () => {
    const elements = [0.1, 0.3, 0.5, 0.7].map((x, i) => ({
      block: [x, 0.8, x + 0.08, 0.95] as Block,
      content: `c${i + 1}`,
      interactivity: true,
    }));
    const entries = previewGrid(elements);
    expect(entries.map((e) => [e.element.content, e.row, e.col])).toEqual([
      ["c1", 1, 1],
      ["c2", 1, 2],
      ["c3", 1, 3],
      ["c4", 1, 4],
    ]);
    expect(entries[0].rows).toBe(1);
    expect(entries[0].cols).toBe(4);
  });

  it("returns an empty overlay without interactive drafts", () => {
    expect(
      previewGrid([
        { block: [0.1, 0.1, 0.9, 0.2] as Block, content: "", interactivity: false },
      ]),
    ).toEqual([]);
  });

  it("numbers the hand-verified two-band case across rows", () => {
    const fixture = cases.find((c) => c.name === "two_bands_4_and_3")!;
    const entries = previewGrid(fixture.elements);
    const byContent = Object.fromEntries(
      entries.map((e) => [e.element.content, [e.row, e.col]]),
    );
    expect(byContent["B1"]).toEqual([1, 1]);
    expect(byContent["B4"]).toEqual([1, 4]);
    expect(byContent["C1"]).toEqual([2, 1]);
    expect(byContent["C3"]).toEqual([2, 3]);
  });
});
