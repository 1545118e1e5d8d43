import { describe, expect, it } from "vitest";

import { denormalize, normalizeRect, RectTooSmall } from "../src/blocks.js";

describe("normalizeRect", () => {
  it("normalizes the annotated settings rect within 0.001 per edge", () => {
    const block = normalizeRect(820, 106, 1158, 230, 1920, 1080);
    const exact = [820 / 1920, 106 / 1080, 1158 / 1920, 230 / 1080];
    block.forEach((edge, i) => {
      expect(Math.abs(edge - exact[i])).toBeLessThan(0.001);
    });
    expect(block).toEqual([0.4271, 0.0981, 0.6031, 0.213]);
  });

  it("rejects drags below 3x3 px", () => {
    expect(() => normalizeRect(10, 10, 12, 12, 100, 100)).toThrow(RectTooSmall);
  });

  it("maps a full-canvas drag to the unit block", () => {
    expect(normalizeRect(0, 0, 1920, 1080, 1920, 1080)).toEqual([0, 0, 1, 1]);
  });
});

describe("denormalize", () => {
  it("round-trips integer rects for sane frame sizes", () => {
    const cases: [number, number, number, number, number, number][] = [
      [820, 106, 1158, 230, 1920, 1080],
      [0, 0, 640, 480, 640, 480],
      [3, 7, 9, 13, 101, 233],
    ];
    for (const [l, t, r, b, w, h] of cases) {
      const block = normalizeRect(l, t, r, b, w, h);
      expect(denormalize(block, w, h)).toEqual([l, t, r, b]);
    }
  });

  it("clamps to at least one pixel", () => {
    expect(denormalize([0.5, 0.5, 0.5004, 0.5004], 100, 100)).toEqual(
      [50, 50, 51, 51],
    );
  });

  it("rounds half away from zero like the runtime", () => {
    // 0.2125 * 1080 = 229.5 must become 230, not 229
    expect(denormalize([0.4273, 0.0985, 0.603, 0.2125], 1920, 1080)).toEqual(
      [820, 106, 1158, 230],
    );
  });
});
