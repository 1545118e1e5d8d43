/**
 * Normalized screen rectangles, mirroring the runtime's conventions:
 * fractions of frame width/height, 0 <= x1 < x2 <= 1, 0 <= y1 < y2 <= 1.
 */

export type Block = [number, number, number, number];

export class RectTooSmall extends Error {}

export class BadBlock extends Error {}

export const MIN_DRAG_PX = 3;

export function assertBlock(block: Block): Block {
  const [x1, y1, x2, y2] = block;
  if (!(x1 >= 0 && x1 < x2 && x2 <= 1 && y1 >= 0 && y1 < y2 && y2 <= 1)) {
    throw new BadBlock(`invalid block [${block.join(", ")}]`);
  }
  return block;
}

/** Quantize to 4 decimals; round-trips pixel rects below 10000 px. */
export function normalizeRect(
  left: number,
  top: number,
  right: number,
  bottom: number,
  width: number,
  height: number,
): Block {
  if (right - left < MIN_DRAG_PX || bottom - top < MIN_DRAG_PX) {
    throw new RectTooSmall(
      `rect ${right - left}x${bottom - top} px is below the ${MIN_DRAG_PX}x${MIN_DRAG_PX} minimum`,
    );
  }
  const round4 = (v: number) => Math.round(v * 10000) / 10000;
  return assertBlock([
    round4(left / width),
    round4(top / height),
    round4(right / width),
    round4(bottom / height),
  ]);
}

/** round(fraction * dimension), half away from zero, clamped to >= 1 px. */
export function denormalize(
  block: Block,
  width: number,
  height: number,
): [number, number, number, number] {
  const r = (v: number) => Math.floor(v + 0.5);
  let left = Math.min(Math.max(r(block[0] * width), 0), width - 1);
  let top = Math.min(Math.max(r(block[1] * height), 0), height - 1);
  const right = Math.min(Math.max(r(block[2] * width), left + 1), width);
  const bottom = Math.min(Math.max(r(block[3] * height), top + 1), height);
  return [left, top, right, bottom];
}

export function center(block: Block): [number, number] {
  return [(block[0] + block[2]) / 2, (block[1] + block[3]) / 2];
}

export function blockHeight(block: Block): number {
  return block[3] - block[1];
}

export function iou(a: Block, b: Block): number {
  const ix = Math.max(0, Math.min(a[2], b[2]) - Math.max(a[0], b[0]));
  const iy = Math.max(0, Math.min(a[3], b[3]) - Math.max(a[1], b[1]));
  const inter = ix * iy;
  if (inter <= 0) return 0;
  const areaA = (a[2] - a[0]) * (a[3] - a[1]);
  const areaB = (b[2] - b[0]) * (b[3] - b[1]);
  return inter / (areaA + areaB - inter);
}
