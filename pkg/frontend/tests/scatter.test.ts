import { describe, expect, it } from "vitest";

import { computeFit, downsample, pointColor, selectWithLasso, toPixel } from "../src/scatter.js";
import type { ProjectionPoint } from "../src/types.js";

function pts(raw: [number, number][]): ProjectionPoint[] {
  return raw.map(([x, y], i) => ({ id: `p${i}`, x, y, label: null }));
}

describe("computeFit", () => {
  it("maps the data box into the padded canvas", () => {
    const points = pts([[0, 0], [10, 5]]);
    const fit = computeFit(points, 440, 240, 20);
    const a = toPixel(fit, 0, 0);
    const b = toPixel(fit, 10, 5);
    for (const q of [a, b]) {
      expect(q.x).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(q.x).toBeLessThanOrEqual(420 + 1e-9);
      expect(q.y).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(q.y).toBeLessThanOrEqual(220 + 1e-9);
    }
  });

  it("preserves aspect ratio", () => {
    const points = pts([[0, 0], [10, 5]]);
    const fit = computeFit(points, 440, 240, 20);
    const a = toPixel(fit, 0, 0);
    const b = toPixel(fit, 10, 5);
    expect((b.x - a.x) / (b.y - a.y)).toBeCloseTo(2, 9);
  });

  it("degenerate inputs stay finite", () => {
    const single = computeFit(pts([[3, 3]]), 100, 100);
    const q = toPixel(single, 3, 3);
    expect(Number.isFinite(q.x) && Number.isFinite(q.y)).toBe(true);
    const empty = computeFit([], 100, 100);
    expect(empty.scale).toBe(1);
  });
});

describe("selectWithLasso", () => {
  it("returns ids of points inside the pixel polygon", () => {
    const points = pts([[0, 0], [5, 5], [10, 10]]);
    const fit = computeFit(points, 100, 100, 10);
    const mid = toPixel(fit, 5, 5);
    const polygon = [
      { x: mid.x - 5, y: mid.y - 5 },
      { x: mid.x + 5, y: mid.y - 5 },
      { x: mid.x + 5, y: mid.y + 5 },
      { x: mid.x - 5, y: mid.y + 5 },
    ];
    expect(selectWithLasso(points, fit, polygon)).toEqual(["p1"]);
  });

  it("lasso around k points grows the selection by exactly those ids", () => {
    const grid: [number, number][] = [];
    for (let x = 0; x < 5; x++) for (let y = 0; y < 5; y++) grid.push([x, y]);
    const points = pts(grid);
    const fit = computeFit(points, 200, 200, 10);
    // Box in data space covering x,y in [0, 2] -> 3x3 = 9 points.
    const lo = toPixel(fit, -0.5, -0.5);
    const hi = toPixel(fit, 2.5, 2.5);
    const polygon = [
      { x: lo.x, y: lo.y },
      { x: hi.x, y: lo.y },
      { x: hi.x, y: hi.y },
      { x: lo.x, y: hi.y },
    ];
    const picked = selectWithLasso(points, fit, polygon);
    expect(picked).toHaveLength(9);
    const expected = points.filter((p) => p.x <= 2 && p.y <= 2).map((p) => p.id);
    expect(picked.sort()).toEqual(expected.sort());
  });
});

describe("downsample", () => {
  it("caps oversized point sets evenly", () => {
    const many = pts(Array.from({ length: 1000 }, (_, i) => [i, i] as [number, number]));
    const sampled = downsample(many, 100);
    expect(sampled).toHaveLength(100);
    expect(sampled[0]!.id).toBe("p0");
    const small = downsample(many, 2000);
    expect(small).toBe(many);
  });
});

describe("pointColor", () => {
  it("flag colors win over labels", () => {
    const flagged = pointColor("a", 1, { a: "suspicious" });
    const labeled = pointColor("a", 1, {});
    const plain = pointColor("a", null, {});
    expect(flagged).not.toBe(labeled);
    expect(labeled).not.toBe(plain);
  });
});
