import { describe, expect, it } from "vitest";

import { pointAtAngle, Viewport } from "../src/animate.js";
import { Point } from "../src/types.js";

const square: Point[] = [
  [1, 0],
  [0, 1],
  [-1, 0],
  [0, -1],
];

describe("pointAtAngle", () => {
  it("returns the sample itself at sample angles", () => {
    expect(pointAtAngle(square, 0)).toEqual([1, 0]);
    expect(pointAtAngle(square, Math.PI / 2)).toEqual([0, 1]);
    expect(pointAtAngle(square, Math.PI)).toEqual([-1, 0]);
  });

  it("interpolates linearly between samples", () => {
    const mid = pointAtAngle(square, Math.PI / 4);
    expect(mid[0]).toBeCloseTo(0.5, 12);
    expect(mid[1]).toBeCloseTo(0.5, 12);
  });

  it("wraps beyond a full revolution and below zero", () => {
    expect(pointAtAngle(square, 2 * Math.PI)).toEqual(pointAtAngle(square, 0));
    const a = pointAtAngle(square, -Math.PI / 2);
    const b = pointAtAngle(square, (3 * Math.PI) / 2);
    expect(a[0]).toBeCloseTo(b[0], 12);
    expect(a[1]).toBeCloseTo(b[1], 12);
  });
});

describe("Viewport", () => {
  it("maps world points into the canvas with y flipped", () => {
    const vp = new Viewport(square, 200, 100, 10);
    for (const p of square) {
      const [x, y] = vp.toScreen(p);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(200);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(100);
    }
    const top = vp.toScreen([0, 1]);
    const bottom = vp.toScreen([0, -1]);
    expect(top[1]).toBeLessThan(bottom[1]);
  });

  it("always includes the frame pivots in the fitted box", () => {
    // path far from the origin must not push A=(0,0), D=(1,0) off-canvas
    const far: Point[] = [
      [3, 2],
      [3.5, 2.5],
    ];
    const vp = new Viewport(far, 300, 300, 10);
    for (const pivot of [
      [0, 0],
      [1, 0],
    ] as Point[]) {
      const [x, y] = vp.toScreen(pivot);
      expect(x).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(300);
    }
  });
});
