import { describe, expect, it } from "vitest";

import {
  centerValue,
  cloudCenter,
  parseWkpc,
  projectOrbit,
  scaleNearest,
} from "../src/render.js";
import type { DecodedFrame } from "../src/wire.js";

function demoFrame(): DecodedFrame {
  // 5x5 with the agent marker (85) at the center
  const pixels = new Uint8Array(25).fill(255);
  pixels[12] = 85;
  pixels[0] = 0;
  pixels[4] = 170;
  return { width: 5, height: 5, pixels };
}

describe("scaleNearest", () => {
  it("turns each source pixel into a uniform 50x50 block on a 250px canvas", () => {
    const raster = scaleNearest(demoFrame(), 250, 250);
    // sample all four corners of the top-left source pixel's block
    for (const [x, y] of [[0, 0], [49, 0], [0, 49], [49, 49]] as const) {
      expect(raster[(y * 250 + x) * 4]).toBe(0);
    }
    // block boundaries are exact: pixel 50 belongs to the next source pixel
    expect(raster[(0 * 250 + 50) * 4]).toBe(255);
    // goal pixel block, top-right
    expect(raster[(0 * 250 + 249) * 4]).toBe(170);
  });

  it("preserves the agent marker at the canvas center", () => {
    const raster = scaleNearest(demoFrame(), 250, 250);
    expect(centerValue(raster, 250, 250)).toBe(85);
  });

  it("is opaque grayscale", () => {
    const raster = scaleNearest(demoFrame(), 10, 10);
    for (let i = 0; i < raster.length; i += 4) {
      expect(raster[i]).toBe(raster[i + 1]);
      expect(raster[i]).toBe(raster[i + 2]);
      expect(raster[i + 3]).toBe(255);
    }
  });
});

describe("parseWkpc", () => {
  it("parses header and fixed-decimal rows", () => {
    const text = "WKPC 1 2\n0.500000 0.500000 0.500000\n2.500000 1.500000 0.500000\n";
    expect(parseWkpc(text)).toEqual([
      [0.5, 0.5, 0.5],
      [2.5, 1.5, 0.5],
    ]);
  });

  it("rejects foreign documents", () => {
    expect(() => parseWkpc("PLY 1 0")).toThrow();
  });
});

describe("projectOrbit", () => {
  const square: [number, number, number][] = [
    [0, 0, 0.5],
    [4, 0, 0.5],
    [4, 4, 0.5],
    [0, 4, 0.5],
  ];

  it("is the 2D layout at polar=0, azimuth=0", () => {
    const projected = projectOrbit(square, { polar: 0, azimuth: 0, yaw: 0 }, [2, 2, 0.5]);
    expect(projected).toEqual([
      { x: -2, y: -2 },
      { x: 2, y: -2 },
      { x: 2, y: 2 },
      { x: -2, y: 2 },
    ]);
  });

  it("rotates a quarter turn at azimuth +90", () => {
    const projected = projectOrbit(square, { polar: 0, azimuth: 90, yaw: 0 }, [2, 2, 0.5]);
    // (-2,-2) -> (2,-2): x' = -y, y' = x
    expect(projected[0].x).toBeCloseTo(2, 10);
    expect(projected[0].y).toBeCloseTo(-2, 10);
  });

  it("flattens the vertical axis as polar tilts toward 90", () => {
    const tall: [number, number, number][] = [[2, 2, 0], [2, 2, 1]];
    const top = projectOrbit(tall, { polar: 0, azimuth: 0, yaw: 0 }, [2, 2, 0.5]);
    expect(top[0].y).toBeCloseTo(top[1].y, 10); // z invisible from above
    const side = projectOrbit(tall, { polar: 90, azimuth: 0, yaw: 0 }, [2, 2, 0.5]);
    expect(side[0].y).toBeCloseTo(0.5, 10);
    expect(side[1].y).toBeCloseTo(-0.5, 10);
  });

  it("centers on the cloud centroid", () => {
    expect(cloudCenter(square)).toEqual([2, 2, 0.5]);
  });
});
