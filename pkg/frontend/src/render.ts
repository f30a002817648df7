// Raster and point-cloud projection math, kept DOM-free so tests can
// read back exactly what a canvas would show.

import type { DecodedFrame } from "./wire.js";
import type { OrbitCamera } from "./state.js";

/**
 * Nearest-neighbor scale to an RGBA raster. Pixel-exact: no smoothing,
 * so integer upscales turn each source pixel into a uniform block.
 */
export function scaleNearest(frame: DecodedFrame, width: number, height: number): Uint8ClampedArray {
  const out = new Uint8ClampedArray(width * height * 4);
  for (let y = 0; y < height; y++) {
    const sy = Math.floor((y * frame.height) / height);
    for (let x = 0; x < width; x++) {
      const sx = Math.floor((x * frame.width) / width);
      const value = frame.pixels[sy * frame.width + sx];
      const offset = (y * width + x) * 4;
      out[offset] = value;
      out[offset + 1] = value;
      out[offset + 2] = value;
      out[offset + 3] = 255;
    }
  }
  return out;
}

/** Gray value at the raster center (information-preserving readback). */
export function centerValue(raster: Uint8ClampedArray, width: number, height: number): number {
  const x = Math.floor(width / 2);
  const y = Math.floor(height / 2);
  return raster[(y * width + x) * 4];
}

export function drawFrame(canvas: HTMLCanvasElement, frame: DecodedFrame): void {
  const context = canvas.getContext("2d");
  if (!context) return;
  const raster = scaleNearest(frame, canvas.width, canvas.height);
  const image = context.createImageData(canvas.width, canvas.height);
  image.data.set(raster);
  context.putImageData(image, 0, 0);
}

export type Point3 = [number, number, number];

export function parseWkpc(text: string): Point3[] {
  const lines = text.trim().split("\n");
  const header = lines[0].split(" ");
  if (header[0] !== "WKPC") throw new Error(`not a WKPC document: ${lines[0]}`);
  const count = Number(header[2]);
  const points: Point3[] = [];
  for (let i = 1; i <= count; i++) {
    const [x, y, z] = lines[i].split(" ").map(Number);
    points.push([x, y, z]);
  }
  return points;
}

export interface Projected {
  x: number;
  y: number;
}

/**
 * Orthographic orbit projection. World axes: x right, y down, z up.
 * Azimuth spins about the vertical axis, polar tilts from top-down;
 * at polar=0 / azimuth=0 the projection is the 2D map layout.
 */
export function projectOrbit(
  points: Point3[],
  camera: OrbitCamera,
  center: Point3,
): Projected[] {
  const az = (camera.azimuth * Math.PI) / 180;
  const pol = (camera.polar * Math.PI) / 180;
  const cosA = Math.cos(az);
  const sinA = Math.sin(az);
  const cosP = Math.cos(pol);
  const sinP = Math.sin(pol);
  return points.map(([x, y, z]) => {
    const dx = x - center[0];
    const dy = y - center[1];
    const dz = z - center[2];
    const rx = dx * cosA - dy * sinA;
    const ry = dx * sinA + dy * cosA;
    return { x: rx, y: ry * cosP - dz * sinP };
  });
}

export function cloudCenter(points: Point3[]): Point3 {
  if (points.length === 0) return [0, 0, 0];
  let sx = 0;
  let sy = 0;
  let sz = 0;
  for (const [x, y, z] of points) {
    sx += x;
    sy += y;
    sz += z;
  }
  const n = points.length;
  return [sx / n, sy / n, sz / n];
}

export function drawPointCloud(
  canvas: HTMLCanvasElement,
  points: Point3[],
  camera: OrbitCamera,
  agent: Point3 | null,
): void {
  const context = canvas.getContext("2d");
  if (!context) return;
  context.fillStyle = "#111";
  context.fillRect(0, 0, canvas.width, canvas.height);
  if (points.length === 0) {
    context.fillStyle = "#888";
    context.font = "14px sans-serif";
    context.textAlign = "center";
    context.fillText("explore to reveal the map", canvas.width / 2, canvas.height / 2);
    return;
  }
  const center = cloudCenter(points);
  const projected = projectOrbit(points, camera, center);
  const spread = Math.max(...projected.map((p) => Math.max(Math.abs(p.x), Math.abs(p.y))), 1);
  const scale = (Math.min(canvas.width, canvas.height) / 2 - 12) / spread;
  const toCanvas = (p: Projected) => ({
    x: canvas.width / 2 + p.x * scale,
    y: canvas.height / 2 + p.y * scale,
  });
  context.fillStyle = "#7ec8ff";
  for (const p of projected) {
    const { x, y } = toCanvas(p);
    context.fillRect(x - 2, y - 2, 4, 4);
  }
  if (agent) {
    const [proj] = projectOrbit([agent], camera, center);
    const { x, y } = toCanvas(proj);
    context.fillStyle = "#ffcf5e";
    context.beginPath();
    context.arc(x, y, 5, 0, 2 * Math.PI);
    context.fill();
  }
}
