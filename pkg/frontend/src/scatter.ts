// Canvas scatterplot of a 2-D projection with lasso selection. The
// data-to-pixel fit is kept as plain math so it can be tested headless.

import { isPointInPolygon, type Polygon } from "./lasso.js";
import type { FlagValue, ProjectionPoint } from "./types.js";

export const MAX_RENDER_POINTS = 20_000;

export interface Fit {
  scale: number;
  tx: number;
  ty: number;
}

/** Aspect-preserving transform mapping data coordinates into the canvas. */
export function computeFit(
  points: { x: number; y: number }[],
  width: number,
  height: number,
  padding = 20,
): Fit {
  if (points.length === 0) return { scale: 1, tx: width / 2, ty: height / 2 };
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x);
    maxX = Math.max(maxX, p.x);
    minY = Math.min(minY, p.y);
    maxY = Math.max(maxY, p.y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const scale = Math.min((width - 2 * padding) / spanX, (height - 2 * padding) / spanY);
  // Center the data box inside the canvas.
  const tx = (width - scale * (minX + maxX)) / 2;
  const ty = (height - scale * (minY + maxY)) / 2;
  return { scale, tx, ty };
}

export function toPixel(fit: Fit, x: number, y: number): { x: number; y: number } {
  return { x: fit.scale * x + fit.tx, y: fit.scale * y + fit.ty };
}

/** Ids of projected points whose pixel positions fall inside the lasso. */
export function selectWithLasso(
  points: ProjectionPoint[],
  fit: Fit,
  polygon: Polygon,
): string[] {
  const out: string[] = [];
  for (const p of points) {
    if (isPointInPolygon(toPixel(fit, p.x, p.y), polygon)) out.push(p.id);
  }
  return out;
}

/** Evenly spaced downsample for oversized projections. */
export function downsample(points: ProjectionPoint[], cap = MAX_RENDER_POINTS): ProjectionPoint[] {
  if (points.length <= cap) return points;
  const step = points.length / cap;
  const out: ProjectionPoint[] = [];
  for (let i = 0; i < cap; i++) {
    out.push(points[Math.floor(i * step)]!);
  }
  return out;
}

const FLAG_COLORS: Record<FlagValue, string> = {
  suspicious: "#d64545",
  benign: "#3f8f4a",
  unknown: "#9a7b2d",
};

export function pointColor(
  id: string,
  label: number | null,
  flags: Record<string, FlagValue>,
): string {
  const flag = flags[id];
  if (flag) return FLAG_COLORS[flag];
  if (label === 1) return "#b089d6";
  return "#6b7a8f";
}

export interface ScatterHandles {
  draw(points: ProjectionPoint[], flags: Record<string, FlagValue>, seeds: Set<string>): void;
  onLasso(handler: (ids: string[]) => void): void;
  notice(text: string): void;
}

export function attachScatter(canvas: HTMLCanvasElement, noticeEl: HTMLElement): ScatterHandles {
  const ctx = canvas.getContext("2d")!;
  let current: ProjectionPoint[] = [];
  let currentFlags: Record<string, FlagValue> = {};
  let currentSeeds = new Set<string>();
  let fit: Fit = { scale: 1, tx: 0, ty: 0 };
  let lassoPath: Polygon = [];
  let lassoActive = false;
  let lassoHandler: (ids: string[]) => void = () => {};

  function render(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (current.length === 0) {
      ctx.fillStyle = "#8a8a8a";
      ctx.font = "13px sans-serif";
      ctx.fillText("no points to display", 14, 24);
      return;
    }
    for (const p of current) {
      const px = toPixel(fit, p.x, p.y);
      ctx.beginPath();
      ctx.arc(px.x, px.y, currentSeeds.has(p.id) ? 5 : 3, 0, Math.PI * 2);
      ctx.fillStyle = pointColor(p.id, p.label, currentFlags);
      ctx.fill();
      if (currentSeeds.has(p.id)) {
        ctx.strokeStyle = "#111";
        ctx.stroke();
      }
    }
    if (lassoPath.length > 1) {
      ctx.beginPath();
      ctx.moveTo(lassoPath[0]!.x, lassoPath[0]!.y);
      for (const q of lassoPath.slice(1)) ctx.lineTo(q.x, q.y);
      ctx.strokeStyle = "#d64545";
      ctx.setLineDash([4, 3]);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  function canvasXY(event: MouseEvent): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    return { x: event.clientX - rect.left, y: event.clientY - rect.top };
  }

  canvas.addEventListener("mousedown", (event) => {
    lassoActive = true;
    lassoPath = [canvasXY(event)];
  });
  canvas.addEventListener("mousemove", (event) => {
    if (!lassoActive) return;
    lassoPath.push(canvasXY(event));
    render();
  });
  canvas.addEventListener("mouseup", () => {
    if (!lassoActive) return;
    lassoActive = false;
    if (lassoPath.length >= 3) {
      const ids = selectWithLasso(current, fit, lassoPath);
      if (ids.length > 0) lassoHandler(ids);
    }
    lassoPath = [];
    render();
  });

  return {
    draw(points, flags, seeds) {
      const shown = downsample(points);
      noticeEl.textContent =
        shown.length < points.length
          ? `showing ${shown.length} of ${points.length} points (downsampled)`
          : "";
      current = shown;
      currentFlags = flags;
      currentSeeds = seeds;
      fit = computeFit(shown, canvas.width, canvas.height);
      render();
    },
    onLasso(handler) {
      lassoHandler = handler;
    },
    notice(text) {
      noticeEl.textContent = text;
    },
  };
}
