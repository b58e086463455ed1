// Lasso geometry: ray-casting point-in-polygon over pixel coordinates.

export interface XY {
  x: number;
  y: number;
}

export type Polygon = XY[];

export function isPointInPolygon(point: XY, polygon: Polygon): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i]!;
    const b = polygon[j]!;
    const crosses = a.y > point.y !== b.y > point.y;
    if (crosses && point.x < ((b.x - a.x) * (point.y - a.y)) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

export function lassoSelect<T extends XY>(points: T[], polygon: Polygon): T[] {
  return points.filter((p) => isPointInPolygon(p, polygon));
}
