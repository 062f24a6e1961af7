// Lasso geometry: point-in-polygon by ray casting, in screen coordinates.

export type Point = [number, number];

export function pointInPolygon(point: Point, polygon: Point[]): boolean {
  if (polygon.length < 3) return false;
  const [x, y] = point;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const [xi, yi] = polygon[i];
    const [xj, yj] = polygon[j];
    const crosses = yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi;
    if (crosses) inside = !inside;
  }
  return inside;
}

export interface ScreenPoint {
  id: string;
  x: number;
  y: number;
}

export function idsInPolygon(points: ScreenPoint[], polygon: Point[]): string[] {
  return points.filter((p) => pointInPolygon([p.x, p.y], polygon)).map((p) => p.id);
}
