/** Progress chart geometry. Points come straight from the server's progress
 * document; the trend line is drawn from the server-computed slope through the
 * centroid of the plotted points (the app never computes metrics itself). */

import { slopeLabel } from "./format.js";
import type { MetricName, ProgressView } from "./types.js";

export interface ChartPoint {
  x: number; // normalized [0, 1] by session index
  y: number; // normalized [0, 1] by the value range
  value: number;
  sessionId: string;
}

export interface TrendLine {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface ChartGeometry {
  metric: MetricName;
  points: ChartPoint[];
  trend: TrendLine | null;
  slopeText: string;
  valueMin: number;
  valueMax: number;
}

export function layoutProgress(view: ProgressView, metric: MetricName): ChartGeometry {
  const n = view.points.length;
  const plotted: { index: number; value: number; sessionId: string }[] = [];
  view.points.forEach((p, index) => {
    const value = p[metric];
    if (value !== null && value !== undefined) {
      plotted.push({ index, value, sessionId: p.session_id });
    }
  });

  const slope = view.slopes[metric] ?? null;
  const slopeText = slopeLabel(slope);
  if (plotted.length === 0) {
    return { metric, points: [], trend: null, slopeText, valueMin: 0, valueMax: 1 };
  }

  const values = plotted.map((p) => p.value);
  let valueMin = Math.min(...values, 0);
  let valueMax = Math.max(...values);
  if (valueMax <= 1 && valueMin >= 0) {
    valueMin = 0;
    valueMax = 1; // fractions plot on a fixed [0, 1] axis
  }
  if (valueMax === valueMin) {
    valueMax = valueMin + 1;
  }

  const xOf = (index: number) => (n <= 1 ? 0.5 : index / (n - 1));
  const yOf = (value: number) => (value - valueMin) / (valueMax - valueMin);
  const points = plotted.map((p) => ({
    x: xOf(p.index),
    y: yOf(p.value),
    value: p.value,
    sessionId: p.sessionId,
  }));

  // trend line through the centroid with the server's slope (per session index)
  let trend: TrendLine | null = null;
  if (slope !== null && plotted.length >= 2) {
    const meanIndex = plotted.reduce((acc, p) => acc + p.index, 0) / plotted.length;
    const meanValue = values.reduce((a, b) => a + b, 0) / values.length;
    const first = plotted[0];
    const last = plotted[plotted.length - 1];
    if (first && last) {
      const valueAt = (index: number) => meanValue + slope * (index - meanIndex);
      trend = {
        x0: xOf(first.index),
        y0: yOf(valueAt(first.index)),
        x1: xOf(last.index),
        y1: yOf(valueAt(last.index)),
      };
    }
  }

  return { metric, points, trend, slopeText, valueMin, valueMax };
}
