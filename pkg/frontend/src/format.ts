/** Display formatting helpers. Times arrive as integer microseconds. */

export function usToClock(us: number): string {
  const totalSeconds = us / 1_000_000;
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds - minutes * 60;
  const whole = Math.floor(seconds);
  const tenth = Math.floor((seconds - whole) * 10);
  return `${minutes}:${String(whole).padStart(2, "0")}.${tenth}`;
}

export function usToDate(us: number): string {
  return new Date(us / 1000).toISOString().slice(0, 16).replace("T", " ");
}

export function percent(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

/** Trend label, e.g. slope 0.25 -> "0.25/session". Null slope (fewer than two
 * sessions) renders as "n/a". */
export function slopeLabel(slope: number | null | undefined): string {
  if (slope === null || slope === undefined) {
    return "n/a";
  }
  const rounded = Number(slope.toFixed(3));
  return `${rounded}/session`;
}

export function metricTitle(metric: string): string {
  return metric.replace(/_/g, " ");
}
