/** DOM and canvas painting. All geometry comes from the pure layout modules;
 * this file only positions elements and draws pixels. Markers are absolutely
 * positioned divs (free native hover tooltips and click targets); score tracks
 * and the landmark sketch draw on canvases. */

import type { ChartGeometry } from "./charts.js";
import { usToClock, usToDate, metricTitle, percent } from "./format.js";
import { SKETCH_PATHS, fitPoints, type ClipReplay } from "./replay.js";
import { playheadX, type TimelineGeometry } from "./timeline.js";
import type { MetricName, MetricsView, SessionList } from "./types.js";
import { METRIC_NAMES } from "./types.js";

export const LABEL_COLORS: Record<string, string> = {
  neutral: "#9aa0a6",
  happiness: "#34a853",
  sadness: "#4285f4",
  anger: "#ea4335",
  fear: "#9c27b0",
  surprise: "#fbbc05",
  disgust: "#00897b",
  contempt: "#e65100",
};

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) {
    node.removeChild(node.firstChild);
  }
}

// --- session browser ----------------------------------------------------------

export function renderSessionList(
  container: HTMLElement,
  list: SessionList,
  onOpen: (sessionId: string) => void,
  onSubject: (subject: string) => void,
): void {
  clear(container);
  for (const warning of list.warnings) {
    container.appendChild(
      el("div", "warning", `skipped ${warning.file}: ${warning.error}`),
    );
  }
  if (list.sessions.length === 0) {
    container.appendChild(el("p", "empty-state", "No sessions recorded yet."));
    return;
  }
  const table = el("table", "session-table");
  const head = el("tr");
  for (const title of ["session", "subject", "date", "length", "events", "cues", ""]) {
    head.appendChild(el("th", "", title));
  }
  table.appendChild(head);
  for (const s of list.sessions) {
    const row = el("tr", "session-row");
    row.appendChild(el("td", "mono", s.session_id));
    const subjectCell = el("td");
    const subjectLink = el("a", "subject-link", s.subject);
    subjectLink.href = `#/subject/${encodeURIComponent(s.subject)}`;
    subjectLink.addEventListener("click", (ev) => {
      ev.preventDefault();
      onSubject(s.subject);
    });
    subjectCell.appendChild(subjectLink);
    row.appendChild(subjectCell);
    row.appendChild(el("td", "", usToDate(s.started_at_us)));
    row.appendChild(el("td", "", usToClock(s.duration_us)));
    row.appendChild(el("td", "num", String(s.event_count)));
    row.appendChild(el("td", "num", String(s.issued_cue_count)));
    const openCell = el("td");
    const open = el("button", "", "review");
    open.addEventListener("click", () => onOpen(s.session_id));
    openCell.appendChild(open);
    row.appendChild(openCell);
    table.appendChild(row);
  }
  container.appendChild(table);
}

// --- timeline -------------------------------------------------------------------

function place(node: HTMLElement, x0: number, x1: number | null): void {
  node.style.left = `${(x0 * 100).toFixed(3)}%`;
  if (x1 !== null) {
    node.style.width = `${(Math.max(0.002, x1 - x0) * 100).toFixed(3)}%`;
  }
}

export function renderTracks(canvas: HTMLCanvasElement, geometry: TimelineGeometry): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.lineWidth = 1.25;
  for (const track of geometry.tracks) {
    if (track.label === "neutral") {
      continue; // neutral dominates everywhere and hides the interesting tracks
    }
    ctx.strokeStyle = LABEL_COLORS[track.label] ?? "#666";
    ctx.beginPath();
    track.points.forEach((p, i) => {
      const x = p.x * width;
      const y = (1 - p.y) * height;
      if (i === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    });
    ctx.stroke();
  }
}

export interface TimelineHandlers {
  onClipClick: (clipIndex: number) => void;
  onScrub: (fraction: number) => void;
}

export function renderTimelineLanes(
  lanes: HTMLElement,
  geometry: TimelineGeometry,
  handlers: TimelineHandlers,
): void {
  clear(lanes);

  const visibilityLane = el("div", "lane lane-visibility");
  visibilityLane.title = "face in view";
  for (const run of geometry.visibility) {
    const span = el("div", "visibility-run");
    place(span, run.x0, run.x1);
    visibilityLane.appendChild(span);
  }
  lanes.appendChild(visibilityLane);

  const eventLane = el("div", "lane lane-events");
  for (const marker of geometry.events) {
    const span = el("div", "event-marker");
    span.style.background = LABEL_COLORS[marker.label] ?? "#666";
    span.title = marker.tooltip;
    place(span, marker.x0, marker.x1);
    eventLane.appendChild(span);
  }
  lanes.appendChild(eventLane);

  const cueLane = el("div", "lane lane-cues");
  for (const cue of geometry.cues) {
    const pin = el("div", cue.suppressed ? "cue-marker suppressed" : "cue-marker");
    pin.title = cue.tooltip; // suppressed cues show their reason on hover
    if (!cue.suppressed) {
      pin.style.background = LABEL_COLORS[cue.label] ?? "#666";
    }
    place(pin, cue.x, null);
    cueLane.appendChild(pin);
  }
  lanes.appendChild(cueLane);

  const clipLane = el("div", "lane lane-clips");
  for (const clip of geometry.clips) {
    const seg = el("div", "clip-segment");
    seg.title = clip.tooltip;
    seg.dataset.clipIndex = String(clip.index);
    place(seg, clip.x0, clip.x1);
    seg.addEventListener("click", (ev) => {
      ev.stopPropagation();
      handlers.onClipClick(clip.index);
    });
    clipLane.appendChild(seg);
  }
  lanes.appendChild(clipLane);

  const noteLane = el("div", "lane lane-annotations");
  for (const pin of geometry.annotations) {
    const node = el("div", "annotation-pin");
    node.title = `${pin.author}: ${pin.text}`;
    place(node, pin.x, null);
    noteLane.appendChild(node);
  }
  lanes.appendChild(noteLane);

  lanes.addEventListener("click", (ev) => {
    const rect = lanes.getBoundingClientRect();
    handlers.onScrub((ev.clientX - rect.left) / rect.width);
  });
}

export function renderPlayhead(overlay: HTMLElement, geometry: TimelineGeometry, playheadUs: number): void {
  overlay.style.left = `${(playheadX(geometry, playheadUs) * 100).toFixed(3)}%`;
}

// --- landmark replay ---------------------------------------------------------------

export function renderSketch(canvas: HTMLCanvasElement, replay: ClipReplay | null, playheadUs: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const frame = replay?.frameAt(playheadUs) ?? null;
  if (!frame || !frame.points) {
    ctx.fillStyle = "#9aa0a6";
    ctx.font = "13px sans-serif";
    ctx.fillText(frame ? "face not in view" : "select a highlight clip", 12, 24);
    return;
  }
  const fitted = fitPoints(frame.points, { x: 0, y: 0, width: canvas.width, height: canvas.height });
  ctx.strokeStyle = "#202124";
  ctx.lineWidth = 1.5;
  for (const path of SKETCH_PATHS) {
    ctx.beginPath();
    path.indices.forEach((idx, i) => {
      const p = fitted[idx];
      if (!p) {
        return;
      }
      if (i === 0) {
        ctx.moveTo(p[0], p[1]);
      } else {
        ctx.lineTo(p[0], p[1]);
      }
    });
    if (path.closed) {
      ctx.closePath();
    }
    ctx.stroke();
  }
  ctx.fillStyle = "#1a73e8";
  for (const p of fitted) {
    ctx.fillRect(p[0] - 1, p[1] - 1, 2, 2);
  }
}

// --- metrics + progress ----------------------------------------------------------

export function renderMetrics(container: HTMLElement, metrics: MetricsView): void {
  clear(container);
  const dl = el("dl", "metrics");
  const add = (term: string, value: string) => {
    dl.appendChild(el("dt", "", term));
    dl.appendChild(el("dd", "", value));
  };
  add("face in view", percent(metrics.face_in_view_fraction));
  for (const [speaker, fraction] of Object.entries(metrics.gaze_while_speaking)) {
    add(`gaze while ${speaker} speaks`, percent(fraction));
  }
  add("facing fraction", percent(metrics.pose.facing_fraction));
  add("mean |yaw|", `${metrics.pose.mean_abs_yaw_deg.toFixed(1)} deg`);
  if (metrics.game_accuracy !== null) {
    add("game accuracy", percent(metrics.game_accuracy));
  }
  const issued = Object.values(metrics.cue_counts_issued).reduce((a, b) => a + b, 0);
  const suppressed = Object.values(metrics.cue_counts_suppressed).reduce((a, b) => a + b, 0);
  add("cues issued / suppressed", `${issued} / ${suppressed}`);
  container.appendChild(dl);
}

export function renderProgressChart(
  canvas: HTMLCanvasElement,
  slopeNode: HTMLElement,
  geometry: ChartGeometry,
): void {
  slopeNode.textContent = `trend: ${geometry.slopeText}`;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  const pad = 24;
  const px = (x: number) => pad + x * (width - 2 * pad);
  const py = (y: number) => height - pad - y * (height - 2 * pad);
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#dadce0";
  ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);
  if (geometry.trend) {
    ctx.strokeStyle = "#ea4335";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(px(geometry.trend.x0), py(geometry.trend.y0));
    ctx.lineTo(px(geometry.trend.x1), py(geometry.trend.y1));
    ctx.stroke();
  }
  ctx.fillStyle = "#1a73e8";
  ctx.strokeStyle = "#1a73e8";
  ctx.lineWidth = 1.25;
  ctx.beginPath();
  geometry.points.forEach((p, i) => {
    if (i === 0) {
      ctx.moveTo(px(p.x), py(p.y));
    } else {
      ctx.lineTo(px(p.x), py(p.y));
    }
  });
  ctx.stroke();
  for (const p of geometry.points) {
    ctx.beginPath();
    ctx.arc(px(p.x), py(p.y), 3.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function renderMetricToggle(
  container: HTMLElement,
  active: MetricName,
  onToggle: (metric: MetricName) => void,
): void {
  clear(container);
  for (const metric of METRIC_NAMES) {
    const button = el("button", metric === active ? "toggle active" : "toggle", metricTitle(metric));
    button.addEventListener("click", () => onToggle(metric));
    container.appendChild(button);
  }
}
