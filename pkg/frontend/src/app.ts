/** App bootstrap: hash routing between the session browser, timeline review,
 * and progress views. `?fixtures=1` (or a missing backend) swaps in the
 * recorded-fixture client so every view renders without the service. */

import { FixtureReviewApi, HttpReviewApi, type ReviewApi } from "./api.js";
import { submitAnnotation } from "./annotate.js";
import { layoutProgress } from "./charts.js";
import { usToClock } from "./format.js";
import * as render from "./render.js";
import { ClipReplay } from "./replay.js";
import { UiState } from "./state.js";
import { hitClip, layoutTimeline, type TimelineGeometry } from "./timeline.js";
import type { ClipFrames, MetricName, ProgressView, SessionList, TimelineView } from "./types.js";

const state = new UiState();
let api: ReviewApi;
let root: HTMLElement;
let replay: ClipReplay | null = null;
let geometry: TimelineGeometry | null = null;
let rafHandle = 0;

async function loadFixtureApi(): Promise<ReviewApi> {
  const get = async <T>(name: string): Promise<T> =>
    (await (await fetch(`fixtures/${name}.json`)).json()) as T;
  const sessions = await get<SessionList>("sessions");
  const timelines: Record<string, TimelineView> = {};
  for (const entry of sessions.sessions) {
    try {
      timelines[entry.session_id] = await get<TimelineView>(`timeline_${entry.session_id}`);
    } catch {
      // only some sessions have recorded timelines; that is fine for the demo
    }
  }
  const docs = {
    sessions,
    timelines,
    metrics: { "sess-main": await get<never>("metrics_sess-main") },
    clips: { "sess-main/0": await get<ClipFrames>("clip0_sess-main") },
    progress: { "kid-a": await get<ProgressView>("progress_kid-a") },
  };
  return new FixtureReviewApi(docs);
}

function navigate(hash: string): void {
  window.location.hash = hash;
}

async function route(): Promise<void> {
  cancelAnimationFrame(rafHandle);
  const hash = window.location.hash || "#/sessions";
  const [, view, arg] = hash.split("/");
  try {
    if (view === "session" && arg) {
      await showTimeline(decodeURIComponent(arg));
    } else if (view === "subject" && arg) {
      await showProgress(decodeURIComponent(arg));
    } else {
      await showBrowser();
    }
  } catch (err) {
    render.clear(root);
    root.appendChild(render.el("div", "warning", String(err)));
  }
}

async function showBrowser(): Promise<void> {
  const list = await api.listSessions();
  render.clear(root);
  root.appendChild(render.el("h2", "", "Sessions"));
  const container = render.el("div");
  root.appendChild(container);
  render.renderSessionList(
    container,
    list,
    (id) => navigate(`#/session/${encodeURIComponent(id)}`),
    (subject) => navigate(`#/subject/${encodeURIComponent(subject)}`),
  );
}

async function showTimeline(sessionId: string): Promise<void> {
  const view = await api.timeline(sessionId);
  state.openTimeline(view);
  replay = null;
  geometry = layoutTimeline(view);

  render.clear(root);
  const back = render.el("a", "back-link", "< sessions");
  back.href = "#/sessions";
  root.appendChild(back);
  root.appendChild(render.el("h2", "", `Session ${sessionId}`));

  const playheadLabel = render.el("div", "playhead-label", usToClock(0));
  root.appendChild(playheadLabel);

  const timelineBox = render.el("div", "timeline-box");
  const tracks = document.createElement("canvas");
  tracks.className = "tracks-canvas";
  tracks.width = 960;
  tracks.height = 120;
  const lanes = render.el("div", "lanes");
  const playhead = render.el("div", "playhead");
  timelineBox.appendChild(tracks);
  timelineBox.appendChild(lanes);
  timelineBox.appendChild(playhead);
  root.appendChild(timelineBox);

  const sketch = document.createElement("canvas");
  sketch.className = "sketch-canvas";
  sketch.width = 360;
  sketch.height = 300;
  const metricsBox = render.el("div", "metrics-box");
  const row = render.el("div", "row");
  row.appendChild(sketch);
  row.appendChild(metricsBox);
  root.appendChild(row);

  const noteForm = render.el("div", "note-form");
  const author = document.createElement("input");
  author.placeholder = "author";
  author.value = state.draft.author;
  const text = document.createElement("input");
  text.placeholder = "annotate at the playhead...";
  text.className = "note-text";
  const post = render.el("button", "", "annotate");
  const errorBox = render.el("span", "note-error", "");
  noteForm.append(author, text, post, errorBox);
  root.appendChild(noteForm);
  const noteList = render.el("ul", "note-list");
  root.appendChild(noteList);

  const refreshNotes = () => {
    render.clear(noteList);
    for (const a of view.annotations) {
      noteList.appendChild(
        render.el("li", "", `${usToClock(a.timestamp_in_session_us)} ${a.author}: ${a.text}`),
      );
    }
    if (geometry) {
      geometry = layoutTimeline(view);
      render.renderTimelineLanes(lanes, geometry, handlers);
      render.renderPlayhead(playhead, geometry, state.playheadUs);
    }
  };

  const setPlayhead = (us: number) => {
    state.setPlayhead(us);
    playheadLabel.textContent = usToClock(state.playheadUs);
    if (geometry) {
      render.renderPlayhead(playhead, geometry, state.playheadUs);
    }
    render.renderSketch(sketch, replay, state.playheadUs);
  };

  const handlers = {
    onClipClick: async (clipIndex: number) => {
      state.selectClip(clipIndex);
      try {
        replay = new ClipReplay(await api.clipFrames(sessionId, clipIndex));
      } catch {
        replay = null;
      }
      setPlayhead(state.playheadUs);
      lastTick = performance.now();
      rafHandle = requestAnimationFrame(tick);
    },
    onScrub: (fraction: number) => {
      state.stopReplay();
      setPlayhead(fraction * view.session_end_us);
    },
  };

  let lastTick = performance.now();
  const tick = (now: number) => {
    if (state.replayActive) {
      const dtUs = (now - lastTick) * 1000;
      lastTick = now;
      setPlayhead(state.tickReplay(dtUs));
      rafHandle = requestAnimationFrame(tick);
    }
  };

  post.addEventListener("click", async () => {
    state.setDraftAuthor(author.value);
    state.setDraftText(text.value);
    state.stampDraftAtPlayhead();
    const result = await submitAnnotation(api, view, {
      author: state.draft.author,
      text: state.draft.text,
      timestampUs: state.draft.timestampUs,
    });
    if (result.ok) {
      errorBox.textContent = "";
      text.value = "";
      refreshNotes(); // appears on the timeline without a reload
    } else {
      errorBox.textContent = result.error; // server detail verbatim
    }
  });

  render.renderTracks(tracks, geometry);
  render.renderTimelineLanes(lanes, geometry, handlers);
  refreshNotes();
  setPlayhead(0);

  try {
    render.renderMetrics(metricsBox, await api.metrics(sessionId));
  } catch {
    metricsBox.appendChild(render.el("p", "empty-state", "metrics unavailable"));
  }
}

async function showProgress(subject: string): Promise<void> {
  const view = await api.progress(subject);
  state.openProgress(view);

  render.clear(root);
  const back = render.el("a", "back-link", "< sessions");
  back.href = "#/sessions";
  root.appendChild(back);
  root.appendChild(render.el("h2", "", `Progress: ${subject}`));

  const toggle = render.el("div", "metric-toggle");
  const slopeNode = render.el("div", "slope-label");
  const chart = document.createElement("canvas");
  chart.width = 720;
  chart.height = 320;
  root.append(toggle, slopeNode, chart);

  const draw = () => {
    // toggling re-renders from the cached document; no refetch
    render.renderMetricToggle(toggle, state.progressMetric, (metric: MetricName) => {
      state.selectMetric(metric);
      draw();
    });
    render.renderProgressChart(chart, slopeNode, layoutProgress(view, state.progressMetric));
  };
  draw();
}

async function start(): Promise<void> {
  root = document.getElementById("app") as HTMLElement;
  const wantFixtures = new URLSearchParams(window.location.search).has("fixtures");
  if (wantFixtures) {
    api = await loadFixtureApi();
  } else {
    api = new HttpReviewApi();
    try {
      await api.listSessions();
    } catch {
      api = await loadFixtureApi(); // no backend: fall back to recorded fixtures
    }
  }
  window.addEventListener("hashchange", () => void route());
  await route();
}

window.addEventListener("load", () => void start());
