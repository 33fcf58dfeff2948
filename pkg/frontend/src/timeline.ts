/** Pure timeline geometry: maps a TimelineView into normalized [0, 1]
 * horizontal coordinates per lane. The canvas painter consumes this verbatim,
 * so tests can pin marker and clip positions without a DOM. */

import type { ScoreTracks, TimelineView } from "./types.js";

export interface EventMarker {
  label: string;
  x0: number;
  x1: number;
  tooltip: string;
}

export interface CueMarker {
  label: string;
  x: number;
  suppressed: boolean;
  tooltip: string;
}

export interface ClipSegment {
  index: number;
  x0: number;
  x1: number;
  label: string;
  tooltip: string;
}

export interface SpanRun {
  x0: number;
  x1: number;
}

export interface AnnotationPin {
  id: number;
  x: number;
  text: string;
  author: string;
}

export interface TrackPolyline {
  label: string;
  points: { x: number; y: number }[]; // y is the raw score in [0, 1]
}

export interface TimelineGeometry {
  sessionEndUs: number;
  events: EventMarker[];
  cues: CueMarker[];
  clips: ClipSegment[];
  visibility: SpanRun[];
  annotations: AnnotationPin[];
  tracks: TrackPolyline[];
}

function hasTracks(tracks: TimelineView["score_tracks"]): tracks is ScoreTracks {
  return Array.isArray((tracks as ScoreTracks).timestamps_us);
}

export function layoutTimeline(view: TimelineView): TimelineGeometry {
  const end = Math.max(1, view.session_end_us);
  const xOf = (us: number) => Math.min(1, Math.max(0, us / end));

  const events = view.events.map((e) => ({
    label: e.label,
    x0: xOf(e.start_us),
    x1: xOf(e.end_us),
    tooltip: `${e.label} (peak ${e.peak_score.toFixed(2)})`,
  }));

  const cues = view.cues.map((c) => ({
    label: c.label,
    x: xOf(c.issued_at_us),
    suppressed: c.suppressed,
    tooltip: c.suppressed ? `${c.label}: suppressed (${c.suppress_reason})` : `${c.label}: cued`,
  }));

  const clips = view.clips.map((c) => ({
    index: c.clip_index,
    x0: xOf(c.start_us),
    x1: xOf(c.end_us),
    label: c.dominant_label,
    tooltip: `clip ${c.clip_index}: ${c.dominant_label} (${c.event_refs.length} event${c.event_refs.length === 1 ? "" : "s"})`,
  }));

  const visibility = view.visibility_spans_us.map(([s, e]) => ({ x0: xOf(s), x1: xOf(e) }));

  const annotations = view.annotations.map((a) => ({
    id: a.id,
    x: xOf(a.timestamp_in_session_us),
    text: a.text,
    author: a.author,
  }));

  const tracks: TrackPolyline[] = [];
  if (hasTracks(view.score_tracks)) {
    const ts = view.score_tracks.timestamps_us;
    for (const [label, values] of Object.entries(view.score_tracks.labels)) {
      tracks.push({
        label,
        points: values.map((v, i) => ({ x: xOf(ts[i] ?? 0), y: v })),
      });
    }
    tracks.sort((a, b) => a.label.localeCompare(b.label));
  }

  return { sessionEndUs: end, events, cues, clips, visibility, annotations, tracks };
}

/** Which clip a click at normalized x lands in, if any. */
export function hitClip(geometry: TimelineGeometry, x: number): number | null {
  for (const clip of geometry.clips) {
    if (x >= clip.x0 && x <= clip.x1) {
      return clip.index;
    }
  }
  return null;
}

export function playheadX(geometry: TimelineGeometry, playheadUs: number): number {
  return Math.min(1, Math.max(0, playheadUs / geometry.sessionEndUs));
}
