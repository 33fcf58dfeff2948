/** Typed mirrors of the /api/v1 JSON schemas. The UI never invents values:
 * everything rendered comes from these documents. */

export interface SessionEntry {
  session_id: string;
  subject: string;
  started_at_us: number;
  frame_rate_hz: number;
  duration_us: number;
  event_count: number;
  issued_cue_count: number;
}

export interface SessionWarning {
  file: string;
  error: string;
}

export interface SessionList {
  schema_version: number;
  sessions: SessionEntry[];
  warnings: SessionWarning[];
}

export interface EventView {
  label: string;
  start_us: number;
  end_us: number;
  peak_score: number;
}

export interface CueView {
  label: string;
  issued_at_us: number;
  channel: string;
  suppressed: boolean;
  suppress_reason: string | null;
}

export interface ClipView {
  clip_index: number;
  start_us: number;
  end_us: number;
  event_refs: number[];
  dominant_label: string;
}

export interface ScoreTracks {
  timestamps_us: number[];
  labels: Record<string, number[]>;
}

export interface AnnotationView {
  id: number;
  author: string;
  timestamp_in_session_us: number;
  text: string;
  created_at_us: number;
}

export interface TimelineView {
  schema_version: number;
  session_id: string;
  session_end_us: number;
  events: EventView[];
  cues: CueView[];
  clips: ClipView[];
  visibility_spans_us: [number, number][];
  score_tracks: ScoreTracks | Record<string, never>;
  annotations: AnnotationView[];
}

export interface ClipFrame {
  timestamp_us: number;
  face_present: boolean;
  blob_hash: string | null;
  points?: [number, number][];
}

export interface ClipFrames {
  schema_version: number;
  session_id: string;
  clip_index: number;
  start_us: number;
  end_us: number;
  frames: ClipFrame[];
}

export interface MetricsView {
  schema_version: number;
  session_id: string;
  session_end_us: number;
  face_in_view_fraction: number;
  gaze_while_speaking: Record<string, number>;
  gaze_while_speaking_strict: Record<string, number>;
  pose: {
    mean_abs_yaw_deg: number;
    yaw_histogram: number[];
    yaw_bin_edges_deg: number[];
    facing_fraction: number;
    sample_count: number;
  };
  event_counts: Record<string, number>;
  cue_counts_issued: Record<string, number>;
  cue_counts_suppressed: Record<string, number>;
  game_accuracy: number | null;
}

export interface ProgressPointView {
  session_id: string;
  started_at_us: number;
  face_in_view_fraction: number | null;
  facing_fraction: number | null;
  mean_abs_yaw_deg: number | null;
  game_accuracy: number | null;
}

export type MetricName = "face_in_view_fraction" | "facing_fraction" | "mean_abs_yaw_deg" | "game_accuracy";

export const METRIC_NAMES: MetricName[] = [
  "game_accuracy",
  "face_in_view_fraction",
  "facing_fraction",
  "mean_abs_yaw_deg",
];

export interface ProgressView {
  schema_version: number;
  subject: string;
  points: ProgressPointView[];
  slopes: Record<string, number | null>;
}

export interface ApiErrorBody {
  error: { code: string; detail: string };
}

export interface AnnotationDraft {
  author: string;
  timestamp_in_session_us: number;
  text: string;
}
