/** UI state. Invariants: the playhead always stays within the open session's
 * bounds, and nothing here ever mutates server data (annotation posts go
 * through the api client; views are replaced wholesale on refetch). */

import type { MetricName, ProgressView, TimelineView } from "./types.js";

export interface AnnotationDraftState {
  author: string;
  text: string;
  timestampUs: number;
}

export class UiState {
  timeline: TimelineView | null = null;
  playheadUs = 0;
  selectedClip: number | null = null;
  replayActive = false;
  draft: AnnotationDraftState = { author: "", text: "", timestampUs: 0 };
  progress: ProgressView | null = null;
  progressMetric: MetricName = "game_accuracy";

  openTimeline(view: TimelineView): void {
    this.timeline = view;
    this.playheadUs = 0;
    this.selectedClip = null;
    this.replayActive = false;
    this.draft = { author: this.draft.author, text: "", timestampUs: 0 };
  }

  setPlayhead(us: number): number {
    const end = this.timeline ? this.timeline.session_end_us : 0;
    this.playheadUs = Math.min(Math.max(0, Math.round(us)), end);
    return this.playheadUs;
  }

  /** Clicking a clip moves the playhead to its start and begins replay. */
  selectClip(index: number): void {
    if (!this.timeline) {
      return;
    }
    const clip = this.timeline.clips[index];
    if (!clip) {
      return;
    }
    this.selectedClip = index;
    this.replayActive = true;
    this.setPlayhead(clip.start_us);
  }

  stopReplay(): void {
    this.replayActive = false;
  }

  /** Advance the playhead during replay, looping within the selected clip. */
  tickReplay(dtUs: number): number {
    if (!this.timeline || !this.replayActive || this.selectedClip === null) {
      return this.playheadUs;
    }
    const clip = this.timeline.clips[this.selectedClip];
    if (!clip) {
      return this.playheadUs;
    }
    let next = this.playheadUs + dtUs;
    if (next > clip.end_us) {
      next = clip.start_us + ((next - clip.start_us) % Math.max(1, clip.end_us - clip.start_us));
    }
    return this.setPlayhead(next);
  }

  setDraftText(text: string): void {
    this.draft.text = text;
  }

  setDraftAuthor(author: string): void {
    this.draft.author = author;
  }

  stampDraftAtPlayhead(): void {
    this.draft.timestampUs = this.playheadUs;
  }

  openProgress(view: ProgressView): void {
    this.progress = view;
  }

  /** Metric toggles only re-render from the cached document, never refetch. */
  selectMetric(metric: MetricName): void {
    this.progressMetric = metric;
  }
}
