/** Review-service client. HttpReviewApi talks to /api/v1 over fetch;
 * FixtureReviewApi serves recorded JSON documents so every view renders with
 * no backend at all (and lets tests count requests). */

import type {
  AnnotationDraft,
  AnnotationView,
  ApiErrorBody,
  ClipFrames,
  MetricsView,
  ProgressView,
  SessionList,
  TimelineView,
} from "./types.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: string,
  ) {
    super(detail);
  }
}

export interface ReviewApi {
  listSessions(): Promise<SessionList>;
  timeline(sessionId: string): Promise<TimelineView>;
  metrics(sessionId: string): Promise<MetricsView>;
  clipFrames(sessionId: string, clipIndex: number): Promise<ClipFrames>;
  progress(subject: string): Promise<ProgressView>;
  postAnnotation(sessionId: string, draft: AnnotationDraft): Promise<AnnotationView>;
}

async function parseError(response: Response): Promise<ApiRequestError> {
  try {
    const body = (await response.json()) as ApiErrorBody;
    return new ApiRequestError(response.status, body.error.code, body.error.detail);
  } catch {
    return new ApiRequestError(response.status, "unknown", `HTTP ${response.status}`);
  }
}

export class HttpReviewApi implements ReviewApi {
  constructor(private readonly base: string = "/api/v1") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  listSessions(): Promise<SessionList> {
    return this.get("/sessions");
  }

  timeline(sessionId: string): Promise<TimelineView> {
    return this.get(`/sessions/${encodeURIComponent(sessionId)}/timeline`);
  }

  metrics(sessionId: string): Promise<MetricsView> {
    return this.get(`/sessions/${encodeURIComponent(sessionId)}/metrics`);
  }

  clipFrames(sessionId: string, clipIndex: number): Promise<ClipFrames> {
    return this.get(`/sessions/${encodeURIComponent(sessionId)}/highlights/${clipIndex}/frames`);
  }

  progress(subject: string): Promise<ProgressView> {
    return this.get(`/subjects/${encodeURIComponent(subject)}/progress`);
  }

  async postAnnotation(sessionId: string, draft: AnnotationDraft): Promise<AnnotationView> {
    const response = await fetch(`${this.base}/sessions/${encodeURIComponent(sessionId)}/annotations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(draft),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as AnnotationView;
  }
}

export interface FixtureDocs {
  sessions: SessionList;
  timelines: Record<string, TimelineView>;
  metrics?: Record<string, MetricsView>;
  clips?: Record<string, ClipFrames>; // key: `${sessionId}/${clipIndex}`
  progress?: Record<string, ProgressView>;
}

/** Serves deep copies of recorded documents; annotations post into the copy so
 * the optimistic-UI flow works offline too. */
export class FixtureReviewApi implements ReviewApi {
  requestCount = 0;
  private nextAnnotationId = 1000;

  constructor(private readonly docs: FixtureDocs) {}

  private clone<T>(doc: T | undefined, what: string): Promise<T> {
    this.requestCount += 1;
    if (doc === undefined) {
      return Promise.reject(new ApiRequestError(404, "not_found", `no fixture for ${what}`));
    }
    return Promise.resolve(structuredClone(doc));
  }

  listSessions(): Promise<SessionList> {
    return this.clone(this.docs.sessions, "sessions");
  }

  timeline(sessionId: string): Promise<TimelineView> {
    return this.clone(this.docs.timelines[sessionId], `timeline ${sessionId}`);
  }

  metrics(sessionId: string): Promise<MetricsView> {
    return this.clone(this.docs.metrics?.[sessionId], `metrics ${sessionId}`);
  }

  clipFrames(sessionId: string, clipIndex: number): Promise<ClipFrames> {
    return this.clone(this.docs.clips?.[`${sessionId}/${clipIndex}`], `clip ${sessionId}/${clipIndex}`);
  }

  progress(subject: string): Promise<ProgressView> {
    return this.clone(this.docs.progress?.[subject], `progress ${subject}`);
  }

  postAnnotation(sessionId: string, draft: AnnotationDraft): Promise<AnnotationView> {
    this.requestCount += 1;
    const view = this.docs.timelines[sessionId];
    if (!view) {
      return Promise.reject(new ApiRequestError(404, "not_found", `unknown session '${sessionId}'`));
    }
    if (draft.timestamp_in_session_us < 0 || draft.timestamp_in_session_us > view.session_end_us) {
      return Promise.reject(
        new ApiRequestError(
          400,
          "timestamp_out_of_range",
          `timestamp ${draft.timestamp_in_session_us} outside session [0, ${view.session_end_us}]`,
        ),
      );
    }
    const stored: AnnotationView = {
      id: this.nextAnnotationId++,
      author: draft.author,
      timestamp_in_session_us: draft.timestamp_in_session_us,
      text: draft.text,
      created_at_us: Date.now() * 1000,
    };
    view.annotations.push(stored);
    view.annotations.sort((a, b) => a.timestamp_in_session_us - b.timestamp_in_session_us || a.id - b.id);
    return Promise.resolve(structuredClone(stored));
  }
}
