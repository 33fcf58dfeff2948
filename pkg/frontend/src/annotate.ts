/** Annotation submission flow: client-side validation (no request for an
 * empty draft), optimistic insert, rollback with the server's error text
 * surfaced verbatim. */

import { ApiRequestError, type ReviewApi } from "./api.js";
import type { AnnotationView, TimelineView } from "./types.js";

export const MAX_ANNOTATION_CHARS = 2000;

export function validateDraft(text: string): string | null {
  if (text.trim().length === 0) {
    return "annotation text must not be empty";
  }
  if (text.length > MAX_ANNOTATION_CHARS) {
    return `annotation text exceeds ${MAX_ANNOTATION_CHARS} characters`;
  }
  return null;
}

export type SubmitResult =
  | { ok: true; annotation: AnnotationView }
  | { ok: false; error: string; requested: boolean };

/** Post a draft. Inserts optimistically into the timeline view; on a server
 * rejection the optimistic row is rolled back and the error returned. */
export async function submitAnnotation(
  api: ReviewApi,
  view: TimelineView,
  draft: { author: string; text: string; timestampUs: number },
): Promise<SubmitResult> {
  const clientError = validateDraft(draft.text);
  if (clientError !== null) {
    return { ok: false, error: clientError, requested: false };
  }
  const optimistic: AnnotationView = {
    id: -1,
    author: draft.author,
    timestamp_in_session_us: draft.timestampUs,
    text: draft.text,
    created_at_us: 0,
  };
  view.annotations.push(optimistic);
  try {
    const stored = await api.postAnnotation(view.session_id, {
      author: draft.author,
      timestamp_in_session_us: draft.timestampUs,
      text: draft.text,
    });
    const at = view.annotations.indexOf(optimistic);
    view.annotations.splice(at, 1, stored);
    view.annotations.sort(
      (a, b) => a.timestamp_in_session_us - b.timestamp_in_session_us || a.id - b.id,
    );
    return { ok: true, annotation: stored };
  } catch (err) {
    const at = view.annotations.indexOf(optimistic);
    if (at >= 0) {
      view.annotations.splice(at, 1);
    }
    const message = err instanceof ApiRequestError ? err.detail : String(err);
    return { ok: false, error: message, requested: true };
  }
}
