/** Shared schema types. These mirror the toolkit's file formats exactly:
 * an export from this UI must ingest into the CLI with zero errors. */

export interface DocumentRecord {
  doc_id: string;
  text: string;
}

export interface ExcerptRecord {
  doc_id: string;
  start: number;
  end: number;
  text: string;
  annotator_id: string;
}

/** One article entry of the annotation schema. Task files carry the same
 * shape with `excerpts` empty or absent. */
export interface ArticleAnnotation {
  topic: string;
  perspective: string;
  documents: DocumentRecord[];
  excerpts: ExcerptRecord[];
}

export interface KeyPointRecord {
  kp_id: string;
  text: string;
}

/** Human-evaluation record schema consumed by the CLI's human-scores. */
export interface HumanEvalExport {
  instance_id: string;
  method: string;
  doc_keypoints: KeyPointRecord[];
  summary_keypoints: KeyPointRecord[];
  included_doc_ids: string[];
  supported_summary_ids: string[];
  annotator_id: string;
}

/** Task item for summary evaluation sessions. */
export interface EvalTaskItem {
  instance_id: string;
  method: string;
  document_text: string;
  summary_text: string;
}

export type TaskKind = "excerpt_highlighting" | "summary_evaluation";

export interface HighlightMark {
  item_id: string;
  doc_id: string;
  start: number;
  end: number;
  created_at: number;
}

/** Pairing of a summary key point with the document key point it restates;
 * doc_kp_id === null marks a summary key point unsupported by the document. */
export interface InclusionMark {
  summary_kp_id: string;
  doc_kp_id: string | null;
}

export interface EvalItemState {
  doc_keypoints: KeyPointRecord[];
  summary_keypoints: KeyPointRecord[];
  inclusions: InclusionMark[];
}

export type ItemProgress = "pending" | "done" | "skipped";

export class LoadError extends Error {}
export class ExportBlockedError extends Error {
  constructor(message: string, public readonly pendingItems: string[] = []) {
    super(message);
  }
}
