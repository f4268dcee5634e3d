/** Import validation for task files and client-side validation of exports. */

import {
  ArticleAnnotation,
  DocumentRecord,
  EvalTaskItem,
  ExcerptRecord,
  HumanEvalExport,
  LoadError,
} from "./types.js";

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function requireString(obj: Record<string, unknown>, key: string, where: string): string {
  const value = obj[key];
  if (typeof value !== "string") {
    throw new LoadError(`${where}.${key}: expected string`);
  }
  return value;
}

function requireInt(obj: Record<string, unknown>, key: string, where: string): number {
  const value = obj[key];
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new LoadError(`${where}.${key}: expected integer`);
  }
  return value;
}

function asArray(value: unknown, where: string): unknown[] {
  if (!Array.isArray(value)) {
    throw new LoadError(`${where}: expected a list`);
  }
  return value;
}

function parseDocuments(raw: unknown, where: string): DocumentRecord[] {
  const documents: DocumentRecord[] = [];
  const ids = new Set<string>();
  for (const [i, entry] of asArray(raw, where).entries()) {
    if (!isRecord(entry)) throw new LoadError(`${where}[${i}]: expected object`);
    const doc = {
      doc_id: requireString(entry, "doc_id", `${where}[${i}]`),
      text: requireString(entry, "text", `${where}[${i}]`),
    };
    if (!doc.text) throw new LoadError(`${where}[${i}].text: empty document`);
    if (ids.has(doc.doc_id)) {
      throw new LoadError(`${where}[${i}].doc_id: duplicate id ${doc.doc_id}`);
    }
    ids.add(doc.doc_id);
    documents.push(doc);
  }
  if (!documents.length) throw new LoadError(`${where}: no documents`);
  return documents;
}

export function parseExcerptTasks(raw: unknown): ArticleAnnotation[] {
  const entries = isRecord(raw) ? [raw] : asArray(raw, "tasks");
  const articles: ArticleAnnotation[] = [];
  const keys = new Set<string>();
  for (const [i, entry] of entries.entries()) {
    if (!isRecord(entry)) throw new LoadError(`tasks[${i}]: expected object`);
    const article: ArticleAnnotation = {
      topic: requireString(entry, "topic", `tasks[${i}]`),
      perspective: requireString(entry, "perspective", `tasks[${i}]`),
      documents: parseDocuments(entry["documents"], `tasks[${i}].documents`),
      excerpts: [],
    };
    const key = `${article.topic}|${article.perspective}`;
    if (keys.has(key)) throw new LoadError(`tasks[${i}]: duplicate article ${key}`);
    keys.add(key);
    articles.push(article);
  }
  return articles;
}

export function parseEvalTasks(raw: unknown): EvalTaskItem[] {
  const entries = isRecord(raw) ? [raw] : asArray(raw, "tasks");
  const items: EvalTaskItem[] = [];
  const ids = new Set<string>();
  for (const [i, entry] of entries.entries()) {
    if (!isRecord(entry)) throw new LoadError(`tasks[${i}]: expected object`);
    const item: EvalTaskItem = {
      instance_id: requireString(entry, "instance_id", `tasks[${i}]`),
      method: typeof entry["method"] === "string" ? (entry["method"] as string) : "unknown",
      document_text: requireString(entry, "document_text", `tasks[${i}]`),
      summary_text: requireString(entry, "summary_text", `tasks[${i}]`),
    };
    if (ids.has(item.instance_id)) {
      throw new LoadError(`tasks[${i}]: duplicate instance ${item.instance_id}`);
    }
    ids.add(item.instance_id);
    items.push(item);
  }
  return items;
}

/** Validation run on every export before download: span bounds, substring
 * integrity, and the one-excerpt-per-document rule. */
export function validateAnnotationExport(articles: ArticleAnnotation[]): void {
  for (const article of articles) {
    const byId = new Map(article.documents.map((d) => [d.doc_id, d]));
    const seen = new Set<string>();
    for (const excerpt of article.excerpts) {
      const where = `${article.topic}|${article.perspective}/${excerpt.doc_id}`;
      const doc = byId.get(excerpt.doc_id);
      if (!doc) throw new LoadError(`${where}: excerpt references unknown document`);
      if (!(0 <= excerpt.start && excerpt.start < excerpt.end && excerpt.end <= doc.text.length)) {
        throw new LoadError(`${where}: span [${excerpt.start}, ${excerpt.end}) out of bounds`);
      }
      if (doc.text.slice(excerpt.start, excerpt.end) !== excerpt.text) {
        throw new LoadError(`${where}: excerpt text disagrees with span`);
      }
      const slot = `${excerpt.doc_id}|${excerpt.annotator_id}`;
      if (seen.has(slot)) {
        throw new LoadError(`${where}: second excerpt for the document`);
      }
      seen.add(slot);
    }
  }
}

export function validateEvalExport(records: HumanEvalExport[]): void {
  for (const record of records) {
    const docIds = new Set(record.doc_keypoints.map((k) => k.kp_id));
    const summaryIds = new Set(record.summary_keypoints.map((k) => k.kp_id));
    if (docIds.size !== record.doc_keypoints.length) {
      throw new LoadError(`${record.instance_id}: duplicate doc kp_id`);
    }
    if (summaryIds.size !== record.summary_keypoints.length) {
      throw new LoadError(`${record.instance_id}: duplicate summary kp_id`);
    }
    for (const id of record.included_doc_ids) {
      if (!docIds.has(id)) throw new LoadError(`${record.instance_id}: dangling doc mark ${id}`);
    }
    for (const id of record.supported_summary_ids) {
      if (!summaryIds.has(id)) {
        throw new LoadError(`${record.instance_id}: dangling summary mark ${id}`);
      }
    }
  }
}

/** Round-trip helper used by tests and the UI: parse an export produced by
 * this app (same shape as a task file plus filled excerpts). */
export function parseAnnotationExport(raw: unknown): ArticleAnnotation[] {
  const entries = asArray(raw, "export");
  const articles: ArticleAnnotation[] = [];
  for (const [i, entry] of entries.entries()) {
    if (!isRecord(entry)) throw new LoadError(`export[${i}]: expected object`);
    const base = parseExcerptTasks([entry])[0]!;
    const excerpts: ExcerptRecord[] = [];
    for (const [j, raw_] of asArray(entry["excerpts"] ?? [], `export[${i}].excerpts`).entries()) {
      if (!isRecord(raw_)) throw new LoadError(`export[${i}].excerpts[${j}]: expected object`);
      excerpts.push({
        doc_id: requireString(raw_, "doc_id", `export[${i}].excerpts[${j}]`),
        start: requireInt(raw_, "start", `export[${i}].excerpts[${j}]`),
        end: requireInt(raw_, "end", `export[${i}].excerpts[${j}]`),
        text: requireString(raw_, "text", `export[${i}].excerpts[${j}]`),
        annotator_id: requireString(raw_, "annotator_id", `export[${i}].excerpts[${j}]`),
      });
    }
    articles.push({ ...base, excerpts });
  }
  validateAnnotationExport(articles);
  return articles;
}
