/** Annotation session state machine, framework-free so it can be tested
 * headlessly. The UI layer only renders this state and calls its methods. */

import {
  parseEvalTasks,
  parseExcerptTasks,
  validateAnnotationExport,
  validateEvalExport,
} from "./schema.js";
import { previewScores, PreviewScores } from "./scoring.js";
import { snapToSentence } from "./snap.js";
import {
  ArticleAnnotation,
  EvalItemState,
  EvalTaskItem,
  ExportBlockedError,
  HighlightMark,
  HumanEvalExport,
  InclusionMark,
  ItemProgress,
  LoadError,
  TaskKind,
} from "./types.js";

export interface SessionSnapshot {
  annotator_id: string;
  kind: TaskKind;
  consent: boolean;
  highlights: HighlightMark[];
  eval_state: Record<string, EvalItemState>;
  progress: Record<string, ItemProgress>;
  sentence_snap: boolean;
}

export class AnnotationSession {
  readonly kind: TaskKind;
  readonly annotatorId: string;
  consent = false;
  sentenceSnap = false;

  readonly articles: ArticleAnnotation[] = [];
  readonly evalItems: EvalTaskItem[] = [];
  highlights: HighlightMark[] = [];
  evalState: Record<string, EvalItemState> = {};
  progress: Record<string, ItemProgress> = {};

  private clock: () => number;

  private constructor(kind: TaskKind, annotatorId: string, clock?: () => number) {
    this.kind = kind;
    this.annotatorId = annotatorId;
    this.clock = clock ?? (() => Date.now());
  }

  /** Parse a task file and open a session over its items. */
  static loadTasks(
    raw: unknown,
    kind: TaskKind,
    annotatorId: string,
    clock?: () => number
  ): AnnotationSession {
    const session = new AnnotationSession(kind, annotatorId, clock);
    if (kind === "excerpt_highlighting") {
      session.articles.push(...parseExcerptTasks(raw));
      for (const article of session.articles) {
        session.progress[AnnotationSession.articleKey(article)] = "pending";
      }
    } else {
      session.evalItems.push(...parseEvalTasks(raw));
      for (const item of session.evalItems) {
        session.progress[item.instance_id] = "pending";
        session.evalState[item.instance_id] = {
          doc_keypoints: [],
          summary_keypoints: [],
          inclusions: [],
        };
      }
    }
    return session;
  }

  static articleKey(article: ArticleAnnotation): string {
    return `${article.topic}|${article.perspective}`;
  }

  itemIds(): string[] {
    if (this.kind === "excerpt_highlighting") {
      return this.articles.map(AnnotationSession.articleKey);
    }
    return this.evalItems.map((i) => i.instance_id);
  }

  private article(itemId: string): ArticleAnnotation {
    const article = this.articles.find(
      (a) => AnnotationSession.articleKey(a) === itemId
    );
    if (!article) throw new LoadError(`unknown item: ${itemId}`);
    return article;
  }

  private evalItem(itemId: string): EvalTaskItem {
    const item = this.evalItems.find((i) => i.instance_id === itemId);
    if (!item) throw new LoadError(`unknown item: ${itemId}`);
    return item;
  }

  // -- excerpt highlighting ----------------------------------------------------

  /** Add (or replace) the highlight for one document; spans are validated
   * against the text and optionally snapped to sentence boundaries. */
  highlight(itemId: string, docId: string, start: number, end: number): HighlightMark {
    const article = this.article(itemId);
    const doc = article.documents.find((d) => d.doc_id === docId);
    if (!doc) throw new LoadError(`${itemId}: unknown document ${docId}`);
    let span = { start, end };
    if (this.sentenceSnap) {
      span = snapToSentence(doc.text, start, end);
    }
    if (!(0 <= span.start && span.start < span.end && span.end <= doc.text.length)) {
      throw new LoadError(
        `${itemId}/${docId}: span [${span.start}, ${span.end}) out of bounds`
      );
    }
    // excerpt mode allows at most one highlight per document
    this.highlights = this.highlights.filter(
      (h) => !(h.item_id === itemId && h.doc_id === docId)
    );
    const mark: HighlightMark = {
      item_id: itemId,
      doc_id: docId,
      start: span.start,
      end: span.end,
      created_at: this.clock(),
    };
    this.highlights.push(mark);
    return mark;
  }

  clearHighlight(itemId: string, docId: string): void {
    this.highlights = this.highlights.filter(
      (h) => !(h.item_id === itemId && h.doc_id === docId)
    );
  }

  // -- summary evaluation --------------------------------------------------------

  addKeypoint(itemId: string, side: "doc" | "summary", text: string): string {
    const state = this.evalState[itemId];
    if (!state) throw new LoadError(`unknown item: ${itemId}`);
    if (!text.trim()) throw new LoadError(`${itemId}: empty key point`);
    const list = side === "doc" ? state.doc_keypoints : state.summary_keypoints;
    const kpId = `${side}${list.length}`;
    list.push({ kp_id: kpId, text: text.trim() });
    return kpId;
  }

  /** Pair a summary key point with the document key point it restates, or
   * with null to mark it unsupported. Dangling references are rejected. */
  markInclusion(itemId: string, summaryKpId: string, docKpId: string | null): InclusionMark {
    const state = this.evalState[itemId];
    if (!state) throw new LoadError(`unknown item: ${itemId}`);
    if (!state.summary_keypoints.some((k) => k.kp_id === summaryKpId)) {
      throw new LoadError(`${itemId}: unknown summary key point ${summaryKpId}`);
    }
    if (docKpId !== null && !state.doc_keypoints.some((k) => k.kp_id === docKpId)) {
      throw new LoadError(`${itemId}: unknown document key point ${docKpId}`);
    }
    state.inclusions = state.inclusions.filter((m) => m.summary_kp_id !== summaryKpId);
    const mark: InclusionMark = { summary_kp_id: summaryKpId, doc_kp_id: docKpId };
    state.inclusions.push(mark);
    return mark;
  }

  preview(itemId: string): PreviewScores {
    const state = this.evalState[itemId];
    if (!state) throw new LoadError(`unknown item: ${itemId}`);
    return previewScores(state);
  }

  // -- progress and export ---------------------------------------------------------

  markDone(itemId: string): void {
    if (!(itemId in this.progress)) throw new LoadError(`unknown item: ${itemId}`);
    this.progress[itemId] = "done";
  }

  markSkipped(itemId: string): void {
    if (!(itemId in this.progress)) throw new LoadError(`unknown item: ${itemId}`);
    this.progress[itemId] = "skipped";
  }

  setConsent(consent: boolean): void {
    this.consent = consent;
  }

  pendingItems(): string[] {
    return this.itemIds().filter((id) => this.progress[id] === "pending");
  }

  /** Export the session in the toolkit's schema. Blocked without consent or
   * while items are neither done nor explicitly skipped. */
  exportSession(): ArticleAnnotation[] | HumanEvalExport[] {
    if (!this.consent) {
      throw new ExportBlockedError("export requires annotator consent");
    }
    const pending = this.pendingItems();
    if (pending.length) {
      throw new ExportBlockedError(
        `export blocked, ${pending.length} item(s) unfinished`, pending
      );
    }
    if (!this.itemIds().length) {
      throw new ExportBlockedError("export blocked, session is empty");
    }
    if (this.kind === "excerpt_highlighting") {
      const articles: ArticleAnnotation[] = this.articles.map((article) => ({
        topic: article.topic,
        perspective: article.perspective,
        documents: article.documents.map((d) => ({ ...d })),
        excerpts: this.highlights
          .filter((h) => h.item_id === AnnotationSession.articleKey(article))
          .sort((a, b) => (a.doc_id < b.doc_id ? -1 : a.doc_id > b.doc_id ? 1 : 0))
          .map((h) => {
            const doc = article.documents.find((d) => d.doc_id === h.doc_id)!;
            return {
              doc_id: h.doc_id,
              start: h.start,
              end: h.end,
              text: doc.text.slice(h.start, h.end),
              annotator_id: this.annotatorId,
            };
          }),
      }));
      validateAnnotationExport(articles);
      return articles;
    }
    const records: HumanEvalExport[] = this.evalItems
      .filter((item) => this.progress[item.instance_id] === "done")
      .map((item) => {
        const state = this.evalState[item.instance_id]!;
        const scores = previewScores(state);
        return {
          instance_id: item.instance_id,
          method: item.method,
          doc_keypoints: state.doc_keypoints.map((k) => ({ ...k })),
          summary_keypoints: state.summary_keypoints.map((k) => ({ ...k })),
          included_doc_ids: scores.includedDocIds,
          supported_summary_ids: scores.supportedSummaryIds,
          annotator_id: this.annotatorId,
        };
      });
    validateEvalExport(records);
    return records;
  }

  // -- drafts --------------------------------------------------------------------

  snapshot(): SessionSnapshot {
    return {
      annotator_id: this.annotatorId,
      kind: this.kind,
      consent: this.consent,
      highlights: this.highlights.map((h) => ({ ...h })),
      eval_state: JSON.parse(JSON.stringify(this.evalState)),
      progress: { ...this.progress },
      sentence_snap: this.sentenceSnap,
    };
  }

  restore(snapshot: SessionSnapshot): void {
    if (snapshot.kind !== this.kind || snapshot.annotator_id !== this.annotatorId) {
      throw new LoadError("draft does not belong to this session");
    }
    this.consent = snapshot.consent;
    this.sentenceSnap = snapshot.sentence_snap;
    this.highlights = snapshot.highlights.map((h) => ({ ...h }));
    this.evalState = JSON.parse(JSON.stringify(snapshot.eval_state));
    for (const [key, value] of Object.entries(snapshot.progress)) {
      if (key in this.progress) this.progress[key] = value;
    }
  }
}
