/** DOM layer: renders session state and forwards interactions. All logic
 * lives in session.ts; this file only draws and wires events. */

import { DraftStore } from "./draft.js";
import { AnnotationSession } from "./session.js";
import { ExportBlockedError, LoadError, TaskKind } from "./types.js";

interface UiState {
  session: AnnotationSession | null;
  drafts: DraftStore;
  currentIndex: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

/** Character offsets of the current selection inside a container that holds
 * one document's text (possibly split by <mark> nodes). */
function selectionOffsets(container: HTMLElement): { start: number; end: number } | null {
  const selection = window.getSelection();
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null;
  }
  const offsetOf = (node: Node, offset: number): number => {
    let total = 0;
    const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT);
    let current = walker.nextNode();
    while (current) {
      if (current === node) return total + offset;
      total += current.textContent?.length ?? 0;
      current = walker.nextNode();
    }
    return total;
  };
  const start = offsetOf(range.startContainer, range.startOffset);
  const end = offsetOf(range.endContainer, range.endOffset);
  return start < end ? { start, end } : null;
}

function renderTextWithMarks(text: string, spans: { start: number; end: number }[]): Node[] {
  const sorted = [...spans].sort((a, b) => a.start - b.start);
  const nodes: Node[] = [];
  let cursor = 0;
  for (const span of sorted) {
    if (span.start > cursor) nodes.push(document.createTextNode(text.slice(cursor, span.start)));
    nodes.push(el("mark", {}, text.slice(span.start, span.end)));
    cursor = span.end;
  }
  if (cursor < text.length) nodes.push(document.createTextNode(text.slice(cursor)));
  return nodes;
}

function download(filename: string, payload: unknown): void {
  const blob = new Blob([JSON.stringify(payload, null, 2)], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = el("a", { href: url, download: filename });
  document.body.append(a);
  a.click();
  a.remove();
  URL.revokeObjectURL(url);
}

export function mount(root: HTMLElement): void {
  const state: UiState = {
    session: null,
    drafts: new DraftStore(window.localStorage),
    currentIndex: 0,
  };

  const status = el("div", { class: "status" }, "Load a task file to begin.");
  const itemHost = el("div", { class: "item-host" });

  const kindSelect = el("select", { class: "kind" });
  kindSelect.append(
    el("option", { value: "excerpt_highlighting" }, "Excerpt highlighting"),
    el("option", { value: "summary_evaluation" }, "Summary evaluation")
  );
  const annotatorInput = el("input", {
    type: "text", placeholder: "annotator id", value: "annotator",
  });
  const fileInput = el("input", { type: "file", accept: ".json,application/json" });
  const consentLabel = el("label", { class: "consent" });
  const consentBox = el("input", { type: "checkbox" });
  consentLabel.append(
    consentBox,
    " I consent to my annotations being exported and used for research."
  );
  const snapLabel = el("label", { class: "snap" });
  const snapBox = el("input", { type: "checkbox" });
  snapLabel.append(snapBox, " Snap highlights to sentences");
  const exportButton = el("button", {}, "Export");
  const progressBadge = el("span", { class: "progress" });

  const say = (message: string, isError = false) => {
    status.textContent = message;
    status.className = isError ? "status error" : "status";
  };

  const persist = () => {
    if (state.session) state.drafts.save(state.session);
  };

  const refreshProgress = () => {
    if (!state.session) return;
    const ids = state.session.itemIds();
    const done = ids.filter((id) => state.session!.progress[id] !== "pending").length;
    progressBadge.textContent = `${done}/${ids.length} items finished`;
  };

  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      const raw = JSON.parse(await file.text());
      const kind = kindSelect.value as TaskKind;
      state.session = AnnotationSession.loadTasks(
        raw, kind, annotatorInput.value.trim() || "annotator"
      );
      state.currentIndex = 0;
      const restored = state.drafts.restore(state.session);
      consentBox.checked = state.session.consent;
      snapBox.checked = state.session.sentenceSnap;
      say(
        restored
          ? `Loaded ${state.session.itemIds().length} item(s); draft restored.`
          : `Loaded ${state.session.itemIds().length} item(s).`
      );
      renderItem();
    } catch (error) {
      state.session = null;
      itemHost.replaceChildren(
        el("div", { class: "load-error" },
          `Could not load task file: ${(error as Error).message}`)
      );
      say("Load failed.", true);
    }
    refreshProgress();
  });

  consentBox.addEventListener("change", () => {
    state.session?.setConsent(consentBox.checked);
    persist();
  });
  snapBox.addEventListener("change", () => {
    if (state.session) {
      state.session.sentenceSnap = snapBox.checked;
      persist();
    }
  });

  exportButton.addEventListener("click", () => {
    if (!state.session) {
      say("Nothing to export.", true);
      return;
    }
    try {
      const payload = state.session.exportSession();
      const name =
        state.session.kind === "excerpt_highlighting"
          ? `annotations-${state.session.annotatorId}.json`
          : `human-eval-${state.session.annotatorId}.json`;
      download(name, payload);
      say("Export written.");
    } catch (error) {
      if (error instanceof ExportBlockedError && error.pendingItems.length) {
        say(`Export blocked; unfinished: ${error.pendingItems.join(", ")}`, true);
      } else {
        say((error as Error).message, true);
      }
    }
  });

  function renderItem(): void {
    const session = state.session;
    if (!session) return;
    const ids = session.itemIds();
    const itemId = ids[state.currentIndex];
    if (itemId === undefined) {
      itemHost.replaceChildren(el("div", {}, "No items."));
      return;
    }
    const nav = el("div", { class: "nav" });
    const prev = el("button", {}, "Previous");
    const next = el("button", {}, "Next");
    const done = el("button", { class: "done" }, "Mark done");
    const skip = el("button", {}, "Skip");
    prev.addEventListener("click", () => {
      state.currentIndex = Math.max(0, state.currentIndex - 1);
      renderItem();
    });
    next.addEventListener("click", () => {
      state.currentIndex = Math.min(ids.length - 1, state.currentIndex + 1);
      renderItem();
    });
    done.addEventListener("click", () => {
      session.markDone(itemId);
      persist();
      refreshProgress();
      renderItem();
    });
    skip.addEventListener("click", () => {
      session.markSkipped(itemId);
      persist();
      refreshProgress();
      renderItem();
    });
    nav.append(
      prev,
      el("span", { class: "position" },
        ` ${state.currentIndex + 1} / ${ids.length} (${session.progress[itemId]}) `),
      next, done, skip
    );

    const body =
      session.kind === "excerpt_highlighting"
        ? renderExcerptItem(session, itemId)
        : renderEvalItem(session, itemId);
    itemHost.replaceChildren(el("h2", {}, itemId), nav, body);
  }

  function renderExcerptItem(session: AnnotationSession, itemId: string): HTMLElement {
    const article = session.articles.find(
      (a) => AnnotationSession.articleKey(a) === itemId
    )!;
    const container = el("div", { class: "documents" });
    for (const doc of article.documents) {
      const spans = session.highlights.filter(
        (h) => h.item_id === itemId && h.doc_id === doc.doc_id
      );
      const textHost = el("div", { class: "doc-text" });
      textHost.append(...renderTextWithMarks(doc.text, spans));
      const highlightButton = el("button", {}, "Highlight selection");
      highlightButton.addEventListener("click", () => {
        const offsets = selectionOffsets(textHost);
        if (!offsets) {
          say("Select a span inside this document first.", true);
          return;
        }
        try {
          session.highlight(itemId, doc.doc_id, offsets.start, offsets.end);
          persist();
          renderItem();
        } catch (error) {
          say((error as LoadError).message, true);
        }
      });
      const clearButton = el("button", {}, "Clear");
      clearButton.addEventListener("click", () => {
        session.clearHighlight(itemId, doc.doc_id);
        persist();
        renderItem();
      });
      container.append(
        el("div", { class: "document" },
          el("h3", {}, doc.doc_id),
          textHost,
          el("div", { class: "doc-actions" }, highlightButton, clearButton))
      );
    }
    return container;
  }

  function renderEvalItem(session: AnnotationSession, itemId: string): HTMLElement {
    const item = session.evalItems.find((i) => i.instance_id === itemId)!;
    const evalState = session.evalState[itemId]!;
    const container = el("div", { class: "eval" });

    const addPanel = (side: "doc" | "summary", title: string, text: string) => {
      const textHost = el("div", { class: "doc-text" }, text);
      const addButton = el("button", {}, `Add ${side} key point from selection`);
      addButton.addEventListener("click", () => {
        const offsets = selectionOffsets(textHost);
        if (!offsets) {
          say("Select the key point text first.", true);
          return;
        }
        session.addKeypoint(itemId, side, text.slice(offsets.start, offsets.end));
        persist();
        renderItem();
      });
      const list = el("ul", { class: "kp-list" });
      const points =
        side === "doc" ? evalState.doc_keypoints : evalState.summary_keypoints;
      for (const kp of points) {
        list.append(el("li", {}, `${kp.kp_id}: ${kp.text}`));
      }
      container.append(
        el("div", { class: "panel" }, el("h3", {}, title), textHost, addButton, list)
      );
    };
    addPanel("doc", "Document", item.document_text);
    addPanel("summary", `Summary (${item.method})`, item.summary_text);

    const marks = el("div", { class: "marks" }, el("h3", {}, "Inclusion marks"));
    for (const kp of evalState.summary_keypoints) {
      const select = el("select", {});
      select.append(el("option", { value: "" }, "unsupported / hallucinated"));
      for (const docKp of evalState.doc_keypoints) {
        const option = el("option", { value: docKp.kp_id }, `${docKp.kp_id}: ${docKp.text}`);
        select.append(option);
      }
      const existing = evalState.inclusions.find((m) => m.summary_kp_id === kp.kp_id);
      select.value = existing?.doc_kp_id ?? "";
      select.addEventListener("change", () => {
        session.markInclusion(itemId, kp.kp_id, select.value || null);
        persist();
        renderItem();
      });
      marks.append(el("div", { class: "mark-row" }, `${kp.kp_id}: ${kp.text} -> `, select));
    }
    const preview = session.preview(itemId);
    const fmt = (v: number | null) => (v === null ? "n/a" : v.toFixed(3));
    marks.append(
      el("div", { class: "preview" },
        `Preview - coverage: ${fmt(preview.coverage)}, faithfulness: ${fmt(preview.faithfulness)}`)
    );
    container.append(marks);
    return container;
  }

  const header = el("div", { class: "toolbar" },
    kindSelect, annotatorInput, fileInput, snapLabel, consentLabel,
    exportButton, progressBadge
  );
  root.replaceChildren(el("h1", {}, "Perspective annotation tool"), header, status, itemHost);
}
