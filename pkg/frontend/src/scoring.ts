/** Live preview scores shown to the annotator while marking inclusions.
 * These must equal what the toolkit computes from the exported record. */

import { EvalItemState } from "./types.js";

export interface PreviewScores {
  coverage: number | null;
  faithfulness: number | null;
  includedDocIds: string[];
  supportedSummaryIds: string[];
}

export function previewScores(state: EvalItemState): PreviewScores {
  const includedDocIds = new Set<string>();
  const supportedSummaryIds = new Set<string>();
  for (const mark of state.inclusions) {
    if (mark.doc_kp_id !== null) {
      includedDocIds.add(mark.doc_kp_id);
      supportedSummaryIds.add(mark.summary_kp_id);
    }
  }
  const nDoc = state.doc_keypoints.length;
  const nSummary = state.summary_keypoints.length;
  return {
    coverage: nDoc ? includedDocIds.size / nDoc : null,
    faithfulness: nSummary ? supportedSummaryIds.size / nSummary : null,
    includedDocIds: [...includedDocIds].sort(),
    supportedSummaryIds: [...supportedSummaryIds].sort(),
  };
}
