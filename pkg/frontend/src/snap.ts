/** Sentence-snap: optionally widen a free character span to the enclosing
 * sentence boundaries. Free spans stay supported; this is a toggle. */

const BOUNDARY = /[.!?]/;

export function snapToSentence(
  text: string,
  start: number,
  end: number
): { start: number; end: number } {
  let s = Math.max(0, Math.min(start, text.length));
  let e = Math.max(s, Math.min(end, text.length));
  while (s > 0 && !BOUNDARY.test(text[s - 1]!)) {
    s -= 1;
  }
  while (s < e && text[s] === " ") {
    s += 1;
  }
  while (e < text.length && !BOUNDARY.test(text[e - 1]!)) {
    e += 1;
  }
  return { start: s, end: e };
}
