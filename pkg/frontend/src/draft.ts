/** Draft persistence: every mutation saves a snapshot so a reload restores
 * the session. Storage is injectable for tests (localStorage in the app). */

import { AnnotationSession, SessionSnapshot } from "./session.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.has(key) ? this.data.get(key)! : null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export class DraftStore {
  constructor(private store: KeyValueStore, private prefix = "persum-annotator") {}

  private key(session: AnnotationSession): string {
    return `${this.prefix}:${session.kind}:${session.annotatorId}`;
  }

  save(session: AnnotationSession): void {
    this.store.setItem(this.key(session), JSON.stringify(session.snapshot()));
  }

  /** Restore a saved draft into the session; returns whether one existed. */
  restore(session: AnnotationSession): boolean {
    const raw = this.store.getItem(this.key(session));
    if (raw === null) return false;
    session.restore(JSON.parse(raw) as SessionSnapshot);
    return true;
  }

  clear(session: AnnotationSession): void {
    this.store.removeItem(this.key(session));
  }
}
