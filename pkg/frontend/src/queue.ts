import { ServiceError } from "./api.js";
import type { JudgmentDraft, SubmitResponse } from "./types.js";

export type SettledOutcome = "delivered" | "duplicate" | "rejected";
export type SubmitResult = SettledOutcome | "queued";

export type SettleListener = (
  draft: JudgmentDraft,
  outcome: SettledOutcome,
  error?: ServiceError,
) => void;

interface JudgmentSink {
  submitJudgment(draft: JudgmentDraft): Promise<SubmitResponse>;
}

// Key separator that cannot occur in an identifier or annotator name.
const SEP = "";

/** One key per (usage pair, annotator), independent of identifier order. */
export function pairKey(draft: JudgmentDraft): string {
  const ids = [draft.identifier1, draft.identifier2].sort();
  return `${ids[0]}${SEP}${ids[1]}${SEP}${draft.annotator}`;
}

/**
 * Outbox for judgments. Every rating is stored verbatim and posted at
 * most once: a network failure keeps the entry for a later flush, a
 * server-side duplicate rejection settles it without resubmission, and
 * a key that already settled is never enqueued again. Drains are
 * serialized so concurrent flushes cannot double-post. After a network
 * failure the queue holds submissions locally until the next explicit
 * flush; any answer from the server, even a rejection, ends that state.
 */
export class JudgmentQueue {
  private readonly client: JudgmentSink;
  private readonly onSettled?: SettleListener;
  private readonly pending = new Map<string, JudgmentDraft>();
  private readonly outcomes = new Map<string, SettledOutcome>();
  private flushing: Promise<void> | null = null;
  private offline = false;

  constructor(client: JudgmentSink, onSettled?: SettleListener) {
    this.client = client;
    this.onSettled = onSettled;
  }

  get size(): number {
    return this.pending.size;
  }

  pendingJudgments(): JudgmentDraft[] {
    return [...this.pending.values()].map((draft) => ({ ...draft }));
  }

  /**
   * Enqueue a judgment and attempt delivery. Resolves "queued" when the
   * service is unreachable; the entry survives for the next flush.
   */
  async submit(draft: JudgmentDraft): Promise<SubmitResult> {
    const key = pairKey(draft);
    const settled = this.outcomes.get(key);
    if (settled !== undefined) {
      return settled;
    }
    if (!this.pending.has(key)) {
      this.pending.set(key, { ...draft });
    }
    if (this.offline) {
      return "queued"; // probing on every keystroke would just stall the UI
    }
    const raced = this.flushing !== null;
    await this.flush();
    if (raced && this.pending.has(key) && !this.outcomes.has(key)) {
      // The drain already in flight may have aborted before reaching
      // this entry, so give it one fresh pass.
      await this.flush();
    }
    return this.outcomes.get(key) ?? "queued";
  }

  /** Retry everything still pending. Safe to call at any time. */
  flush(): Promise<void> {
    if (this.flushing === null) {
      this.flushing = this.drain().finally(() => {
        this.flushing = null;
      });
    }
    return this.flushing;
  }

  private async drain(): Promise<void> {
    while (this.pending.size > 0) {
      const next = this.pending.entries().next();
      if (next.done) {
        break;
      }
      const [key, draft] = next.value;
      try {
        await this.client.submitJudgment(draft);
        this.offline = false;
        this.pending.delete(key);
        this.settle(key, draft, "delivered");
      } catch (err) {
        if (err instanceof ServiceError) {
          // The server answered: a duplicate means the judgment already
          // landed (e.g. a response lost in transit), anything else is a
          // hard rejection. Neither is retried.
          this.offline = false;
          this.pending.delete(key);
          const outcome = err.code === "duplicate_judgment" ? "duplicate" : "rejected";
          this.settle(key, draft, outcome, err);
        } else {
          this.offline = true;
          return; // unreachable service: keep the rest for later
        }
      }
    }
  }

  private settle(
    key: string,
    draft: JudgmentDraft,
    outcome: SettledOutcome,
    error?: ServiceError,
  ): void {
    this.outcomes.set(key, outcome);
    this.onSettled?.(draft, outcome, error);
  }
}
