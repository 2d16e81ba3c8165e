import { ServiceError } from "./api.js";
import type { JudgmentQueue } from "./queue.js";
import type {
  NextResponse,
  Progress,
  Rating,
  ScaleEntry,
  ScheduledPair,
  StatusResponse,
  Usage,
} from "./types.js";

interface PairClient {
  nextPair(annotator: string): Promise<NextResponse>;
  status(): Promise<StatusResponse>;
}

const EDIT_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

const KEY_TO_RATING: Record<string, Rating> = {
  "0": 0,
  "1": 1,
  "2": 2,
  "3": 3,
  "4": 4,
};

function samePair(a: ScheduledPair, b: ScheduledPair): boolean {
  const left = [a.usage1.identifier, a.usage2.identifier].sort();
  const right = [b.usage1.identifier, b.usage2.identifier].sort();
  return left[0] === right[0] && left[1] === right[1];
}

/** The usage sentence with the target token wrapped in a <mark>. */
export function renderUsageContext(usage: Usage): HTMLElement {
  const block = document.createElement("div");
  block.className = "usage";
  block.dataset.identifier = usage.identifier;
  block.dataset.grouping = String(usage.grouping);
  const tokens = usage.context.split(" ");
  tokens.forEach((token, index) => {
    if (index > 0) {
      block.appendChild(document.createTextNode(" "));
    }
    if (index === usage.indexes_target_token) {
      const mark = document.createElement("mark");
      mark.className = "target-token";
      mark.textContent = token;
      block.appendChild(mark);
    } else {
      block.appendChild(document.createTextNode(token));
    }
  });
  return block;
}

export interface PairViewState {
  pair: ScheduledPair;
  scale: ScaleEntry[];
  progress: Progress;
  notice: string;
}

/** Rebuild the pair view from fetched state. No stored DOM is reused. */
export function renderPairView(
  root: HTMLElement,
  state: PairViewState,
  onRate: (rating: Rating) => void,
): void {
  root.replaceChildren();

  const lemma = document.createElement("h2");
  lemma.className = "pair-lemma";
  lemma.textContent = state.pair.lemma;
  root.appendChild(lemma);

  const first = renderUsageContext(state.pair.usage1);
  first.dataset.usage = "1";
  root.appendChild(first);
  const second = renderUsageContext(state.pair.usage2);
  second.dataset.usage = "2";
  root.appendChild(second);

  const scaleRow = document.createElement("div");
  scaleRow.className = "scale";
  for (const entry of state.scale) {
    const button = document.createElement("button");
    button.type = "button";
    button.className = entry.rating === 0 ? "rating abstain" : "rating";
    button.dataset.rating = String(entry.rating);
    button.textContent = `${entry.rating} ${entry.label}`;
    button.addEventListener("click", () => onRate(entry.rating));
    scaleRow.appendChild(button);
  }
  root.appendChild(scaleRow);

  const progress = document.createElement("div");
  progress.className = "progress";
  progress.textContent = `${state.progress.judged} / ${state.progress.total_scheduled} judged`;
  root.appendChild(progress);

  appendNotice(root, state.notice);
}

/** Per-target summary shown when the annotator has no open pair left. */
export function renderRoundComplete(
  root: HTMLElement,
  status: StatusResponse,
  notice: string,
): void {
  root.replaceChildren();

  const heading = document.createElement("h2");
  heading.className = "round-complete";
  heading.textContent = status.complete
    ? "All targets complete"
    : `Round ${status.round}: no pairs left for you`;
  root.appendChild(heading);

  const table = document.createElement("table");
  table.className = "target-status";
  for (const [lemma, target] of Object.entries(status.targets)) {
    const row = document.createElement("tr");
    row.dataset.lemma = lemma;
    const cells = [
      lemma,
      `${target.judged_pairs} / ${target.total_scheduled} judged`,
      `${target.unconnected_multicluster_pairs} open cluster pairs`,
      target.complete ? "complete" : "in progress",
    ];
    for (const text of cells) {
      const cell = document.createElement("td");
      cell.textContent = text;
      row.appendChild(cell);
    }
    if (target.flags.length > 0) {
      const cell = document.createElement("td");
      cell.className = "target-flags";
      cell.textContent = target.flags.join(", ");
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  root.appendChild(table);

  appendNotice(root, notice);
}

/** Shown when the service is unreachable; judgments wait in the queue. */
export function renderOffline(
  root: HTMLElement,
  queuedCount: number,
  onRetry: () => void,
): void {
  root.replaceChildren();
  const box = document.createElement("div");
  box.className = "offline";
  box.textContent =
    queuedCount === 1
      ? "Service unreachable. 1 judgment is queued and will be retried."
      : `Service unreachable. ${queuedCount} judgments are queued and will be retried.`;
  root.appendChild(box);

  const retry = document.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  root.appendChild(retry);
}

function appendNotice(root: HTMLElement, notice: string): void {
  if (notice === "") {
    return;
  }
  const box = document.createElement("div");
  box.className = "notice";
  box.textContent = notice;
  root.appendChild(box);
}

/**
 * Drives one annotator through the scheduled pairs: fetch, render,
 * post the chosen rating, repeat. Ratings travel verbatim from the key
 * or button press into the queue; nothing is rewritten on the way.
 *
 * The next pair is fetched while the judgment posts. When the reply
 * still shows the pair just rated (the post had not landed yet), the
 * flow waits for delivery and asks once more.
 */
export class JudgeFlow {
  private readonly client: PairClient;
  private readonly queue: JudgmentQueue;
  private readonly annotator: string;
  private readonly root: HTMLElement;
  private notice = "";
  current: ScheduledPair | null = null;
  private scale: ScaleEntry[] = [];

  constructor(
    client: PairClient,
    queue: JudgmentQueue,
    annotator: string,
    root: HTMLElement,
  ) {
    this.client = client;
    this.queue = queue;
    this.annotator = annotator;
    this.root = root;
  }

  async start(): Promise<void> {
    try {
      const next = await this.client.nextPair(this.annotator);
      await this.present(next);
    } catch (err) {
      this.presentFailure(err);
    }
  }

  handleKey(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && (EDIT_TAGS.has(target.tagName) || target.isContentEditable)) {
      return;
    }
    if (event.altKey || event.ctrlKey || event.metaKey) {
      return;
    }
    const rating = KEY_TO_RATING[event.key];
    if (rating === undefined || this.current === null) {
      return;
    }
    event.preventDefault();
    void this.rate(rating);
  }

  async rate(rating: Rating): Promise<void> {
    const pair = this.current;
    if (pair === null) {
      return;
    }
    this.current = null; // a held-down key must not double-submit
    const delivery = this.queue.submit({
      identifier1: pair.usage1.identifier,
      identifier2: pair.usage2.identifier,
      annotator: this.annotator,
      judgment: rating,
      comment: "",
    });
    try {
      let next = await this.client.nextPair(this.annotator);
      if (next.pair !== null && samePair(next.pair, pair)) {
        await delivery;
        next = await this.client.nextPair(this.annotator);
        if (next.pair !== null && samePair(next.pair, pair)) {
          // still unjudged server-side: the judgment is sitting in the queue
          this.presentOffline();
          return;
        }
      }
      const result = await delivery;
      if (result === "duplicate") {
        this.notice = "The service already had a judgment for that pair.";
      } else if (result === "rejected") {
        this.notice = "The service rejected that judgment.";
      } else if (result === "queued") {
        this.presentOffline();
        return;
      }
      await this.present(next);
    } catch (err) {
      this.presentFailure(err);
    }
  }

  async retry(): Promise<void> {
    await this.queue.flush();
    await this.start();
  }

  private async present(next: NextResponse): Promise<void> {
    this.scale = next.scale;
    if (next.pair === null) {
      this.current = null;
      const status = await this.client.status();
      renderRoundComplete(this.root, status, this.notice);
    } else {
      this.current = next.pair;
      renderPairView(
        this.root,
        {
          pair: next.pair,
          scale: next.scale,
          progress: next.progress,
          notice: this.notice,
        },
        (chosen) => void this.rate(chosen),
      );
    }
    this.notice = "";
  }

  private presentOffline(): void {
    renderOffline(this.root, this.queue.size, () => void this.retry());
  }

  private presentFailure(err: unknown): void {
    if (err instanceof ServiceError) {
      this.root.replaceChildren();
      appendNotice(this.root, `${err.code}: ${err.message}`);
    } else {
      this.presentOffline();
    }
  }
}
