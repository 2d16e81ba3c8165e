import { afterEach, describe, expect, it, vi } from "vitest";

import { AnnotationClient, type FetchLike } from "../src/api.js";
import { JudgeFlow, renderUsageContext } from "../src/judge.js";
import { JudgmentQueue } from "../src/queue.js";
import type { Usage } from "../src/types.js";
import { FakeAnnotationService } from "./fakeservice.js";
import { parseTsv } from "./tsv.js";

function deferred(): { promise: Promise<void>; resolve: () => void } {
  let resolve!: () => void;
  const promise = new Promise<void>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

interface Rig {
  service: FakeAnnotationService;
  client: AnnotationClient;
  queue: JudgmentQueue;
  flow: JudgeFlow;
  root: HTMLElement;
  keyListener: (event: KeyboardEvent) => void;
}

const rigs: Rig[] = [];

function setup(options: { service?: FakeAnnotationService; fetch?: FetchLike } = {}): Rig {
  const service = options.service ?? new FakeAnnotationService();
  const client = new AnnotationClient(
    "http://svc",
    service.projectId,
    options.fetch ?? service.fetch,
  );
  const queue = new JudgmentQueue(client);
  const root = document.createElement("div");
  document.body.appendChild(root);
  const flow = new JudgeFlow(client, queue, "ann1", root);
  const keyListener = (event: KeyboardEvent) => flow.handleKey(event);
  window.addEventListener("keydown", keyListener);
  const rig = { service, client, queue, flow, root, keyListener };
  rigs.push(rig);
  return rig;
}

afterEach(() => {
  for (const rig of rigs.splice(0)) {
    window.removeEventListener("keydown", rig.keyListener);
    rig.root.remove();
  }
});

function pressKey(key: string, init: KeyboardEventInit = {}): void {
  window.dispatchEvent(new KeyboardEvent("keydown", { key, ...init }));
}

describe("renderUsageContext", () => {
  const usage: Usage = {
    identifier: "w-C1-0",
    lemma: "bank",
    context: "they fished from the grassy bank",
    indexes_target_token: 5,
    grouping: 1,
  };

  it("wraps exactly the target token in a mark", () => {
    const block = renderUsageContext(usage);

    const marks = block.querySelectorAll("mark.target-token");
    expect(marks).toHaveLength(1);
    expect(marks[0]?.textContent).toBe("bank");
    expect(block.textContent).toBe("they fished from the grassy bank");
  });

  it("keeps the sentence intact when the index is out of range", () => {
    const block = renderUsageContext({ ...usage, indexes_target_token: 99 });

    expect(block.querySelector("mark")).toBeNull();
    expect(block.textContent).toBe("they fished from the grassy bank");
  });
});

describe("JudgeFlow", () => {
  it("renders both contexts, the rating scale, and the progress counter", async () => {
    const { flow, root } = setup();

    await flow.start();

    expect(root.querySelector(".pair-lemma")?.textContent).toBe("bank");
    expect(root.querySelectorAll(".usage")).toHaveLength(2);
    expect(root.querySelectorAll("mark.target-token")).toHaveLength(2);
    const labels = [...root.querySelectorAll("button.rating")].map(
      (button) => button.textContent,
    );
    expect(labels).toEqual([
      "4 Identical",
      "3 Closely Related",
      "2 Distantly Related",
      "1 Unrelated",
      "0 Cannot decide",
    ]);
    const abstain = root.querySelector("button.abstain");
    expect(abstain?.getAttribute("data-rating")).toBe("0");
    expect(root.querySelector(".progress")?.textContent).toBe("0 / 5 judged");
  });

  it("round-trips a keyboard judgment into the exported judgments.tsv", async () => {
    const { service, client, flow, root } = setup();
    await flow.start();
    const pair = flow.current!;

    pressKey("3");
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));

    expect(service.judgments[0]).toEqual({
      identifier1: pair.usage1.identifier,
      identifier2: pair.usage2.identifier,
      annotator: "ann1",
      judgment: 3,
      comment: "",
    });

    const exported = await client.exportWug("bank");
    const rows = parseTsv(exported.contents.judgments ?? "");
    expect(rows).toContainEqual({
      identifier1: pair.usage1.identifier,
      identifier2: pair.usage2.identifier,
      annotator: "ann1",
      judgment: "3",
      comment: "",
    });

    await vi.waitFor(() =>
      expect(root.querySelector(".progress")?.textContent).toBe("1 / 5 judged"),
    );
  });

  it("posts an abstain for the 0 key without rewriting it", async () => {
    const { service, flow } = setup();
    await flow.start();

    pressKey("0");
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));

    expect(service.judgments[0]?.judgment).toBe(0);
  });

  it("posts the clicked scale button's rating verbatim", async () => {
    const { service, flow, root } = setup();
    await flow.start();

    (root.querySelector('button[data-rating="1"]') as HTMLButtonElement).click();
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));

    expect(service.judgments[0]?.judgment).toBe(1);
  });

  it("ignores keys typed into form fields and chorded keys", async () => {
    const { service, flow } = setup();
    await flow.start();

    const input = document.createElement("input");
    document.body.appendChild(input);
    input.dispatchEvent(new KeyboardEvent("keydown", { key: "4", bubbles: true }));
    pressKey("4", { ctrlKey: true });
    pressKey("x");
    await new Promise((r) => setTimeout(r, 10));

    expect(service.judgments).toHaveLength(0);
    input.remove();
  });

  it("shows the per-target round state when no pair is left", async () => {
    const { service, flow, root } = setup();
    await flow.start();

    while (flow.current !== null) {
      await flow.rate(4);
    }

    expect(service.judgments).toHaveLength(5);
    expect(root.querySelector(".round-complete")?.textContent).toBe(
      "All targets complete",
    );
    const row = root.querySelector('tr[data-lemma="bank"]');
    expect(row?.textContent).toContain("5 / 5 judged");
    expect(row?.textContent).toContain("complete");
  });

  it("does not re-render a pair whose judgment is still in flight", async () => {
    const gate = deferred();
    const service = new FakeAnnotationService();
    const slowPost: FetchLike = async (url, init) => {
      if ((init?.method ?? "GET") === "POST" && url.includes("/judgments")) {
        await gate.promise;
      }
      return service.fetch(url, init);
    };
    const { flow, root } = setup({ service, fetch: slowPost });

    await flow.start();
    const first = flow.current!;
    const done = flow.rate(4);
    await new Promise((r) => setTimeout(r, 10));
    gate.resolve();
    await done;

    expect(service.judgments).toHaveLength(1);
    const shown = [...root.querySelectorAll(".usage")]
      .map((el) => (el as HTMLElement).dataset.identifier ?? "")
      .sort();
    const judged = [first.usage1.identifier, first.usage2.identifier].sort();
    expect(shown).toHaveLength(2);
    expect(shown).not.toEqual(judged); // moved past the pair just rated
  });

  it("keeps a judgment through an outage and retries from the offline state", async () => {
    const { service, flow, root } = setup();
    await flow.start();

    service.netFailures = 10;
    await flow.rate(4);

    expect(root.querySelector(".offline")?.textContent).toContain(
      "1 judgment is queued",
    );
    expect(service.judgments).toHaveLength(0);

    service.netFailures = 0;
    (root.querySelector("button.retry") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(service.judgments).toHaveLength(1));
    await vi.waitFor(() => expect(root.querySelector(".usage")).not.toBeNull());

    expect(service.judgments[0]?.judgment).toBe(4);
    expect(service.judgmentCountFor(
      service.judgments[0]!.identifier1,
      service.judgments[0]!.identifier2,
    )).toBe(1);
  });

  it("surfaces a duplicate rejection instead of hiding it", async () => {
    const { service, client, flow, root } = setup();
    await flow.start();
    const pair = flow.current!;

    // another session delivers the same pair first
    await client.submitJudgment({
      identifier1: pair.usage1.identifier,
      identifier2: pair.usage2.identifier,
      annotator: "ann1",
      judgment: 4,
      comment: "",
    });

    await flow.rate(2);

    expect(service.judgmentCountFor(pair.usage1.identifier, pair.usage2.identifier)).toBe(1);
    expect(root.querySelector(".notice")?.textContent).toContain(
      "already had a judgment",
    );
    expect(root.querySelectorAll(".usage")).toHaveLength(2); // moved on to the next pair
  });
});
