import { AnnotationClient, ServiceError } from "./api.js";
import { GraphView } from "./graph.js";
import { JudgeFlow } from "./judge.js";
import { JudgmentQueue } from "./queue.js";

// App shell: reads the connection form, wires one annotator session to
// the judging panel and the graph panel, and keeps retrying queued
// judgments in the background. All decisions live in the modules above.

function field(id: string): HTMLInputElement {
  const node = document.getElementById(id);
  if (!(node instanceof HTMLInputElement)) {
    throw new Error(`missing input #${id}`);
  }
  return node;
}

function panel(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

function flash(message: string): void {
  panel("flash").textContent = message;
}

interface Session {
  flow: JudgeFlow;
  queue: JudgmentQueue;
  client: AnnotationClient;
  graph: GraphView;
  lemma: string;
  keyListener: (event: KeyboardEvent) => void;
  flushTimer: number;
}

let session: Session | null = null;

function teardown(): void {
  if (session === null) {
    return;
  }
  window.removeEventListener("keydown", session.keyListener);
  window.clearInterval(session.flushTimer);
  session = null;
}

async function connect(): Promise<void> {
  teardown();
  flash("");
  const client = new AnnotationClient(
    field("service-url").value,
    field("project-id").value,
  );
  const queue = new JudgmentQueue(client, (draft, outcome, error) => {
    if (outcome === "duplicate") {
      flash(`Already judged: ${draft.identifier1} / ${draft.identifier2}`);
    } else if (outcome === "rejected" && error !== undefined) {
      flash(`Rejected (${error.code}): ${error.message}`);
    }
  });
  const flow = new JudgeFlow(client, queue, field("annotator").value, panel("pair"));
  const graph = new GraphView(panel("graph"));
  const lemma = field("lemma").value;

  const keyListener = (event: KeyboardEvent) => flow.handleKey(event);
  window.addEventListener("keydown", keyListener);
  const flushTimer = window.setInterval(() => {
    void queue.flush();
  }, 5000);
  session = { flow, queue, client, graph, lemma, keyListener, flushTimer };

  await flow.start();
  await refreshGraph();
}

async function refreshGraph(): Promise<void> {
  if (session === null) {
    return;
  }
  try {
    session.graph.setLayout(await session.client.wug(session.lemma));
  } catch (err) {
    flash(err instanceof ServiceError ? `${err.code}: ${err.message}` : "Graph fetch failed.");
  }
}

async function advanceRound(): Promise<void> {
  if (session === null) {
    return;
  }
  try {
    const status = await session.client.advance();
    flash(`Advanced to round ${status.round}.`);
    await session.flow.start();
    await refreshGraph();
  } catch (err) {
    flash(err instanceof ServiceError ? `${err.code}: ${err.message}` : "Advance failed.");
  }
}

async function showExport(): Promise<void> {
  if (session === null) {
    return;
  }
  try {
    const exported = await session.client.exportWug(session.lemma);
    const box = panel("export");
    box.replaceChildren();
    for (const [name, content] of Object.entries(exported.contents)) {
      const details = document.createElement("details");
      const summary = document.createElement("summary");
      summary.textContent = `${name} (${exported.files[name] ?? ""})`;
      details.appendChild(summary);
      const pre = document.createElement("pre");
      pre.textContent = content;
      details.appendChild(pre);
      box.appendChild(details);
    }
  } catch (err) {
    flash(err instanceof ServiceError ? `${err.code}: ${err.message}` : "Export failed.");
  }
}

function bind(): void {
  const form = document.getElementById("connect");
  if (form instanceof HTMLFormElement) {
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void connect();
    });
  }
  panel("refresh-graph").addEventListener("click", () => void refreshGraph());
  panel("advance-round").addEventListener("click", () => void advanceRound());
  panel("show-export").addEventListener("click", () => void showExport());
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", bind);
} else {
  bind();
}
