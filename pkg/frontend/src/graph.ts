import type { LayoutNode, WugLayout } from "./types.js";

export type WugViewName = "full" | "C1" | "C2";

export const WUG_VIEWS: WugViewName[] = ["full", "C1", "C2"];

/**
 * The node-induced subgraph for a view: period views keep exactly the
 * nodes of that period and the edges with both endpoints kept. The
 * full view returns the layout unchanged. Coordinates come from the
 * server and are never recomputed here.
 */
export function induceView(layout: WugLayout, view: WugViewName): WugLayout {
  if (view === "full") {
    return layout;
  }
  const nodes = layout.nodes.filter((node) => node.period === view);
  const kept = new Set(nodes.map((node) => node.id));
  const edges = layout.edges.filter(
    (edge) => kept.has(edge.source) && kept.has(edge.target),
  );
  return { lemma: layout.lemma, nodes, edges };
}

export interface LegendRow {
  cluster: number;
  c1: number;
  c2: number;
}

/** Per-cluster usage counts split by period, sorted by cluster id. */
export function legendCounts(layout: WugLayout): LegendRow[] {
  const rows = new Map<number, LegendRow>();
  for (const node of layout.nodes) {
    if (node.cluster === null) {
      continue;
    }
    let row = rows.get(node.cluster);
    if (row === undefined) {
      row = { cluster: node.cluster, c1: 0, c2: 0 };
      rows.set(node.cluster, row);
    }
    if (node.period === "C1") {
      row.c1 += 1;
    } else {
      row.c2 += 1;
    }
  }
  return [...rows.values()].sort((a, b) => a.cluster - b.cluster);
}

export function hasClustering(layout: WugLayout): boolean {
  return layout.nodes.some((node) => node.cluster !== null);
}

const UNCLUSTERED_FILL = "#9a9a9a";

export function clusterColor(cluster: number | null): string {
  if (cluster === null) {
    return UNCLUSTERED_FILL;
  }
  // Golden-angle hue steps keep neighboring cluster ids distinguishable.
  const hue = (cluster * 137) % 360;
  return `hsl(${hue}, 62%, 48%)`;
}

/** Edge stroke: judgments run 1..4 and the darkest gray is the strongest. */
export function edgeShade(weight: number): string {
  const clamped = Math.min(4, Math.max(1, weight));
  const lightness = Math.round(82 - ((clamped - 1) / 3) * 62);
  return `hsl(0, 0%, ${lightness}%)`;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const NODE_RADIUS = 0.05;

/**
 * Renders a server-computed usage graph layout. Everything on screen
 * is a function of the last fetched layout plus the selected view; the
 * view toggle only refilters, it never refetches or moves nodes.
 */
export class GraphView {
  private readonly root: HTMLElement;
  private layout: WugLayout | null = null;
  private view: WugViewName = "full";

  constructor(root: HTMLElement) {
    this.root = root;
  }

  get currentView(): WugViewName {
    return this.view;
  }

  setLayout(layout: WugLayout): void {
    this.layout = layout;
    this.render();
  }

  setView(view: WugViewName): void {
    this.view = view;
    this.render();
  }

  render(): void {
    this.root.replaceChildren();
    if (this.layout === null) {
      return;
    }
    const shown = induceView(this.layout, this.view);

    this.root.appendChild(this.buildControls());

    const contextBox = document.createElement("div");
    contextBox.className = "wug-context";

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("class", "wug-canvas");
    svg.setAttribute("viewBox", "-1.15 -1.15 2.3 2.3");

    const positions = new Map(shown.nodes.map((node) => [node.id, node]));
    for (const edge of shown.edges) {
      const a = positions.get(edge.source);
      const b = positions.get(edge.target);
      if (a === undefined || b === undefined) {
        continue;
      }
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("class", "wug-edge");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("stroke", edgeShade(edge.weight));
      line.setAttribute("stroke-width", String(0.012 + 0.004 * edge.weight));
      line.dataset.source = edge.source;
      line.dataset.target = edge.target;
      line.dataset.weight = String(edge.weight);
      svg.appendChild(line);
    }
    for (const node of shown.nodes) {
      svg.appendChild(this.buildNode(node, contextBox));
    }
    this.root.appendChild(svg);
    this.root.appendChild(contextBox);

    if (hasClustering(this.layout)) {
      // The legend summarizes the whole clustering, so its counts match
      // the exported clusters.tsv no matter which period is displayed.
      this.root.appendChild(this.buildLegend(this.layout));
    } else {
      const notice = document.createElement("div");
      notice.className = "cluster-notice";
      notice.textContent =
        "No clustering yet: colors appear once the first round is advanced.";
      this.root.appendChild(notice);
    }
  }

  private buildControls(): HTMLElement {
    const controls = document.createElement("div");
    controls.className = "wug-controls";
    for (const view of WUG_VIEWS) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = view === this.view ? "view-toggle active" : "view-toggle";
      button.dataset.view = view;
      button.textContent = view === "full" ? "Both periods" : view;
      button.addEventListener("click", () => this.setView(view));
      controls.appendChild(button);
    }
    return controls;
  }

  private buildNode(node: LayoutNode, contextBox: HTMLElement): SVGCircleElement {
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.setAttribute("class", "wug-node");
    circle.setAttribute("cx", String(node.x));
    circle.setAttribute("cy", String(node.y));
    circle.setAttribute("r", String(NODE_RADIUS));
    circle.setAttribute("fill", clusterColor(node.cluster));
    circle.setAttribute(
      "stroke",
      node.period === "C1" ? "#1d3557" : "#6a3e12",
    );
    circle.setAttribute("stroke-width", "0.012");
    circle.dataset.id = node.id;
    circle.dataset.period = node.period;
    if (node.cluster !== null) {
      circle.dataset.cluster = String(node.cluster);
    }
    circle.addEventListener("mouseenter", () => {
      contextBox.textContent = node.text;
    });
    circle.addEventListener("mouseleave", () => {
      contextBox.textContent = "";
    });
    return circle;
  }

  private buildLegend(layout: WugLayout): HTMLElement {
    const legend = document.createElement("div");
    legend.className = "wug-legend";
    for (const row of legendCounts(layout)) {
      const entry = document.createElement("div");
      entry.className = "legend-row";
      entry.dataset.cluster = String(row.cluster);
      entry.dataset.c1 = String(row.c1);
      entry.dataset.c2 = String(row.c2);

      const swatch = document.createElement("span");
      swatch.className = "legend-swatch";
      swatch.style.backgroundColor = clusterColor(row.cluster);
      entry.appendChild(swatch);

      const text = document.createElement("span");
      text.textContent = `cluster ${row.cluster}: C1 ${row.c1}, C2 ${row.c2}`;
      entry.appendChild(text);

      legend.appendChild(entry);
    }
    return legend;
  }
}
