/** SVG rendering of a laid-out graph: one styled path per edge kind, one
 * labeled box per node, click-to-select, and a movable highlight. */

import { layoutGraph } from "./layout.js";
import type { GraphLayout, RoutedEdge } from "./layout.js";
import type { DocNode, GraphDocument } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    el.setAttribute(key, value);
  }
  return el;
}

function edgePath(routed: RoutedEdge): string {
  const { x1, y1, x2, y2 } = routed;
  if (routed.self) {
    // small loop out of the right side and back over the top
    return `M ${x1} ${y1} C ${x1 + 46} ${y1 - 8}, ${x2 + 30} ${y2 - 40}, ${x2} ${y2}`;
  }
  if (routed.back) {
    // dip below both columns so the return path does not cross node boxes
    const dip = Math.max(y1, y2) + 34;
    return `M ${x1} ${y1} C ${x1} ${dip}, ${x2} ${dip}, ${x2} ${y2}`;
  }
  const mid = (x1 + x2) / 2;
  return `M ${x1} ${y1} C ${mid} ${y1}, ${mid} ${y2}, ${x2} ${y2}`;
}

export interface GraphViewOptions {
  onSelect?: (node: DocNode) => void;
}

export class GraphView {
  private container: HTMLElement;
  private doc: GraphDocument;
  private options: GraphViewOptions;
  private nodeBoxes = new Map<string, SVGGElement>();
  private highlighted: string | null = null;
  category = "";

  constructor(container: HTMLElement, doc: GraphDocument, options: GraphViewOptions = {}) {
    this.container = container;
    this.doc = doc;
    this.options = options;
    this.render();
  }

  /** Re-render under a category filter; empty string shows everything. */
  setCategory(category: string): void {
    this.category = category;
    this.render();
  }

  /** Move the current-node highlight; null clears it. */
  setHighlight(name: string | null): void {
    if (this.highlighted !== null) {
      this.nodeBoxes.get(this.highlighted)?.classList.remove("highlighted");
    }
    this.highlighted = name;
    if (name !== null) {
      this.nodeBoxes.get(name)?.classList.add("highlighted");
    }
  }

  private render(): void {
    this.container.textContent = "";
    this.nodeBoxes.clear();
    const layout = layoutGraph(this.doc, this.category);
    if (layout.nodes.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-graph";
      empty.textContent = this.doc.nodes.length === 0
        ? "This document has no nodes."
        : "No nodes match the selected category.";
      this.container.appendChild(empty);
      return;
    }
    this.container.appendChild(this.buildSvg(layout));
    if (this.highlighted !== null) {
      this.nodeBoxes.get(this.highlighted)?.classList.add("highlighted");
    }
  }

  private buildSvg(layout: GraphLayout): SVGSVGElement {
    const svg = svgElement("svg", {
      viewBox: `0 0 ${layout.width} ${layout.height}`,
      width: String(layout.width),
      height: String(layout.height),
      class: "graph-svg",
    });
    svg.appendChild(this.buildDefs());

    const edgeGroup = svgElement("g", { class: "edges" });
    for (const routed of layout.edges) {
      const path = svgElement("path", {
        d: edgePath(routed),
        class: `edge edge-${routed.edge.kind}`,
        fill: "none",
        "marker-end": "url(#arrow)",
        "data-from": routed.edge.from,
        "data-to": routed.edge.to,
      });
      edgeGroup.appendChild(path);
      if (routed.edge.label) {
        const lx = (routed.x1 + routed.x2) / 2;
        const ly = routed.back
          ? Math.max(routed.y1, routed.y2) + 30
          : (routed.y1 + routed.y2) / 2 - 6;
        const label = svgElement("text", {
          x: String(lx),
          y: String(ly),
          class: "edge-label",
          "text-anchor": "middle",
        });
        label.textContent =
          routed.edge.label.length > 28
            ? routed.edge.label.slice(0, 27) + "…"
            : routed.edge.label;
        edgeGroup.appendChild(label);
      }
    }
    svg.appendChild(edgeGroup);

    const nodeGroup = svgElement("g", { class: "nodes" });
    for (const placed of layout.nodes) {
      const group = svgElement("g", {
        class: `node action-${placed.node.action}`,
        "data-name": placed.node.name,
      });
      group.appendChild(
        svgElement("rect", {
          x: String(placed.x),
          y: String(placed.y),
          width: String(placed.width),
          height: String(placed.height),
          rx: "6",
        }),
      );
      const text = svgElement("text", {
        x: String(placed.x + placed.width / 2),
        y: String(placed.y + placed.height / 2 + 4),
        "text-anchor": "middle",
      });
      text.textContent = placed.node.name;
      group.appendChild(text);
      group.addEventListener("click", () => {
        this.options.onSelect?.(placed.node);
      });
      nodeGroup.appendChild(group);
      this.nodeBoxes.set(placed.node.name, group);
    }
    svg.appendChild(nodeGroup);
    return svg;
  }

  private buildDefs(): SVGDefsElement {
    const defs = svgElement("defs");
    const marker = svgElement("marker", {
      id: "arrow",
      viewBox: "0 0 10 10",
      refX: "9",
      refY: "5",
      markerWidth: "7",
      markerHeight: "7",
      orient: "auto-start-reverse",
    });
    marker.appendChild(svgElement("path", { d: "M 0 0 L 10 5 L 0 10 z" }));
    defs.appendChild(marker);
    return defs;
  }
}
