/** Static layered layout for a graph document, computed client-side.
 *
 * Nodes are ranked by breadth-first depth from the start node, one column
 * per rank. Edges that point to the same or an earlier rank are flagged as
 * back edges so the view can route them around the columns instead of
 * through them.
 */

import type { DocEdge, DocNode, GraphDocument } from "./types.js";

export interface PlacedNode {
  node: DocNode;
  x: number;
  y: number;
  width: number;
  height: number;
  layer: number;
}

export interface RoutedEdge {
  edge: DocEdge;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  back: boolean;
  self: boolean;
}

export interface GraphLayout {
  nodes: PlacedNode[];
  edges: RoutedEdge[];
  width: number;
  height: number;
}

const NODE_HEIGHT = 36;
const COLUMN_PITCH = 230;
const ROW_PITCH = 72;
const MARGIN = 24;

function nodeWidth(name: string): number {
  return Math.min(Math.max(name.length * 8 + 24, 90), 210);
}

/** Nodes to render under a category filter; empty filter keeps everything. */
export function filterNodes(doc: GraphDocument, category: string): DocNode[] {
  if (!category) return doc.nodes;
  return doc.nodes.filter((n) => n.category === category);
}

/** Distinct non-empty categories in document order. */
export function categoriesOf(doc: GraphDocument): string[] {
  const seen: string[] = [];
  for (const node of doc.nodes) {
    if (node.category && !seen.includes(node.category)) seen.push(node.category);
  }
  return seen;
}

function rankNodes(nodes: DocNode[], edges: DocEdge[], start: string): Map<string, number> {
  const kept = new Set(nodes.map((n) => n.name));
  const outgoing = new Map<string, string[]>();
  for (const edge of edges) {
    if (!kept.has(edge.from) || !kept.has(edge.to)) continue;
    const targets = outgoing.get(edge.from) ?? [];
    targets.push(edge.to);
    outgoing.set(edge.from, targets);
  }

  const layer = new Map<string, number>();
  const queue: string[] = [];
  const roots = kept.has(start) ? [start] : [];
  for (const name of roots) {
    layer.set(name, 0);
    queue.push(name);
  }
  // disconnected or filtered-away-start nodes become extra depth-0 roots
  const enqueueRemaining = () => {
    for (const node of nodes) {
      if (!layer.has(node.name)) {
        layer.set(node.name, 0);
        queue.push(node.name);
        return true;
      }
    }
    return false;
  };
  if (queue.length === 0) enqueueRemaining();

  while (queue.length > 0) {
    const name = queue.shift() as string;
    const depth = layer.get(name) as number;
    for (const target of outgoing.get(name) ?? []) {
      if (!layer.has(target)) {
        layer.set(target, depth + 1);
        queue.push(target);
      }
    }
    if (queue.length === 0) enqueueRemaining();
  }
  return layer;
}

/** Compute the full static layout for the document, honoring the filter. */
export function layoutGraph(doc: GraphDocument, category = ""): GraphLayout {
  const nodes = filterNodes(doc, category);
  const kept = new Set(nodes.map((n) => n.name));
  const edges = doc.edges.filter((e) => kept.has(e.from) && kept.has(e.to));
  const layers = rankNodes(nodes, edges, doc.start_node);

  const rowOf = new Map<string, number>();
  const countPerLayer = new Map<number, number>();
  const placed = new Map<string, PlacedNode>();
  const placedList: PlacedNode[] = [];
  const ordered = [...nodes].sort(
    (a, b) => (layers.get(a.name) ?? 0) - (layers.get(b.name) ?? 0),
  );
  for (const node of ordered) {
    const layer = layers.get(node.name) ?? 0;
    const row = countPerLayer.get(layer) ?? 0;
    countPerLayer.set(layer, row + 1);
    rowOf.set(node.name, row);
    const width = nodeWidth(node.name);
    const pn: PlacedNode = {
      node,
      x: MARGIN + layer * COLUMN_PITCH,
      y: MARGIN + row * ROW_PITCH,
      width,
      height: NODE_HEIGHT,
      layer,
    };
    placed.set(node.name, pn);
    placedList.push(pn);
  }

  const routed: RoutedEdge[] = [];
  for (const edge of edges) {
    const source = placed.get(edge.from) as PlacedNode;
    const target = placed.get(edge.to) as PlacedNode;
    const self = edge.from === edge.to;
    const back = !self && target.layer <= source.layer;
    if (self) {
      routed.push({
        edge,
        x1: source.x + source.width,
        y1: source.y + source.height / 2,
        x2: source.x + source.width / 2,
        y2: source.y,
        back: false,
        self: true,
      });
    } else if (back) {
      routed.push({
        edge,
        x1: source.x + source.width / 2,
        y1: source.y + source.height,
        x2: target.x + target.width / 2,
        y2: target.y + target.height,
        back: true,
        self: false,
      });
    } else {
      routed.push({
        edge,
        x1: source.x + source.width,
        y1: source.y + source.height / 2,
        x2: target.x,
        y2: target.y + target.height / 2,
        back: false,
        self: false,
      });
    }
  }

  const width =
    Math.max(0, ...placedList.map((p) => p.x + p.width)) + MARGIN;
  const height =
    Math.max(0, ...placedList.map((p) => p.y + p.height)) + MARGIN + 40;
  return { nodes: placedList, edges: routed, width, height };
}
