/** Node inspector: every field of the selected node, verbatim. */

import type { DocNode } from "./types.js";

function formatValue(value: unknown): string {
  if (typeof value === "string") return value;
  return JSON.stringify(value);
}

/** Fill `container` with a definition list of the node's raw fields. The
 * keys come straight from the document object, so nothing is derived,
 * renamed, or dropped. */
export function renderInspector(container: HTMLElement, node: DocNode | null): void {
  container.textContent = "";
  if (node === null) {
    const hint = document.createElement("p");
    hint.className = "inspector-empty";
    hint.textContent = "Click a node to inspect it.";
    container.appendChild(hint);
    return;
  }
  const heading = document.createElement("h2");
  heading.textContent = node.name;
  container.appendChild(heading);

  const list = document.createElement("dl");
  list.className = "inspector-fields";
  for (const [key, value] of Object.entries(node)) {
    const term = document.createElement("dt");
    term.textContent = key;
    const detail = document.createElement("dd");
    detail.textContent = formatValue(value);
    detail.dataset.field = key;
    list.appendChild(term);
    list.appendChild(detail);
  }
  container.appendChild(list);
}
