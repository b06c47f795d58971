import type { DocEdge, DocNode, GraphDocument } from "../src/types.js";

export function docNode(overrides: Partial<DocNode> & { name: string }): DocNode {
  return {
    action: "chat",
    instruction: "",
    transitions: [],
    transition_question: "",
    transition_choices: [],
    boolean_condition: "",
    condition_interjection: "",
    user_instruction_transitions: [],
    category: "",
    ...overrides,
  };
}

export function docEdge(
  from: string,
  to: string,
  kind: DocEdge["kind"] = "standard",
  label = "",
): DocEdge {
  return { from, to, kind, label };
}

export function graphDoc(
  nodes: DocNode[],
  edges: DocEdge[] = [],
  start = nodes[0]?.name ?? "",
): GraphDocument {
  return { version: 1, start_node: start, callables: {}, nodes, edges };
}
