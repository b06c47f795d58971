/** Wire types for the gateway's JSON, one interface per payload. */

export interface DocNode {
  name: string;
  action: string;
  instruction: string;
  transitions: string[];
  transition_question: string;
  transition_choices: string[];
  boolean_condition: string;
  condition_interjection: string;
  user_instruction_transitions: string[];
  category: string;
}

export type EdgeKind =
  | "standard"
  | "function_call"
  | "return"
  | "wildcard"
  | "variable"
  | "interjection";

export interface DocEdge {
  from: string;
  to: string;
  kind: EdgeKind;
  label: string;
}

export interface GraphDocument {
  version: number;
  start_node: string;
  callables: Record<string, unknown>;
  nodes: DocNode[];
  edges: DocEdge[];
}

export interface TranscriptTurn {
  node: string;
  user: string;
  agent: string;
}

export interface SessionState {
  session_id: string;
  last_node: string;
  visit_log: string[];
  transcript: TranscriptTurn[];
  stack_depth: number;
  variables?: Record<string, string>;
}

export interface ReplyResult {
  reply: string;
  node: string;
  state: SessionState;
}

export interface SimulatedTurn {
  text: string;
  index: number;
}
