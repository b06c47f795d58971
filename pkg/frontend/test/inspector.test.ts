import { describe, expect, it } from "vitest";

import { renderInspector } from "../src/inspector.js";
import { docNode } from "./helpers.js";

describe("renderInspector", () => {
  it("shows every document field verbatim, nothing added or dropped", () => {
    const node = docNode({
      name: "ask_question",
      action: "chat",
      instruction: "Ask the student one new arithmetic practice question.",
      transitions: ["answer_right", "answer_wrong"],
      transition_question: "How did the student respond?",
      transition_choices: ["with a correct answer", "with an incorrect answer"],
      user_instruction_transitions: ["Reply with the correct answer."],
      category: "quiz",
    });
    const pane = document.createElement("div");
    renderInspector(pane, node);

    const keys = [...pane.querySelectorAll("dt")].map((t) => t.textContent);
    expect(keys).toEqual(Object.keys(node));

    for (const [key, value] of Object.entries(node)) {
      const cell = pane.querySelector(`dd[data-field="${key}"]`);
      const expected = typeof value === "string" ? value : JSON.stringify(value);
      expect(cell?.textContent).toBe(expected);
    }
  });

  it("shows a hint when nothing is selected", () => {
    const pane = document.createElement("div");
    renderInspector(pane, null);
    expect(pane.textContent).toContain("Click a node");
  });
});
