import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { Studio } from "../src/studio.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const DATA = resolve(HERE, "../../src/autogram/data");
const PORT = 8141;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let storeDir: string;

async function waitForGateway(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt += 1) {
    try {
      const response = await fetch(`${BASE}/graph`);
      if (response.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("gateway never came up");
}

beforeAll(async () => {
  storeDir = mkdtempSync(join(tmpdir(), "studio-e2e-"));
  server = spawn(
    "autogram",
    [
      "serve",
      join(DATA, "tutor_bot.csv"),
      "--config", join(DATA, "tutor_config.json"),
      "--scripted", join(DATA, "tutor_fixture.json"),
      "--store", storeDir,
      "--port", String(PORT),
    ],
    { stdio: "ignore" },
  );
  await waitForGateway();
});

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(storeDir, { recursive: true, force: true });
});

describe("studio against a live scripted gateway", () => {
  it("renders, replies, inspects, and simulates end to end", async () => {
    const client = new GatewayClient(BASE);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const studio = await Studio.mount(root, client);

    const drawn = [...root.querySelectorAll("g.node")].map(
      (g) => g.getAttribute("data-name"),
    );
    expect(drawn.sort()).toEqual(studio.doc.nodes.map((n) => n.name).sort());
    expect(drawn).toHaveLength(7);
    expect(root.querySelector(".node.highlighted")).toBeNull();

    await studio.send("hello");
    expect(studio.transcript.entries).toHaveLength(2);
    expect(studio.transcript.entries[0]).toEqual({
      speaker: "user",
      text: "hello",
    });
    expect(studio.transcript.entries[1]?.text).toBe(
      "Welcome! I am your practice tutor. Say the word and I will quiz you.",
    );
    const reported = await client.state(studio.sessionId);
    expect(reported.last_node).toBe("intro");
    expect(studio.highlighted).toBe(reported.last_node);
    expect(
      root.querySelector(".node.highlighted")?.getAttribute("data-name"),
    ).toBe("intro");

    const target = studio.doc.nodes.find((n) => n.name === "ask_question");
    expect(target).toBeDefined();
    const group = root.querySelector('g.node[data-name="ask_question"]');
    group?.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    for (const [key, value] of Object.entries(target ?? {})) {
      const cell = root.querySelector(`dd[data-field="${key}"]`);
      const expected = typeof value === "string" ? value : JSON.stringify(value);
      expect(cell?.textContent).toBe(expected);
    }

    await studio.simulate();
    expect(studio.transcript.entries).toHaveLength(4);
    expect(studio.transcript.entries[2]).toEqual({
      speaker: "sim",
      text: "Quiz me, please!",
    });
    expect(studio.transcript.entries[3]?.text).toBe("What is 6 times 7?");
    expect(root.querySelector(".turn-sim .turn-text")?.textContent).toBe(
      "Quiz me, please!",
    );
    expect(studio.highlighted).toBe("ask_question");
    expect(
      root.querySelector(".node.highlighted")?.getAttribute("data-name"),
    ).toBe("ask_question");
  });
});
