/** The studio proper: graph view, inspector, transcript, and composer wired
 * to one gateway session. */

import { GatewayClient, GatewayError } from "./api.js";
import { GraphView } from "./graphView.js";
import { renderInspector } from "./inspector.js";
import { categoriesOf } from "./layout.js";
import { TranscriptView } from "./transcript.js";
import type { DocNode, GraphDocument, SessionState } from "./types.js";

const SCHEMA_VERSION = 1;

export class Studio {
  client: GatewayClient;
  doc: GraphDocument;
  sessionId: string;
  graphView: GraphView;
  transcript: TranscriptView;
  selected: DocNode | null = null;
  highlighted: string | null = null;

  private inspectorPane: HTMLElement;
  private input!: HTMLInputElement;
  private sessionLabel: HTMLElement;

  private constructor(
    root: HTMLElement,
    client: GatewayClient,
    doc: GraphDocument,
    state: SessionState,
  ) {
    this.client = client;
    this.doc = doc;
    this.sessionId = state.session_id;

    root.textContent = "";
    const header = document.createElement("header");
    header.className = "studio-header";
    const title = document.createElement("h1");
    title.textContent = "Autogram Studio";
    this.sessionLabel = document.createElement("span");
    this.sessionLabel.className = "session-label";
    this.sessionLabel.textContent = `session ${this.sessionId}`;
    header.appendChild(title);
    header.appendChild(this.sessionLabel);
    header.appendChild(this.buildCategoryPicker(doc));
    root.appendChild(header);

    const main = document.createElement("main");
    main.className = "studio-main";
    const graphPane = document.createElement("section");
    graphPane.className = "graph-pane";
    this.inspectorPane = document.createElement("aside");
    this.inspectorPane.className = "inspector-pane";
    main.appendChild(graphPane);
    main.appendChild(this.inspectorPane);
    root.appendChild(main);

    const transcriptPane = document.createElement("section");
    transcriptPane.className = "transcript-pane";
    root.appendChild(transcriptPane);
    root.appendChild(this.buildComposer());

    this.graphView = new GraphView(graphPane, doc, {
      onSelect: (node) => this.select(node),
    });
    this.transcript = new TranscriptView(transcriptPane);
    renderInspector(this.inspectorPane, null);

    for (const turn of state.transcript) {
      if (turn.user) this.transcript.add({ speaker: "user", text: turn.user });
      this.transcript.add({ speaker: "agent", text: turn.agent, node: turn.node });
    }
    this.setHighlight(state.last_node || null);
  }

  /** Fetch the document, open a session, and mount the full studio. */
  static async mount(root: HTMLElement, client: GatewayClient): Promise<Studio> {
    const doc = await client.graph();
    if (doc.version !== SCHEMA_VERSION) {
      const banner = document.createElement("div");
      banner.className = "version-banner";
      banner.textContent =
        `This studio understands graph documents of version ${SCHEMA_VERSION}, ` +
        `but the gateway serves version ${doc.version}.`;
      root.textContent = "";
      root.appendChild(banner);
      throw new Error("schema version mismatch");
    }
    const state = await client.createSession();
    return new Studio(root, client, doc, state);
  }

  select(node: DocNode): void {
    this.selected = node;
    renderInspector(this.inspectorPane, node);
  }

  setHighlight(name: string | null): void {
    this.highlighted = name;
    this.graphView.setHighlight(name);
  }

  /** Send one user turn, then move the highlight to what /state reports. */
  async send(text: string, speaker: "user" | "sim" = "user"): Promise<void> {
    this.transcript.clearError();
    try {
      const result = await this.client.reply(this.sessionId, text);
      this.transcript.add({ speaker, text });
      this.transcript.add({ speaker: "agent", text: result.reply, node: result.node });
      const state = await this.client.state(this.sessionId);
      this.setHighlight(state.last_node || null);
      this.input.value = "";
    } catch (err) {
      if (err instanceof GatewayError) {
        this.transcript.showError(`${err.status}: ${err.message}`);
        return;
      }
      throw err;
    }
  }

  /** Sample a user turn from the gateway and play it as a synthetic reply. */
  async simulate(): Promise<void> {
    this.transcript.clearError();
    let text: string;
    try {
      const sampled = await this.client.simulateUser(this.sessionId);
      text = sampled.text;
    } catch (err) {
      if (err instanceof GatewayError) {
        this.transcript.showError(`${err.status}: ${err.message}`);
        return;
      }
      throw err;
    }
    await this.send(text, "sim");
  }

  private buildCategoryPicker(doc: GraphDocument): HTMLElement {
    const picker = document.createElement("select");
    picker.className = "category-picker";
    const all = document.createElement("option");
    all.value = "";
    all.textContent = "all categories";
    picker.appendChild(all);
    for (const category of categoriesOf(doc)) {
      const option = document.createElement("option");
      option.value = category;
      option.textContent = category;
      picker.appendChild(option);
    }
    picker.addEventListener("change", () => {
      this.graphView.setCategory(picker.value);
    });
    return picker;
  }

  private buildComposer(): HTMLElement {
    const composer = document.createElement("form");
    composer.className = "composer";
    this.input = document.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Say something…";
    const send = document.createElement("button");
    send.type = "submit";
    send.textContent = "Send";
    const simulate = document.createElement("button");
    simulate.type = "button";
    simulate.className = "simulate-button";
    simulate.textContent = "Simulate user";
    composer.appendChild(this.input);
    composer.appendChild(send);
    composer.appendChild(simulate);
    composer.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.send(this.input.value);
    });
    simulate.addEventListener("click", () => {
      void this.simulate();
    });
    return composer;
  }
}
