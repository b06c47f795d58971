/** Transcript panel: the running conversation plus an inline error area. */

export type Speaker = "user" | "agent" | "sim";

export interface TranscriptEntry {
  speaker: Speaker;
  text: string;
  node?: string;
}

const SPEAKER_LABEL: Record<Speaker, string> = {
  user: "You",
  agent: "Agent",
  sim: "Simulated user",
};

export class TranscriptView {
  entries: TranscriptEntry[] = [];
  private list: HTMLElement;
  private errorBox: HTMLElement;

  constructor(container: HTMLElement) {
    this.list = document.createElement("div");
    this.list.className = "transcript-list";
    this.errorBox = document.createElement("div");
    this.errorBox.className = "transcript-error";
    this.errorBox.hidden = true;
    container.appendChild(this.list);
    container.appendChild(this.errorBox);
  }

  add(entry: TranscriptEntry): void {
    this.entries.push(entry);
    const row = document.createElement("div");
    row.className = `turn turn-${entry.speaker}`;
    const who = document.createElement("span");
    who.className = "turn-speaker";
    who.textContent = SPEAKER_LABEL[entry.speaker];
    const text = document.createElement("span");
    text.className = "turn-text";
    text.textContent = entry.text;
    row.appendChild(who);
    row.appendChild(text);
    if (entry.node) row.dataset.node = entry.node;
    this.list.appendChild(row);
    this.list.scrollTop = this.list.scrollHeight;
  }

  /** Show a request failure without touching the existing entries. */
  showError(message: string): void {
    this.errorBox.textContent = message;
    this.errorBox.hidden = false;
  }

  clearError(): void {
    this.errorBox.textContent = "";
    this.errorBox.hidden = true;
  }
}
