// Operator console: inspect the current constraints and override them.
// Server-authoritative: nothing updates optimistically; a rejected edit
// shows each issue inline and a network failure shows a retry banner.

import { NetworkError } from "./api.js";
import type { ApiClient } from "./api.js";
import type { ConstraintSetDto } from "./types.js";

export class OperatorConsole {
  private lowest: HTMLInputElement;
  private highest: HTMLInputElement;
  private color: HTMLInputElement;
  private issuesBox: HTMLElement;
  private banner: HTMLElement;
  private status: HTMLElement;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly root: HTMLElement,
    private readonly onAccepted?: () => void,
  ) {
    const doc = root.ownerDocument;
    const field = (label: string, name: string): HTMLInputElement => {
      const wrap = doc.createElement("label");
      wrap.textContent = label;
      const input = doc.createElement("input");
      input.name = name;
      wrap.append(input);
      root.append(wrap);
      return input;
    };
    this.lowest = field("lowest price", "lowest_price");
    this.highest = field("highest price", "highest_price");
    this.color = field("color", "color");

    const apply = doc.createElement("button");
    apply.type = "button";
    apply.textContent = "apply overrides";
    apply.addEventListener("click", () => void this.submit());
    root.append(apply);

    this.status = doc.createElement("p");
    this.status.className = "console-status";
    this.issuesBox = doc.createElement("ul");
    this.issuesBox.className = "console-issues";
    this.banner = doc.createElement("div");
    this.banner.className = "console-banner";
    this.banner.hidden = true;
    const retry = doc.createElement("button");
    retry.type = "button";
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.submit());
    this.banner.append(doc.createTextNode("could not reach the server "), retry);
    root.append(this.status, this.issuesBox, this.banner);
  }

  /** Populate the form with the currently effective constraints. */
  showCurrent(constraints: ConstraintSetDto | null): void {
    this.lowest.value = constraints?.lowest_price?.toString() ?? "";
    this.highest.value = constraints?.highest_price?.toString() ?? "";
    this.color.value = constraints?.color ?? "";
  }

  private edited(): Partial<ConstraintSetDto> {
    const body: Partial<ConstraintSetDto> = {};
    if (this.lowest.value.trim() !== "") body.lowest_price = Number(this.lowest.value);
    if (this.highest.value.trim() !== "") body.highest_price = Number(this.highest.value);
    if (this.color.value.trim() !== "") body.color = this.color.value.trim();
    return body;
  }

  async submit(): Promise<void> {
    this.banner.hidden = true;
    try {
      const result = await this.api.putConstraints(this.sessionId, this.edited());
      this.issuesBox.textContent = "";
      if (result.outcome === "accepted") {
        this.status.textContent = "overrides accepted";
        this.onAccepted?.();
      } else {
        this.status.textContent = "overrides rejected";
        for (const issue of result.issues) {
          const li = this.root.ownerDocument.createElement("li");
          li.className = "issue";
          li.dataset.code = issue.code;
          // the server's message, word for word
          li.textContent = `${issue.code}: ${issue.message}`;
          this.issuesBox.append(li);
        }
      }
    } catch (err) {
      if (err instanceof NetworkError) {
        // no state change; the banner offers a retry
        this.banner.hidden = false;
        return;
      }
      throw err;
    }
  }
}
