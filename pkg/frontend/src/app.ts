/** DOM wiring for the editor canvas, preview pane, and replay timeline. */

import { MonitorApi, ApiError } from "./api.js";
import {
  AtomBlock,
  LegBlock,
  RuleCanvas,
  buildRuleSpec,
  canvasIsEmpty,
  canvasProblems,
  emptyCanvas,
} from "./blocks.js";
import { COMPARATORS, Comparator, SIGNALS, Signal } from "./schema.js";
import { ReplaySession } from "./timeline.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

function option(value: string): HTMLOptionElement {
  return el("option", { value }, value);
}

export class EditorApp {
  private canvas: RuleCanvas = emptyCanvas();
  private session: ReplaySession | null = null;
  private playTimer: number | null = null;

  constructor(
    private root: HTMLElement,
    private api: MonitorApi,
  ) {}

  start(): void {
    this.root.replaceChildren(
      el("h1", {}, "Monitoring rule editor"),
      el("div", { id: "editor" }),
      el("h2", {}, "Compiled rule preview"),
      el("pre", { id: "preview", class: "preview" }),
      el("div", { id: "messages", class: "messages" }),
      el("h2", {}, "Replay"),
      el("div", { id: "replay" }),
      el("div", { id: "timeline", class: "timeline" }),
      el("div", { id: "evidence" }),
    );
    this.renderEditor();
    this.renderReplayControls();
  }

  // -- editor -----------------------------------------------------------

  private renderEditor(): void {
    const editor = this.root.querySelector("#editor") as HTMLElement;
    const c = this.canvas;
    const legs: [string, LegBlock][] = [["first", c.first]];
    if (c.then) legs.push(["then", c.then]);

    editor.replaceChildren(
      el(
        "div",
        { class: "rule-head" },
        "rule id ",
        this.input("rule-id", c.ruleId, (v) => (c.ruleId = v)),
        " recipients ",
        this.input("recipients", c.recipients.join(", "), (v) => {
          c.recipients = v.split(",").map((s) => s.trim()).filter(Boolean);
        }),
        " window(s) ",
        this.numberInput("window", c.windowSeconds, (v) => (c.windowSeconds = v)),
        " suppress(s) ",
        this.numberInput("suppress", c.suppressSeconds ?? 0, (v) => {
          c.suppressSeconds = v > 0 ? v : undefined;
        }),
      ),
      ...legs.map(([name, leg]) => this.legBlock(name, leg)),
      el(
        "div",
        { class: "canvas-actions" },
        this.button(
          c.then ? "remove sequence leg" : "then ... (make sequential)",
          () => {
            c.then = c.then ? undefined : { atoms: [], frequency: 1 };
            this.renderEditor();
          },
        ),
        this.button("preview", () => void this.preview(), "preview-btn"),
        this.button("deploy", () => void this.deploy(), "deploy-btn"),
      ),
    );
    this.refreshSubmitState();
  }

  private legBlock(name: string, leg: LegBlock): HTMLElement {
    const rows = leg.atoms.map((atom, i) =>
      el(
        "div",
        { class: "atom-row" },
        this.select(SIGNALS, atom.signal, (v) => (atom.signal = v as Signal)),
        this.select(COMPARATORS, atom.comparator, (v) => {
          atom.comparator = v as Comparator;
        }),
        this.numberInput(`thr-${name}-${i}`, atom.threshold, (v) => {
          atom.threshold = v;
        }, "0.1"),
        this.button("remove", () => {
          leg.atoms.splice(i, 1);
          this.renderEditor();
        }),
      ),
    );
    return el(
      "fieldset",
      { class: "leg" },
      el("legend", {}, name === "first" ? "pattern" : "followed by"),
      ...rows,
      el(
        "div",
        {},
        this.button("add threshold", () => {
          const atom: AtomBlock = { signal: "cgm", comparator: ">", threshold: 13.0 };
          leg.atoms.push(atom);
          this.renderEditor();
        }),
        " at least ",
        this.numberInput(`freq-${name}`, leg.frequency, (v) => (leg.frequency = v)),
        " time(s) in the window",
      ),
    );
  }

  private refreshSubmitState(): void {
    const problems = canvasProblems(this.canvas);
    const deploy = this.root.querySelector(".deploy-btn") as HTMLButtonElement | null;
    const preview = this.root.querySelector(".preview-btn") as HTMLButtonElement | null;
    const disabled = canvasIsEmpty(this.canvas) || problems.length > 0;
    if (deploy) deploy.disabled = disabled;
    if (preview) preview.disabled = disabled;
    this.showMessages(canvasIsEmpty(this.canvas) ? [] : problems);
  }

  private async preview(): Promise<void> {
    try {
      const text = await this.api.previewRule(buildRuleSpec(this.canvas));
      (this.root.querySelector("#preview") as HTMLElement).textContent = text;
      this.showMessages([]);
    } catch (e) {
      this.showMessages([this.describe(e)]);
    }
  }

  private async deploy(): Promise<void> {
    try {
      const text = await this.api.deployRule(buildRuleSpec(this.canvas));
      (this.root.querySelector("#preview") as HTMLElement).textContent = text;
      this.showMessages([`deployed ${this.canvas.ruleId}`]);
    } catch (e) {
      this.showMessages([this.describe(e)]);
    }
  }

  private describe(e: unknown): string {
    if (e instanceof ApiError) return `service: ${e.message}`;
    return String(e);
  }

  private showMessages(messages: string[]): void {
    const box = this.root.querySelector("#messages") as HTMLElement;
    box.replaceChildren(...messages.map((m) => el("div", { class: "message" }, m)));
  }

  // -- replay -------------------------------------------------------------

  private renderReplayControls(): void {
    const replay = this.root.querySelector("#replay") as HTMLElement;
    const patientInput = this.input("patient", "", () => undefined);
    replay.replaceChildren(
      "patient ",
      patientInput,
      this.button("replay", () => {
        void this.runReplay(patientInput.value.trim());
      }),
      this.button("play", () => this.play()),
    );
  }

  private async runReplay(patientId: string): Promise<void> {
    if (!patientId) {
      this.showMessages(["enter a patient id"]);
      return;
    }
    const session = new ReplaySession(patientId, this.api);
    try {
      await session.load();
    } catch (e) {
      this.showMessages([this.describe(e)]);
      return;
    }
    session.cursor = session.lastTick; // show everything until play restarts
    this.session = session;
    this.renderTimeline();
  }

  private play(): void {
    const session = this.session;
    if (!session) return;
    session.cursor = 0;
    if (this.playTimer !== null) window.clearInterval(this.playTimer);
    this.playTimer = window.setInterval(() => {
      session.step();
      this.renderTimeline();
      if (session.finished() && this.playTimer !== null) {
        window.clearInterval(this.playTimer);
        this.playTimer = null;
      }
    }, 100);
  }

  private renderTimeline(): void {
    const session = this.session;
    const box = this.root.querySelector("#timeline") as HTMLElement;
    if (!session) {
      box.replaceChildren();
      return;
    }
    const width = Math.max(1, session.lastTick);
    const markers = session.visibleMarkers().map((m) => {
      const dot = el("span", {
        class: "marker",
        title: `${m.ruleId} at tick ${m.tick}`,
        style: `left: ${(m.tick / width) * 100}%; background: ${m.color}`,
      });
      dot.addEventListener("click", () => this.showEvidence(m.alert));
      return dot;
    });
    const counts = [...session.countsByRule().entries()]
      .map(([rule, n]) => `${rule}: ${n}`)
      .join("  ");
    box.replaceChildren(
      el("div", { class: "track" }, ...markers),
      el("div", { class: "counts" },
        markers.length === 0 ? "no alerts" : counts),
    );
  }

  private showEvidence(alert: {
    rule_id: string;
    raised_at: number;
    evidence: { tick: number; fluent: string; value: string }[];
  }): void {
    const box = this.root.querySelector("#evidence") as HTMLElement;
    box.replaceChildren(
      el("h3", {}, `${alert.rule_id} at tick ${alert.raised_at}`),
      el(
        "ul",
        {},
        ...alert.evidence.map((w) =>
          el("li", {}, `tick ${w.tick}: ${w.fluent} = ${w.value}`),
        ),
      ),
    );
  }

  // -- small controls --------------------------------------------------------

  private input(
    name: string,
    value: string,
    onChange: (v: string) => void,
  ): HTMLInputElement {
    const node = el("input", { name, value });
    node.addEventListener("input", () => {
      onChange(node.value);
      this.refreshSubmitState();
    });
    return node;
  }

  private numberInput(
    name: string,
    value: number,
    onChange: (v: number) => void,
    step = "1",
  ): HTMLInputElement {
    const node = el("input", {
      name,
      type: "number",
      step,
      value: String(value),
    });
    node.addEventListener("input", () => {
      onChange(Number(node.value));
      this.refreshSubmitState();
    });
    return node;
  }

  private select(
    values: readonly string[],
    selected: string,
    onChange: (v: string) => void,
  ): HTMLSelectElement {
    const node = el("select", {}, ...values.map(option));
    node.value = selected;
    node.addEventListener("change", () => {
      onChange(node.value);
      this.refreshSubmitState();
    });
    return node;
  }

  private button(
    label: string,
    onClick: () => void,
    klass = "",
  ): HTMLButtonElement {
    const node = el("button", klass ? { class: klass } : {}, label);
    node.addEventListener("click", (e) => {
      e.preventDefault();
      onClick();
    });
    return node;
  }
}
