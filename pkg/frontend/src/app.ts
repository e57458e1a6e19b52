// Experimenter console: session dashboard, trial runner, live monitor, and
// results view, wired to the session service. Commands go over REST with
// optimistic disables; the live monitor runs off the WebSocket stream; the
// trial state machine only ever moves idle -> stimulus -> isi -> idle.

import { LiveStream, ServiceClient, ServiceError } from "./api.js";
import { LiveMonitor } from "./monitor.js";
import { renderResults } from "./results.js";
import { buildSheet } from "./sheet.js";
import { TrialStore, TrialState } from "./store.js";
import type { Reference, SessionInfo, TaskName } from "./types.js";

interface ActiveSession {
  info: SessionInfo;
  isiS: number;
}

function el(tag: string, cls: string, parent: Element): HTMLElement {
  const node = parent.ownerDocument!.createElement(tag);
  node.className = cls;
  parent.appendChild(node);
  return node;
}

export class Console {
  store = new TrialStore();
  private reference: Reference | null = null;
  private sessions = new Map<string, ActiveSession>();
  private active: ActiveSession | null = null;
  private stream: LiveStream | null = null;
  monitor: LiveMonitor | null = null;
  private resync = false;
  private isiTimer: ReturnType<typeof setInterval> | null = null;
  private isiEndsAt = 0;

  // form controls
  private taskSelect!: HTMLSelectElement;
  private participantInput!: HTMLInputElement;
  private seedInput!: HTMLInputElement;
  private repsInput!: HTMLInputElement;
  private isiInput!: HTMLInputElement;
  private setupError!: HTMLElement;
  private badge!: HTMLElement;
  private sessionList!: HTMLElement;

  // runner controls
  private nextButton!: HTMLButtonElement;
  private responseGrid!: HTMLElement;
  private responseButtons: HTMLButtonElement[] = [];
  private progress!: HTMLElement;
  private rtValue!: HTMLElement;
  private completeNote!: HTMLElement;

  private monitorMount!: HTMLElement;
  private resultsMount!: HTMLElement;
  private toasts!: HTMLElement;
  private doc: Document;

  constructor(private root: Element, private client: ServiceClient) {
    this.doc = root.ownerDocument!;
    this.buildDom();
    this.store.subscribe(() => this.refreshControls());
    this.refreshControls();
  }

  // -- layout -----------------------------------------------------------

  private buildDom(): void {
    const setup = el("section", "setup", this.root);
    el("h2", "", setup).textContent = "session";
    const form = el("div", "setup-form", setup);
    this.taskSelect = el("select", "task-select", form) as HTMLSelectElement;
    for (const task of ["patterns", "sliding", "vibro"]) {
      const opt = this.doc.createElement("option");
      opt.value = task;
      opt.textContent = task;
      this.taskSelect.appendChild(opt);
    }
    this.participantInput = this.field(form, "participant", "p01");
    this.seedInput = this.field(form, "seed", "0");
    this.repsInput = this.field(form, "repetitions", "5");
    this.isiInput = this.field(form, "isi s", "2");
    const create = el("button", "create-session", form) as HTMLButtonElement;
    create.textContent = "create session";
    create.addEventListener("click", () => void this.createSession());
    this.setupError = el("div", "setup-error", setup);
    this.badge = el("span", "trial-badge", setup);
    this.sessionList = el("div", "session-list", setup);

    const runner = el("section", "runner", this.root);
    el("h2", "", runner).textContent = "trial";
    this.nextButton = el("button", "next-trial", runner) as HTMLButtonElement;
    this.nextButton.textContent = "next trial";
    this.nextButton.addEventListener("click", () => void this.nextTrial());
    this.progress = el("span", "trial-progress", runner);
    const rt = el("div", "rt-display", runner);
    rt.appendChild(this.doc.createTextNode("RT "));
    this.rtValue = el("span", "rt-value", rt);
    rt.appendChild(this.doc.createTextNode(" s"));
    this.responseGrid = el("div", "response-grid", runner);
    this.completeNote = el("div", "complete-note", runner);

    const monitorSec = el("section", "monitor", this.root);
    el("h2", "", monitorSec).textContent = "live";
    this.monitorMount = el("div", "monitor-mount", monitorSec);

    const resultsSec = el("section", "results", this.root);
    el("h2", "", resultsSec).textContent = "results";
    this.resultsMount = el("div", "results-mount", resultsSec);

    this.toasts = el("div", "toasts", this.root);
  }

  private field(form: Element, label: string, value: string): HTMLInputElement {
    const wrap = el("label", "field", form);
    el("span", "", wrap).textContent = label;
    const input = el("input", "", wrap) as HTMLInputElement;
    input.value = value;
    return input;
  }

  // -- session dashboard --------------------------------------------------

  private validate(): { participant: string; seed: number; reps: number; isi: number } | null {
    const participant = this.participantInput.value.trim();
    const seed = Number(this.seedInput.value);
    const reps = Number(this.repsInput.value);
    const isi = Number(this.isiInput.value);
    let message = "";
    if (participant === "") message = "participant must not be empty";
    else if (!Number.isInteger(seed) || seed < 0) message = "seed must be a non-negative integer";
    else if (!Number.isInteger(reps) || reps < 1) message = "repetitions must be a positive integer";
    else if (!Number.isFinite(isi) || isi < 0) message = "isi must be a non-negative number";
    this.setupError.textContent = message;
    if (message !== "") return null;
    return { participant, seed, reps, isi };
  }

  async createSession(): Promise<void> {
    const fields = this.validate();
    if (fields === null) return;
    try {
      if (this.reference === null) this.reference = await this.client.reference();
      const info = await this.client.createSession({
        task: this.taskSelect.value as TaskName,
        seed: fields.seed,
        participant: fields.participant,
        repetitions: fields.reps,
        isi_s: fields.isi,
      });
      const session = { info, isiS: fields.isi };
      this.sessions.set(info.session, session);
      this.renderSessionList();
      this.activate(session);
    } catch (err) {
      this.toast(err);
    }
  }

  private renderSessionList(): void {
    this.sessionList.textContent = "";
    for (const { info } of this.sessions.values()) {
      const button = el("button", "session-pick", this.sessionList) as HTMLButtonElement;
      button.textContent = `${info.session} ${info.task}`;
      button.dataset.session = info.session;
      button.addEventListener("click", () => {
        const session = this.sessions.get(info.session);
        if (session) this.activate(session);
      });
    }
  }

  private activate(session: ActiveSession): void {
    this.stream?.stop();
    this.clearIsiTimer();
    this.active = session;
    this.store = new TrialStore();
    this.store.subscribe(() => this.refreshControls());
    this.badge.textContent = `${session.info.trial_count} trials`;
    this.progress.textContent = "";
    this.rtValue.textContent = "";
    this.completeNote.textContent = "";
    this.resultsMount.textContent = "";
    this.buildResponseGrid(session.info.task);
    this.monitorMount.textContent = "";
    this.monitor = LiveMonitor.fromReference(this.monitorMount, this.reference!);
    this.resync = true;
    this.stream = this.client.live(
      session.info.session,
      (snap) => {
        this.monitor!.update(snap);
        if (this.resync) {
          this.resync = false;
          this.store.syncFromServer(snap.state);
        }
      },
      (status) => {
        this.monitor?.setStatus(status);
        if (status === "reconnecting") this.resync = true;
      },
    );
    this.refreshControls();
  }

  // -- trial runner -------------------------------------------------------

  private buildResponseGrid(task: TaskName): void {
    this.responseGrid.textContent = "";
    this.responseButtons = [];
    for (const entry of buildSheet(this.reference!, task)) {
      const button = el("button", "response", this.responseGrid) as HTMLButtonElement;
      button.dataset.response = String(entry.id);
      button.innerHTML = entry.svg;
      el("span", "response-label", button).textContent = entry.label;
      button.addEventListener("click", () => void this.respond(entry.id));
      this.responseButtons.push(button);
    }
  }

  async nextTrial(): Promise<void> {
    if (this.active === null || this.store.state !== "idle") return;
    this.nextButton.disabled = true; // optimistic; refreshControls settles it
    try {
      const result = await this.client.nextTrial(this.active.info.session);
      if (result.status === "complete") {
        this.store.complete = true;
        this.completeNote.textContent = "";
        const link = el("a", "results-link", this.completeNote);
        link.textContent = "session complete - view results";
        link.addEventListener("click", () => void this.showResults());
        this.refreshControls();
        return;
      }
      this.progress.textContent = `trial ${result.trial_index! + 1} of ${result.total}`;
      this.rtValue.textContent = "";
      this.store.transition("stimulus");
    } catch (err) {
      this.toast(err);
      this.refreshControls();
    }
  }

  async respond(id: number): Promise<void> {
    if (this.active === null || this.store.state !== "stimulus") return;
    for (const button of this.responseButtons) button.disabled = true;
    try {
      const ack = await this.client.submitResponse(this.active.info.session, id);
      // the displayed RT is the service's literal JSON token, never a
      // number formatted on this side
      this.rtValue.textContent = ack.rtText;
      this.store.transition("isi");
      this.startIsiCountdown();
    } catch (err) {
      this.toast(err);
      this.refreshControls();
    }
  }

  private startIsiCountdown(): void {
    this.clearIsiTimer();
    const ms = this.active!.isiS * 1000;
    this.isiEndsAt = Date.now() + ms;
    this.progress.textContent = `isi ${this.active!.isiS.toFixed(1)} s`;
    this.isiTimer = setInterval(() => {
      const left = this.isiEndsAt - Date.now();
      if (left <= 0) {
        this.clearIsiTimer();
        this.progress.textContent = "";
        if (this.store.state === "isi") this.store.transition("idle");
      } else {
        this.progress.textContent = `isi ${(left / 1000).toFixed(1)} s`;
      }
    }, 100);
  }

  private clearIsiTimer(): void {
    if (this.isiTimer !== null) {
      clearInterval(this.isiTimer);
      this.isiTimer = null;
    }
  }

  async showResults(): Promise<void> {
    if (this.active === null) return;
    try {
      const results = await this.client.results(this.active.info.session);
      renderResults(this.resultsMount, results);
    } catch (err) {
      this.toast(err);
    }
  }

  // -- shared ---------------------------------------------------------------

  private refreshControls(): void {
    const state: TrialState = this.store.state;
    this.nextButton.disabled =
      this.active === null || state !== "idle" || this.store.complete;
    for (const button of this.responseButtons) {
      button.disabled = state !== "stimulus";
    }
    this.root.setAttribute("data-trial-state", state);
  }

  private toast(err: unknown): void {
    const message = err instanceof ServiceError ? err.detail : String(err);
    const node = el("div", "toast", this.toasts);
    node.textContent = message;
    setTimeout(() => node.remove(), 4000);
  }

  dispose(): void {
    this.stream?.stop();
    this.clearIsiTimer();
  }
}
