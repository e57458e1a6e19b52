// Trial state machine for the console UI. The only reachable cycle is
// Idle -> StimulusActive -> ISI -> Idle; every change, including re-syncs
// from the live stream, is applied edge by edge through this map, so an
// illegal jump throws instead of corrupting the view.

export type TrialState = "idle" | "stimulus" | "isi";

const NEXT: Record<TrialState, TrialState> = {
  idle: "stimulus",
  stimulus: "isi",
  isi: "idle",
};

export type StoreListener = (state: TrialState) => void;

export class TrialStore {
  private current: TrialState = "idle";
  private listeners: StoreListener[] = [];
  trialIndex: number | null = null;
  complete = false;

  get state(): TrialState {
    return this.current;
  }

  subscribe(fn: StoreListener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  transition(to: TrialState): void {
    if (NEXT[this.current] !== to) {
      throw new Error(`illegal transition ${this.current} -> ${to}`);
    }
    this.current = to;
    for (const fn of this.listeners) fn(to);
  }

  // live snapshots may skip states the console missed (e.g. a reconnect that
  // lands after an ISI ended); walk the legal cycle until the states agree,
  // emitting each intermediate state
  syncFromServer(server: TrialState | "complete"): void {
    const target: TrialState = server === "complete" ? "idle" : server;
    if (server === "complete") this.complete = true;
    let hops = 0;
    while (this.current !== target) {
      this.transition(NEXT[this.current]);
      hops += 1;
      if (hops > 3) throw new Error("unreachable server state " + server);
    }
  }
}
