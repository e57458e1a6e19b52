import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { ServiceClient } from "../src/api.js";
import { Console } from "../src/app.js";
import type { Reference } from "../src/types.js";
import { FakeFetch, FakeSocket, jsonResponse } from "./helpers.js";
import refJson from "./fixtures/reference.json";

const ref = refJson as unknown as Reference;

const SNAPSHOT = {
  session: "s1",
  t: 0.05,
  state: "idle",
  pressures_kpa: [12.5, 0, 0, 61.9],
  valves: [true, false, false, true],
  trial: null,
  map: Array.from({ length: 6 }, (_, r) => Array.from({ length: 6 }, (_, c) => r + c)),
  counters: { accepted: 3, stale: 0, duplicates: 0, rejected: {} },
};

function record(rt: number) {
  return {
    participant: "p01", task: "patterns", trial_index: 0, stimulus: 3,
    response: 3, rt_s: rt, onset_s: 0.0, response_s: rt,
  };
}

let fetchFake: FakeFetch;
let console_: Console;
let root: HTMLElement;

function setup(task = "patterns", stimulusCount = 9, trialCount = 45) {
  FakeSocket.instances = [];
  fetchFake = new FakeFetch();
  fetchFake.on("GET", "/reference", () => jsonResponse(200, ref));
  fetchFake.on("POST", "/sessions", (body: any) =>
    jsonResponse(201, {
      session: "s1", task: body.task, seed: body.seed,
      participant: body.participant, trial_count: trialCount,
      stimulus_count: stimulusCount,
    }));
  root = document.createElement("div");
  document.body.appendChild(root);
  const client = new ServiceClient("http://svc", fetchFake.fn, FakeSocket);
  console_ = new Console(root, client);
  (root.querySelector(".task-select") as HTMLSelectElement).value = task;
}

async function createSession() {
  (root.querySelector(".create-session") as HTMLButtonElement).click();
  await vi.waitFor(() => {
    if (FakeSocket.instances.length === 0) throw new Error("no stream yet");
  });
}

beforeEach(() => setup());

afterEach(() => {
  console_.dispose();
  document.body.textContent = "";
});

describe("session dashboard", () => {
  it("rejects bad inputs inline without calling the service", async () => {
    (root.querySelector(".field input") as HTMLInputElement).value = "  ";
    (root.querySelector(".create-session") as HTMLButtonElement).click();
    expect(root.querySelector(".setup-error")!.textContent).toMatch(/participant/);
    const seed = root.querySelectorAll(".field input")[1] as HTMLInputElement;
    (root.querySelector(".field input") as HTMLInputElement).value = "p01";
    seed.value = "1.5";
    (root.querySelector(".create-session") as HTMLButtonElement).click();
    expect(root.querySelector(".setup-error")!.textContent).toMatch(/seed/);
    expect(fetchFake.calls).toHaveLength(0);
  });

  it("shows the trial count badge after creating a session", async () => {
    await createSession();
    expect(root.querySelector(".trial-badge")!.textContent).toBe("45 trials");
    expect(root.querySelector(".session-list")!.textContent).toContain("s1 patterns");
  });
});

describe("response grid", () => {
  it("has one button per stimulus alternative for each task", async () => {
    await createSession();
    expect(root.querySelectorAll(".response")).toHaveLength(9);

    setup("sliding", 6, 30);
    await createSession();
    expect(root.querySelectorAll(".response")).toHaveLength(6);

    setup("vibro", 3, 15);
    await createSession();
    expect(root.querySelectorAll(".response")).toHaveLength(3);
  });

  it("enables response buttons only while a stimulus is active", async () => {
    fetchFake.on("POST", "/sessions/s1/next", () =>
      jsonResponse(200, { session: "s1", status: "stimulus", trial_index: 0, total: 45, onset_s: 0 }));
    fetchFake.on("POST", "/sessions/s1/response", () =>
      jsonResponse(200, record(0.12)));
    await createSession();
    const buttons = [...root.querySelectorAll(".response")] as HTMLButtonElement[];
    expect(buttons.every((b) => b.disabled)).toBe(true);

    (root.querySelector(".next-trial") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      if (console_.store.state !== "stimulus") throw new Error("not armed");
    });
    expect(buttons.every((b) => !b.disabled)).toBe(true);

    buttons[2].click();
    await vi.waitFor(() => {
      if (console_.store.state !== "isi") throw new Error("no response yet");
    });
    expect(buttons.every((b) => b.disabled)).toBe(true);
  });

  it("clicking a response while idle sends nothing", async () => {
    await createSession();
    const before = fetchFake.calls.length;
    ([...root.querySelectorAll(".response")][0] as HTMLButtonElement).click();
    await Promise.resolve();
    expect(fetchFake.calls).toHaveLength(before);
  });
});

describe("trial runner", () => {
  it("displays the service RT token verbatim and walks stimulus->isi->idle", async () => {
    vi.useFakeTimers();
    try {
      const raw =
        '{"participant":"p01","task":"patterns","trial_index":0,"stimulus":3,' +
        '"response":3,"rt_s":0.119999999999999996,"onset_s":0.0,"response_s":0.12}';
      fetchFake.on("POST", "/sessions/s1/next", () =>
        jsonResponse(200, { session: "s1", status: "stimulus", trial_index: 0, total: 45, onset_s: 0 }));
      fetchFake.on("POST", "/sessions/s1/response", () => jsonResponse(200, null, raw));
      (root.querySelectorAll(".field input")[3] as HTMLInputElement).value = "2";
      await createSession();

      (root.querySelector(".next-trial") as HTMLButtonElement).click();
      await vi.waitFor(() => {
        if (console_.store.state !== "stimulus") throw new Error("not armed");
      });
      expect(root.querySelector(".trial-progress")!.textContent).toBe("trial 1 of 45");
      expect((root.querySelector(".next-trial") as HTMLButtonElement).disabled).toBe(true);

      ([...root.querySelectorAll(".response")][2] as HTMLButtonElement).click();
      await vi.waitFor(() => {
        if (console_.store.state !== "isi") throw new Error("no response yet");
      });
      expect(root.querySelector(".rt-value")!.textContent).toBe("0.119999999999999996");
      expect(root.querySelector(".rt-display")!.textContent).toBe("RT 0.119999999999999996 s");

      // next stays disabled through the 2 s isi countdown
      expect((root.querySelector(".next-trial") as HTMLButtonElement).disabled).toBe(true);
      vi.advanceTimersByTime(1900);
      expect(console_.store.state).toBe("isi");
      vi.advanceTimersByTime(200);
      expect(console_.store.state).toBe("idle");
      expect((root.querySelector(".next-trial") as HTMLButtonElement).disabled).toBe(false);
    } finally {
      vi.useRealTimers();
    }
  });

  it("renders a conflict as a toast without corrupting the state", async () => {
    fetchFake.on("POST", "/sessions/s1/next", () =>
      jsonResponse(409, { detail: "inter-stimulus interval still running" }));
    await createSession();
    (root.querySelector(".next-trial") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      if (root.querySelectorAll(".toast").length === 0) throw new Error("no toast");
    });
    expect(root.querySelector(".toast")!.textContent).toBe(
      "inter-stimulus interval still running");
    expect(console_.store.state).toBe("idle");
    expect((root.querySelector(".next-trial") as HTMLButtonElement).disabled).toBe(false);
  });

  it("offers a results link when the schedule is exhausted", async () => {
    fetchFake.on("POST", "/sessions/s1/next", () =>
      jsonResponse(200, { session: "s1", status: "complete", completed: 45, total: 45 }));
    fetchFake.on("GET", "/sessions/s1/results", () =>
      jsonResponse(200, {
        session: "s1", task: "patterns", participant: "p01", seed: 7,
        completed: 2, total: 2,
        records: [record(0.12), record(0.3)],
        report: {
          task: "patterns",
          counts: [[2, 0], [0, 0]],
          per_class_accuracy: [1.0, 0.0],
          accuracy_mean: 1.0, accuracy_sd: 0.0, chance: 1 / 9,
          participants: ["p01"], per_participant_accuracy: [1.0],
          rt_mean_s: 0.21, rt_sd_s: 0.127, trial_count: 2,
        },
        report_error: null,
      }));
    await createSession();
    (root.querySelector(".next-trial") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      if (!root.querySelector(".results-link")) throw new Error("no link");
    });
    expect(root.querySelector(".complete-note")!.textContent).toContain("session complete");
    expect((root.querySelector(".next-trial") as HTMLButtonElement).disabled).toBe(true);

    (root.querySelector(".results-link") as HTMLElement).click();
    await vi.waitFor(() => {
      if (!root.querySelector(".confusion")) throw new Error("no table");
    });
    const cells = [...root.querySelectorAll(".confusion td")].map((td) => td.textContent);
    expect(cells).toEqual(["2", "0", "0", "0"]);
    expect(root.querySelector(".results-summary")!.textContent).toContain("100.0%");
  });
});

describe("live monitor", () => {
  it("renders snapshots into gauges and the heat map at a fixed scale", async () => {
    await createSession();
    FakeSocket.instances[0].emit(SNAPSHOT);
    const readouts = [...root.querySelectorAll(".gauge-readout")].map((n) => n.textContent);
    expect(readouts).toEqual(["12.5 kPa", "0.0 kPa", "0.0 kPa", "61.9 kPa"]);
    const cells = root.querySelectorAll(".heatmap-cell");
    expect(cells).toHaveLength(36);
    // value 10 of full scale 64 -> opacity 0.08 + 0.92 * 10/64
    expect((cells[35] as HTMLElement).style.opacity).toBe("0.224");
    expect((cells[35] as HTMLElement).dataset.value).toBe("10.000");
  });

  it("shows reconnect status and re-syncs trial state from the stream", async () => {
    vi.useFakeTimers();
    try {
      await createSession();
      const status = () => root.querySelector(".monitor-status")!.textContent;
      FakeSocket.instances[0].emit(SNAPSHOT);
      expect(status()).toBe("connected");

      FakeSocket.instances[0].drop();
      expect(status()).toBe("reconnecting");
      vi.advanceTimersByTime(250);
      expect(FakeSocket.instances).toHaveLength(2);
      expect(status()).toBe("connected");

      // the missed isi was entered server-side while disconnected
      FakeSocket.instances[1].emit({ ...SNAPSHOT, t: 1.0, state: "isi" });
      expect(console_.store.state).toBe("isi");
    } finally {
      vi.useRealTimers();
    }
  });
});
