// Payload shapes of the session service (see the package README for the
// HTTP/WebSocket surface). Field names mirror the JSON exactly.

export type TaskName = "patterns" | "sliding" | "vibro";

export interface Reference {
  tasks: Record<TaskName, number>;
  patterns: Record<string, number[]>;
  sliding: string[];
  vibro: { material: string; freq_hz: number }[];
  layout: Record<string, [number, number]>;
  map_full_scale: number;
  pressure_full_scale_kpa: number;
}

export interface SessionInfo {
  session: string;
  task: TaskName;
  seed: number;
  participant: string;
  trial_count: number;
  stimulus_count: number;
}

export interface NextResult {
  session?: string;
  status: string; // "stimulus" | "complete"
  trial_index?: number;
  total?: number;
  onset_s?: number;
}

export interface TrialRecord {
  participant: string;
  task: TaskName;
  trial_index: number;
  stimulus: number;
  response: number;
  rt_s: number;
  onset_s: number;
  response_s: number;
}

// a response ack keeps the service's literal rt_s JSON token so the UI can
// display it without ever re-deriving or re-formatting a number
export interface ResponseAck {
  record: TrialRecord;
  rtText: string;
}

export interface Snapshot {
  session: string;
  t: number;
  state: "idle" | "stimulus" | "isi" | "complete";
  pressures_kpa: number[];
  valves: boolean[];
  trial: { trial_index: number; onset_s: number } | null;
  map: number[][];
  counters: {
    accepted: number;
    stale: number;
    duplicates: number;
    rejected: Record<string, number>;
  };
}

export interface Results {
  session: string;
  task: TaskName;
  participant: string;
  seed: number;
  completed: number;
  total: number;
  records: TrialRecord[];
  report: Report | null;
  report_error: string | null;
}

export interface Report {
  task: TaskName;
  counts: number[][];
  per_class_accuracy: number[];
  accuracy_mean: number;
  accuracy_sd: number;
  chance: number;
  participants: string[];
  per_participant_accuracy: number[];
  rt_mean_s: number;
  rt_sd_s: number;
  trial_count: number;
}
