"""Forced-choice study engine.

Schedules pseudorandom trials for the three identification tasks, presents
each stimulus through the controller+emulator rig, logs responses and
response times, and decodes sensed pressure maps with an ideal observer for
automated closed-loop verification. Statistical tests live in stats.py.
"""

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from itertools import zip_longest
from pathlib import Path

import numpy as np

from .controller import ControllerConfig, write_command_log
from .errors import AnalysisError, ConfigError, DomainError
from .protocol import make_frame
from .rendering import FABRIC, STONE, WOOD, sliding_schedule
from .rig import Rig
from .sensing import FULL_SCALE_KPA, GAIN_PER_KPA, block_means

TASKS = {"patterns": 9, "sliding": 6, "vibro": 3}
CHANCE = {"patterns": 1 / 9, "sliding": 1 / 6, "vibro": 1 / 3}
OBSERVATION_WINDOW_S = {"patterns": 0.8, "sliding": 1.0, "vibro": 2.0}
TASK_MODE = {"patterns": "contact", "sliding": "sliding", "vibro": "vibro"}
SLIDING_TOKENS = ("Right", "Left", "Up", "Down", "CW", "CCW")
VIBRO_MATERIALS = (STONE, FABRIC, WOOD)
VIBRO_FREQS = (5.0, 30.0, 100.0)

PRESS_DEPTH_MM = 5.0
SLIDE_SPEED_MM_S = 20.0
FRAME_PERIOD_MS = 20  # 50 Hz
ABSTAIN = 0
_FLOOR = 0.05 * GAIN_PER_KPA * FULL_SCALE_KPA  # all-off detection level

# expected chamber-group order per sliding stimulus id
_SLIDING_TEMPLATES = {
    1: ({1, 3}, {2, 4}),
    2: ({2, 4}, {1, 3}),
    3: ({3, 4}, {1, 2}),
    4: ({1, 2}, {3, 4}),
    5: ({1}, {2}, {4}, {3}),
    6: ({3}, {4}, {2}, {1}),
}


@dataclass(frozen=True)
class TaskSpec:
    kind: str
    repetitions: int = 5
    isi_s: float = 2.0
    vibro_on_s: float = 2.0
    vibro_off_s: float = 2.0

    def __post_init__(self):
        if self.kind not in TASKS:
            raise ConfigError(f"task must be one of {sorted(TASKS)}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.isi_s < 0 or self.vibro_on_s <= 0 or self.vibro_off_s < 0:
            raise ConfigError("invalid task timing")

    @property
    def stimulus_count(self):
        return TASKS[self.kind]


@dataclass(frozen=True)
class TrialRecord:
    participant: str
    task: str
    trial_index: int
    stimulus: int
    response: int
    rt_s: float
    onset_s: float
    response_s: float

    def __post_init__(self):
        k = TASKS.get(self.task)
        if k is None:
            raise DomainError(f"unknown task {self.task!r}")
        if not (1 <= self.stimulus <= k and 1 <= self.response <= k):
            raise DomainError("stimulus/response id out of task range")
        if self.rt_s <= 0:
            raise DomainError("response time must be positive")


def load_patterns(path=None):
    """Pattern id -> chamber mask, from the bundled or a substitute JSON file."""
    if path is None:
        text = resources.files("pneuhaptics").joinpath(
            "data/patterns.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    patterns = {}
    for key, chambers in doc.items():
        mask = frozenset(int(c) for c in chambers)
        if not mask or not mask <= {1, 2, 3, 4}:
            raise ConfigError(f"pattern {key}: mask must be a nonempty subset of 1..4")
        patterns[int(key)] = mask
    ids = sorted(patterns)
    if ids != list(range(1, len(ids) + 1)):
        raise ConfigError("pattern ids must be contiguous starting at 1")
    if len(set(patterns.values())) != len(patterns):
        raise ConfigError("pattern masks must be distinct")
    if len(patterns) != TASKS["patterns"]:
        raise ConfigError(f"patterns task needs {TASKS['patterns']} entries")
    return patterns


def schedule(kind, seed, repetitions=5):
    """Balanced, seeded-shuffle trial order: each stimulus exactly reps times."""
    if kind not in TASKS:
        raise ConfigError(f"task must be one of {sorted(TASKS)}")
    ids = np.repeat(np.arange(1, TASKS[kind] + 1), repetitions)
    rng = np.random.default_rng(seed)
    return [int(i) for i in rng.permutation(ids)]


# -- stimulus synthesis ------------------------------------------------------

def _depths_for_mask(mask):
    return tuple(PRESS_DEPTH_MM if c in mask else 0.0 for c in (1, 2, 3, 4))


def stimulus_frame(spec, stimulus, patterns, elapsed_ms, seq, timestamp_ms):
    """The 50 Hz frame presenting `stimulus` at `elapsed_ms` since onset."""
    kind = spec.kind
    if kind == "patterns":
        return make_frame(seq, timestamp_ms, _depths_for_mask(patterns[stimulus]),
                          (0, 0, 0, 0), (0.0, 0.0, 0.0), 0.0)
    if kind == "sliding":
        token = SLIDING_TOKENS[stimulus - 1]
        velocity = {"Right": (SLIDE_SPEED_MM_S, 0.0, 0.0),
                    "Left": (-SLIDE_SPEED_MM_S, 0.0, 0.0),
                    "Up": (0.0, SLIDE_SPEED_MM_S, 0.0),
                    "Down": (0.0, -SLIDE_SPEED_MM_S, 0.0)}.get(token, (0.0, 0.0, 0.0))
        return make_frame(seq, timestamp_ms, (PRESS_DEPTH_MM,) * 4,
                          (0, 0, 0, 0), velocity, 0.0)
    # vibro: material press gated by the on/off envelope
    material = VIBRO_MATERIALS[stimulus - 1]
    cycle_ms = int(round((spec.vibro_on_s + spec.vibro_off_s) * 1000))
    on_ms = int(round(spec.vibro_on_s * 1000))
    on = (elapsed_ms % cycle_ms) < on_ms
    depths = (PRESS_DEPTH_MM,) * 4 if on else (0.0,) * 4
    return make_frame(seq, timestamp_ms, depths, (material,) * 4,
                      (0.0, 0.0, 0.0), 0.0)


# -- ideal observer ----------------------------------------------------------

def decide_patterns(mean_blocks, patterns):
    """Threshold time-averaged block means at half their peak; match the mask."""
    m = np.asarray(mean_blocks, dtype=float)
    if m.max() < _FLOOR:
        return ABSTAIN
    mask = frozenset(i + 1 for i in range(4) if m[i] > 0.5 * m.max())
    best = None
    for pid in sorted(patterns):
        miss = len(mask ^ patterns[pid])
        if best is None or miss < best[0]:
            best = (miss, pid)
    return best[1]


def _onset_clusters(times_ms, chambers, gap_ms=50):
    order = np.argsort(times_ms, kind="stable")
    clusters = []
    last = None
    for idx in order:
        t = times_ms[idx]
        if last is None or t - last > gap_ms:
            clusters.append(set())
        clusters[-1].add(chambers[idx])
        last = t
    return [frozenset(c) for c in clusters]


def decide_sliding(times_ms, block_series):
    """Cluster chamber activation onsets and match the group order."""
    arr = np.asarray(block_series, dtype=float)
    if arr.size == 0 or arr.max() < _FLOOR:
        return ABSTAIN
    thresh = 0.5 * arr.max()
    onsets, chambers = [], []
    for ch in range(4):
        hits = np.nonzero(arr[:, ch] > thresh)[0]
        if hits.size:
            onsets.append(times_ms[hits[0]])
            chambers.append(ch + 1)
    if not onsets:
        return ABSTAIN
    observed = _onset_clusters(np.asarray(onsets), chambers)
    best = None
    for sid in sorted(_SLIDING_TEMPLATES):
        template = _SLIDING_TEMPLATES[sid]
        variants = [template]
        if len(template) == 4:  # rotations may be seen from any phase
            variants = [template[k:] + template[:k] for k in range(4)]
        for var in variants:
            miss = sum(len((o or frozenset()) ^ (t or frozenset()))
                       for o, t in zip_longest(observed, var))
            if best is None or miss < best[0]:
                best = (miss, sid)
    return best[1]


def decide_vibro(totals):
    """Count rising transitions of the summed signal; snap to 5/30/100 Hz."""
    arr = np.asarray(totals, dtype=float)
    if arr.size == 0 or arr.max() < _FLOOR:
        return ABSTAIN
    lo, hi = arr.min(), arr.max()
    mid = 0.5 * (lo + hi)
    band = 0.15 * (hi - lo)
    high = arr[0] > mid
    rises = 0
    for x in arr:
        if high and x < mid - band:
            high = False
        elif not high and x > mid + band:
            high = True
            rises += 1
    window_s = arr.size / 1000.0
    freq = rises / window_s
    if freq <= 0:
        return ABSTAIN
    scores = [abs(math.log(freq) - math.log(f)) for f in VIBRO_FREQS]
    return int(np.argmin(scores)) + 1


class IdealObserver:
    """Poll-style responder that decodes the stimulus after a fixed window.

    observe() returns None while watching, then the decoded id (or ABSTAIN)
    exactly once the observation window has elapsed.
    """

    def __init__(self, task, patterns=None, window_s=None):
        if task not in TASKS:
            raise ConfigError(f"task must be one of {sorted(TASKS)}")
        self.task = task
        self.patterns = patterns
        self.window_ms = int(round(1000 * (OBSERVATION_WINDOW_S[task]
                                           if window_s is None else window_s)))
        self.begin(0)

    def begin(self, onset_ms):
        self.onset_ms = onset_ms
        self._sum = np.zeros(4)
        self._count = 0
        self._times = []
        self._blocks = []
        self._totals = []

    def observe(self, t_ms, pressure_map):
        if self.task == "patterns":
            self._sum += block_means(pressure_map)
            self._count += 1
        elif self.task == "sliding":
            self._times.append(t_ms - self.onset_ms)
            self._blocks.append(block_means(pressure_map))
        else:
            self._totals.append(float(pressure_map.values.mean()))
        if t_ms - self.onset_ms < self.window_ms:
            return None
        return self.decide()

    def decide(self):
        if self.task == "patterns":
            if self._count == 0:
                return ABSTAIN
            return decide_patterns(self._sum / self._count, self.patterns)
        if self.task == "sliding":
            return decide_sliding(np.asarray(self._times), self._blocks)
        return decide_vibro(self._totals)


class ScriptedResponder:
    """Replays fixed responses after fixed latencies (timing-path tests)."""

    def __init__(self, responses, latency_s=0.1):
        self._responses = list(responses)
        self._i = 0
        self.latency_ms = int(round(latency_s * 1000))
        self.onset_ms = 0

    def begin(self, onset_ms):
        self.onset_ms = onset_ms

    def observe(self, t_ms, pressure_map):
        if t_ms - self.onset_ms < self.latency_ms:
            return None
        response = self._responses[self._i % len(self._responses)]
        self._i += 1
        return response


# -- session runner ----------------------------------------------------------

class StudySession:
    """One participant's run of a task against the emulated rig."""

    def __init__(self, spec, seed=0, participant="observer", responder=None,
                 patterns=None, pairs=True, sense_sigma=0.0,
                 log_commands=True):
        self.spec = TaskSpec(spec) if isinstance(spec, str) else spec
        self.seed = seed
        self.participant = participant
        self.patterns = (patterns if patterns is not None
                         else (load_patterns() if self.spec.kind == "patterns"
                               else None))
        self.trials = schedule(self.spec.kind, seed, self.spec.repetitions)
        self.pairs = pairs
        self.rig = Rig(ControllerConfig(mode=TASK_MODE[self.spec.kind],
                                        sliding_pairs=pairs),
                       sense_sigma=sense_sigma,
                       rng=np.random.default_rng([seed, 1]),
                       log_commands=log_commands)
        self.responder = responder if responder is not None else \
            IdealObserver(self.spec.kind, patterns=self.patterns)
        self.records = []
        self.abstains = 0
        self._seq = 0

    def _push_stimulus_frame(self, stimulus, elapsed_ms):
        frame = stimulus_frame(self.spec, stimulus, self.patterns, elapsed_ms,
                               self._seq, self.rig.t_ms)
        self._seq += 1
        self.rig.push_frame(frame)

    def run_trial(self, index):
        stimulus = self.trials[index]
        rig = self.rig
        onset_ms = rig.t_ms
        if self.spec.kind == "sliding":
            token = SLIDING_TOKENS[stimulus - 1]
            if token in ("CW", "CCW"):
                # rotations have no live velocity detector; latch directly
                rig.present_schedule(sliding_schedule(token, pairs=self.pairs))
        self.responder.begin(onset_ms)
        response = None
        while response is None:
            elapsed = rig.t_ms - onset_ms
            if elapsed % FRAME_PERIOD_MS == 0:
                self._push_stimulus_frame(stimulus, elapsed)
            rig.tick()
            response = self.responder.observe(rig.t_ms, rig.sense_map())
        response_ms = rig.t_ms
        if response == ABSTAIN:
            self.abstains += 1
            response = 1 if stimulus != 1 else 2  # guaranteed-incorrect stand-in
        # teardown: zero-contact frame releases every mode's latch
        self.rig.push_frame(make_frame(self._seq, rig.t_ms, (0.0,) * 4,
                                       (0, 0, 0, 0), (0.0, 0.0, 0.0), 0.0))
        self._seq += 1
        record = TrialRecord(self.participant, self.spec.kind, index, stimulus,
                             int(response), (response_ms - onset_ms) / 1000.0,
                             onset_ms / 1000.0, response_ms / 1000.0)
        self.records.append(record)
        isi_ms = int(round(self.spec.isi_s * 1000))
        if isi_ms >= 10:
            rig.tick(isi_ms // 10, step_ms=10)  # idle: coarse steps, exact decay
        if isi_ms % 10:
            rig.tick(isi_ms % 10)
        return record

    def run(self):
        for index in range(len(self.trials)):
            self.run_trial(index)
        return self.records

    def write_logs(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trial_log(self.records, out / "trials.jsonl")
        if self.rig.log_commands:
            write_command_log(self.rig.commands, out / "commands.csv")
        return out


def present_and_decode(kind, stimulus, sense_sigma=0.0, seed=0, pairs=True,
                       patterns=None):
    """One-shot closed loop: present a stimulus on a fresh rig and decode it."""
    spec = TaskSpec(kind, repetitions=1, isi_s=0.0)
    session = StudySession(spec, seed=seed, sense_sigma=sense_sigma,
                           pairs=pairs, patterns=patterns, log_commands=False)
    session.trials = [stimulus]
    session.responder = IdealObserver(kind, patterns=session.patterns)
    record = session.run_trial(0)
    return ABSTAIN if session.abstains else record.response


# -- logs and analysis -------------------------------------------------------

def write_trial_log(records, path):
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")


def read_trial_log(path):
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(TrialRecord(**json.loads(line)))
            except (json.JSONDecodeError, TypeError, DomainError) as exc:
                raise AnalysisError(f"trial log line {lineno}: {exc}") from exc
    return records


@dataclass(frozen=True)
class AnalysisReport:
    task: str
    counts: tuple  # k x k, rows = presented
    per_class_accuracy: tuple
    accuracy_mean: float
    accuracy_sd: float
    chance: float
    participants: tuple
    per_participant_accuracy: tuple
    rt_mean_s: float
    rt_sd_s: float
    trial_count: int

    def to_json(self):
        doc = asdict(self)
        doc["counts"] = [list(row) for row in self.counts]
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def counts_csv(self):
        k = len(self.counts)
        lines = ["stimulus," + ",".join(f"r{j}" for j in range(1, k + 1))]
        for i, row in enumerate(self.counts, start=1):
            lines.append(f"{i}," + ",".join(str(v) for v in row))
        return "\n".join(lines) + "\n"


def analyze(records):
    """Confusion counts, accuracies, and RT stats for one task's records."""
    if not records:
        raise AnalysisError("no trial records")
    tasks = {r.task for r in records}
    if len(tasks) > 1:
        raise AnalysisError(f"mixed-task log: {sorted(tasks)}")
    task = records[0].task
    k = TASKS[task]
    counts = np.zeros((k, k), dtype=int)
    for r in records:
        counts[r.stimulus - 1, r.response - 1] += 1
    presented = counts.sum(axis=1)
    missing = [i + 1 for i in range(k) if presented[i] == 0]
    if missing:
        raise AnalysisError(f"no presentations for class ids {missing}")
    per_class = counts.diagonal() / presented
    participants = sorted({r.participant for r in records})
    per_participant = []
    for p in participants:
        trials = [r for r in records if r.participant == p]
        per_participant.append(
            sum(r.response == r.stimulus for r in trials) / len(trials))
    acc = np.asarray(per_participant)
    rts = np.asarray([r.rt_s for r in records])
    return AnalysisReport(
        task=task,
        counts=tuple(tuple(int(v) for v in row) for row in counts),
        per_class_accuracy=tuple(float(a) for a in per_class),
        accuracy_mean=float(acc.mean()),
        accuracy_sd=float(acc.std(ddof=1)) if acc.size > 1 else 0.0,
        chance=CHANCE[task],
        participants=tuple(participants),
        per_participant_accuracy=tuple(float(a) for a in per_participant),
        rt_mean_s=float(rts.mean()),
        rt_sd_s=float(rts.std(ddof=1)) if rts.size > 1 else 0.0,
        trial_count=len(records))
