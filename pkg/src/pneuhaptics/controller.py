"""Firmware-style valve controller.

Consumes haptic frames, runs the scene-configured mode logic (contact
configuration, directional sliding, vibrotactile), and emits binary valve
plus pump-duty commands on a fixed 1 ms tick. All internal timing is integer
milliseconds so command streams are exactly reproducible.
"""

import csv
from dataclasses import dataclass, field

from .errors import ClockError, ConfigError, DomainError
from .rendering import (
    MATERIAL_FREQUENCY_HZ,
    NEUTRAL,
    contact_mask,
    dominant_direction,
    sliding_schedule,
)

MODES = ("contact", "sliding", "vibro")
TICK_MS = 1
MIN_TOGGLE_SPACING_MS = 5  # 100 Hz valve drive cap
COMMAND_LOG_HEADER = ["time_s", "v1", "v2", "v3", "v4", "dutyA", "dutyB"]


@dataclass(frozen=True)
class ControllerConfig:
    mode: str = "contact"
    contact_threshold_mm: float = 2.0
    sliding_threshold_m_s: float = 5e-3
    material_frequency_hz: dict = None
    pump_map: dict = None
    watchdog_timeout_ms: int = 200
    sliding_pairs: bool = True
    lookahead_ms: int = 100

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.contact_threshold_mm <= 0 or self.sliding_threshold_m_s <= 0:
            raise ConfigError("thresholds must be positive")
        if self.watchdog_timeout_ms <= 0:
            raise ConfigError("watchdog timeout must be positive")
        freqs = dict(MATERIAL_FREQUENCY_HZ if self.material_frequency_hz is None
                     else self.material_frequency_hz)
        for mat, freq in freqs.items():
            if not 0 < freq <= 100:
                raise ConfigError("material frequencies must lie in (0, 100] Hz")
            if round(2 * freq) != 2 * freq:
                raise ConfigError("material frequencies must be multiples of 0.5 Hz")
        pump_map = dict({1: "A", 2: "A", 3: "B", 4: "B"} if self.pump_map is None
                        else self.pump_map)
        if sorted(pump_map) != [1, 2, 3, 4]:
            raise ConfigError("pump map must cover chambers 1..4")
        object.__setattr__(self, "material_frequency_hz", freqs)
        object.__setattr__(self, "pump_map", pump_map)


@dataclass(frozen=True)
class ValveCommand:
    valves: tuple  # bool x4
    duty_a: float
    duty_b: float
    time_s: float


class Controller:
    """Single-owner state machine: on_frame() sets targets, tick() emits commands."""

    def __init__(self, config: ControllerConfig = None):
        self.config = config if config is not None else ControllerConfig()
        self.frames_seen = 0
        self.frames_rejected = 0
        self._last_frame_ms = None
        self._last_now_ms = None
        self._tripped = False
        # mode targets
        self._mask = frozenset()
        self._events_ms = None  # ((chamber set, onset ms, duration ms), ...)
        self._period_ms = None
        self._schedule_origin_ms = 0
        self._direction = None
        self._osc = {}  # chamber -> frequency (Hz)
        self._osc_origin_ms = 0
        # valve output state with toggle-spacing memory
        self._valves = [False] * 4
        self._last_toggle_ms = [-(10 ** 9)] * 4

    @property
    def valves(self):
        return tuple(self._valves)

    # -- frame ingress -----------------------------------------------------

    def on_frame(self, frame, now_ms: int):
        """Apply one decoded frame's mode targets; feeds the watchdog."""
        cfg = self.config
        mask = contact_mask(frame.indentation_mm, cfg.contact_threshold_mm)
        if cfg.mode == "contact":
            self._mask = mask
        elif cfg.mode == "sliding":
            if not mask:
                self._clear_schedule()
            else:
                velocity = tuple(v / 1000.0 for v in frame.velocity_mm_s)
                direction = dominant_direction(velocity, cfg.sliding_threshold_m_s)
                if direction is not None and direction != self._direction:
                    self.present_schedule(
                        sliding_schedule(direction, pairs=cfg.sliding_pairs), now_ms)
                    self._direction = direction
        else:  # vibro
            osc = {}
            for chamber in sorted(mask):
                material = frame.material_id[chamber - 1]
                if material == NEUTRAL:
                    continue
                freq = cfg.material_frequency_hz.get(material)
                if freq is None:
                    self.frames_rejected += 1
                    return
                osc[chamber] = freq
            if osc != self._osc:
                self._osc = osc
                self._osc_origin_ms = now_ms
        self.frames_seen += 1
        self._last_frame_ms = now_ms
        self._tripped = False

    def present_schedule(self, schedule, now_ms: int):
        """Latch a stimulus schedule directly (rotations have no live detector)."""
        self._events_ms = tuple(
            (frozenset(chambers), int(round(onset * 1000)), int(round(dur * 1000)))
            for chambers, onset, dur in schedule.events)
        self._period_ms = (None if schedule.repeat_period is None
                           else int(round(schedule.repeat_period * 1000)))
        self._schedule_origin_ms = now_ms
        self._direction = None

    def release(self):
        """Drop all stimulation targets (trial teardown)."""
        self._mask = frozenset()
        self._clear_schedule()
        self._osc = {}

    def _clear_schedule(self):
        self._events_ms = None
        self._period_ms = None
        self._direction = None

    # -- command egress ----------------------------------------------------

    def watchdog(self, now_ms: int):
        """Trip when no frame arrived within the timeout; idempotent."""
        if self._last_now_ms is not None and now_ms < self._last_now_ms:
            raise ClockError(f"clock moved backwards: {now_ms} < {self._last_now_ms}")
        if self._last_frame_ms is None or \
                now_ms - self._last_frame_ms > self.config.watchdog_timeout_ms:
            self._tripped = True
        return self._tripped

    def _desired_at(self, t_ms: int) -> frozenset:
        cfg = self.config
        if cfg.mode == "contact":
            return self._mask
        if cfg.mode == "sliding":
            if self._events_ms is None:
                return frozenset()
            phase = t_ms - self._schedule_origin_ms
            if phase < 0:
                return frozenset()
            if self._period_ms is not None:
                phase %= self._period_ms
            out = set()
            for chambers, onset, duration in self._events_ms:
                if onset <= phase < onset + duration:
                    out |= chambers
            return frozenset(out)
        # vibro: per-chamber square drives on a shared phase origin
        dms = t_ms - self._osc_origin_ms
        out = set()
        for chamber, freq in self._osc.items():
            if dms >= 0 and (dms * int(round(2 * freq))) // 1000 % 2 == 0:
                out.add(chamber)
        return frozenset(out)

    def tick(self, now_ms: int) -> ValveCommand:
        """Emit the valve/pump command for this millisecond."""
        self.watchdog(now_ms)
        self._last_now_ms = now_ms
        desired = frozenset() if self._tripped else self._desired_at(now_ms)
        valves = []
        for i in range(4):
            want = (i + 1) in desired
            if want != self._valves[i] and \
                    now_ms - self._last_toggle_ms[i] >= MIN_TOGGLE_SPACING_MS:
                self._valves[i] = want
                self._last_toggle_ms[i] = now_ms
            valves.append(self._valves[i])
        duties = {"A": 0.0, "B": 0.0}
        if not self._tripped:
            if self.config.mode == "vibro":
                open_soon = frozenset(self._osc)
            else:
                open_soon = desired | self._desired_at(now_ms + self.config.lookahead_ms)
            for chamber in open_soon:
                duties[self.config.pump_map[chamber]] = 1.0
        return ValveCommand(tuple(valves), duties["A"], duties["B"], now_ms / 1000.0)


def write_command_log(commands, path):
    """Write commands as CSV rows time_s,v1,v2,v3,v4,dutyA,dutyB."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COMMAND_LOG_HEADER)
        for cmd in commands:
            writer.writerow([f"{cmd.time_s:.3f}"]
                            + [int(v) for v in cmd.valves]
                            + [f"{cmd.duty_a:g}", f"{cmd.duty_b:g}"])


def load_command_log(path):
    """Read a command log CSV back into ValveCommand objects."""
    commands = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COMMAND_LOG_HEADER:
            raise DomainError("command log line 1: bad header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise DomainError(f"command log line {lineno}: expected 7 columns")
            commands.append(ValveCommand(
                tuple(bool(int(v)) for v in row[1:5]),
                float(row[5]), float(row[6]), float(row[0])))
    return commands
