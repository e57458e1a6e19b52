"""Hand-to-stimulus rendering.

Turns tracked pad poses against axis-aligned boxes into per-chamber
stimulation: quadrant indentation depths, EMA-filtered velocities, and the
three mode encoders (contact configuration, directional sliding schedules,
vibrotactile square drives).
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigError, DomainError, ProtocolError
from .protocol import HapticFrame, make_frame

NEUTRAL, STONE, FABRIC, WOOD = 0, 1, 2, 3
MATERIAL_IDS = {"Neutral": NEUTRAL, "Stone": STONE, "Fabric": FABRIC, "Wood": WOOD}
MATERIAL_NAMES = {v: k for k, v in MATERIAL_IDS.items()}
MATERIAL_FREQUENCY_HZ = {STONE: 5, FABRIC: 30, WOOD: 100}

DEFAULT_PAD_SIDE = 30e-3
DEFAULT_QUADRANT_MAP = {"FL": 1, "FR": 2, "BL": 3, "BR": 4}
CONTACT_THRESHOLD_MM = 2.0
SLIDING_THRESHOLD_M_S = 5e-3
ALPHA_LINEAR = 0.15
ALPHA_ANGULAR = 0.10

TRANSLATIONS = ("Right", "Left", "Up", "Down")
ROTATIONS = ("CW", "CCW")
DIRECTIONS = TRANSLATIONS + ROTATIONS

# Pad-local frame: x to the right, y forward, z out of the pad surface.
_CORNER_SIGNS = {"FL": (-1.0, 1.0), "FR": (1.0, 1.0),
                 "BL": (-1.0, -1.0), "BR": (1.0, -1.0)}

TRAJECTORY_HEADER = ["time_s", "px", "py", "pz", "qw", "qx", "qy", "qz"]


@dataclass(frozen=True)
class HandSample:
    """One tracked pose: position (m), orientation quaternion (w,x,y,z), time (s)."""

    position: tuple
    orientation: tuple
    timestamp: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        quat = tuple(float(v) for v in self.orientation)
        if len(pos) != 3 or len(quat) != 4:
            raise DomainError("pose needs 3 position and 4 quaternion components")
        if not all(math.isfinite(v) for v in pos + quat + (self.timestamp,)):
            raise DomainError("pose components must be finite")
        norm = math.sqrt(sum(v * v for v in quat))
        if abs(norm - 1.0) > 1e-6:
            raise DomainError(f"quaternion norm {norm:.8f} is not 1 within 1e-6")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "orientation", quat)


@dataclass(frozen=True)
class ContactPad:
    """Square fingerpad proxy whose quadrants register to the four chambers."""

    side: float = DEFAULT_PAD_SIDE
    quadrant_map: dict = None

    def __post_init__(self):
        if not self.side > 0:
            raise ConfigError("pad side must be positive")
        qmap = dict(DEFAULT_QUADRANT_MAP if self.quadrant_map is None
                    else self.quadrant_map)
        if set(qmap) != set(_CORNER_SIGNS) or sorted(qmap.values()) != [1, 2, 3, 4]:
            raise ConfigError("quadrant map must be a bijection {FL,FR,BL,BR} -> {1..4}")
        object.__setattr__(self, "quadrant_map", qmap)


@dataclass(frozen=True)
class SceneObject:
    """Axis-aligned box with a surface material tag."""

    aabb_min: tuple
    aabb_max: tuple
    material: int = NEUTRAL

    def __post_init__(self):
        lo = tuple(float(v) for v in self.aabb_min)
        hi = tuple(float(v) for v in self.aabb_max)
        if len(lo) != 3 or len(hi) != 3:
            raise ConfigError("AABB corners need 3 components each")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ConfigError("AABB min must be strictly below max on every axis")
        if self.material not in MATERIAL_NAMES:
            raise ConfigError(f"unknown material id {self.material}")
        object.__setattr__(self, "aabb_min", lo)
        object.__setattr__(self, "aabb_max", hi)


@dataclass
class FilterState:
    """EMA filter memory for linear velocity (m/s) and angular speed (rad/s)."""

    alpha_linear: float = ALPHA_LINEAR
    alpha_angular: float = ALPHA_ANGULAR
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_speed: float = 0.0

    def __post_init__(self):
        for alpha in (self.alpha_linear, self.alpha_angular):
            if not 0.0 < alpha <= 1.0:
                raise ConfigError("EMA alpha must lie in (0, 1]")
        self.velocity = np.asarray(self.velocity, dtype=float)


@dataclass(frozen=True)
class StimulusSchedule:
    """Timed chamber-set events, optionally repeating."""

    events: tuple  # of (frozenset of chambers, onset s, duration s)
    repeat_period: float = None  # None = one-shot
    mode: str = "sliding"

    def __post_init__(self):
        events = tuple((frozenset(c), float(onset), float(dur))
                       for c, onset, dur in self.events)
        if not events:
            raise ConfigError("schedule needs at least one event")
        last_off = 0.0
        prev_onset = -math.inf
        for chambers, onset, dur in events:
            if not chambers or not chambers <= {1, 2, 3, 4}:
                raise ConfigError("event chambers must be a nonempty subset of 1..4")
            if dur <= 0:
                raise ConfigError("event durations must be positive")
            if onset < prev_onset:
                raise ConfigError("events must be sorted by onset")
            prev_onset = onset
            last_off = max(last_off, onset + dur)
        if self.repeat_period is not None and self.repeat_period < last_off:
            raise ConfigError("repeat period must cover the last event offset")
        object.__setattr__(self, "events", events)


def quat_rotate(orientation, vectors):
    """Rotate row vectors by a unit quaternion given as (w, x, y, z)."""
    w, x, y, z = orientation
    return Rotation.from_quat([x, y, z, w]).apply(vectors)


def _pad_corners(position, orientation, pad):
    half = 0.5 * pad.side
    quads = list(_CORNER_SIGNS)
    local = np.array([[sx * half, sy * half, 0.0]
                      for sx, sy in (_CORNER_SIGNS[q] for q in quads)])
    world = np.asarray(position, dtype=float) + quat_rotate(orientation, local)
    return dict(zip(quads, world))


def _corner_depth_m(point, scene_object):
    lo = np.asarray(scene_object.aabb_min)
    hi = np.asarray(scene_object.aabb_max)
    margin = np.minimum(point - lo, hi - point)
    # inside: distance to the nearest face; outside: some margin is negative
    return max(0.0, float(margin.min()))


def quadrant_indentation(position, orientation, pad=None, scene_object=None):
    """Penetration depth in mm of each quadrant's outer corner, indexed by chamber.

    A corner inside the box scores its distance to the nearest face; a corner
    outside scores zero.
    """
    if scene_object is None:
        raise ConfigError("a scene object is required")
    pad = ContactPad() if pad is None else pad
    corners = _pad_corners(position, orientation, pad)
    depths = np.zeros(4)
    for quad, chamber in pad.quadrant_map.items():
        depths[chamber - 1] = 1000.0 * _corner_depth_m(corners[quad], scene_object)
    return depths


def scene_indentation(position, orientation, pad, objects):
    """Per-chamber depth (mm) and material over a list of boxes.

    Each quadrant reports its deepest penetration; the material tag comes from
    that box. Quadrants clear of every box report Neutral.
    """
    pad = ContactPad() if pad is None else pad
    corners = _pad_corners(position, orientation, pad)
    depths = np.zeros(4)
    materials = [NEUTRAL] * 4
    for obj in objects:
        for quad, chamber in pad.quadrant_map.items():
            d = 1000.0 * _corner_depth_m(corners[quad], obj)
            if d > depths[chamber - 1]:
                depths[chamber - 1] = d
                materials[chamber - 1] = obj.material
    return depths, materials


def ema(prev, x, alpha):
    """One exponential-moving-average update, componentwise."""
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("EMA alpha must lie in (0, 1]")
    return alpha * x + (1.0 - alpha) * prev


def contact_mask(depths_mm, threshold_mm=CONTACT_THRESHOLD_MM):
    """Chambers whose quadrant depth strictly exceeds the contact threshold."""
    return frozenset(i + 1 for i, d in enumerate(depths_mm) if d > threshold_mm)


def dominant_direction(velocity, threshold=SLIDING_THRESHOLD_M_S):
    """Axis-aligned direction of the filtered tangential velocity, m/s.

    Returns None when the tangential speed does not strictly exceed the
    threshold. Exact ties between components resolve to the horizontal axis.
    """
    vx, vy = float(velocity[0]), float(velocity[1])
    if not (math.isfinite(vx) and math.isfinite(vy)):
        raise DomainError("velocity must be finite")
    if math.hypot(vx, vy) <= threshold:
        return None
    if abs(vx) >= abs(vy):
        return "Right" if vx > 0 else "Left"
    return "Up" if vy > 0 else "Down"


def sliding_schedule(direction, pairs=True, quadrant_map=None):
    """Sequential-actuation schedule for a translation or rotation percept.

    Translations actuate the trailing chamber group at t=0 and the leading
    group 100 ms later, 200 ms each, repeating every 800 ms. Rotations walk
    single chambers around the pad ring at 100 ms spacing, 200 ms each,
    repeating every 1000 ms. With pairs=False a translation group collapses
    to its first-listed quadrant.
    """
    qmap = ContactPad(quadrant_map=quadrant_map).quadrant_map
    columns = {"left": ("FL", "BL"), "right": ("FR", "BR")}
    rows = {"front": ("FL", "FR"), "back": ("BL", "BR")}

    def group(quads):
        chosen = quads if pairs else quads[:1]
        return frozenset(qmap[q] for q in chosen)

    if direction in TRANSLATIONS:
        trailing, leading = {
            "Right": (columns["left"], columns["right"]),
            "Left": (columns["right"], columns["left"]),
            "Up": (rows["back"], rows["front"]),
            "Down": (rows["front"], rows["back"]),
        }[direction]
        events = ((group(trailing), 0.0, 0.2), (group(leading), 0.1, 0.2))
        return StimulusSchedule(events, repeat_period=0.8, mode="sliding")
    if direction in ROTATIONS:
        ring = ("FL", "FR", "BR", "BL")
        if direction == "CCW":
            ring = ring[::-1]
        events = tuple((frozenset({qmap[q]}), 0.1 * i, 0.2)
                       for i, q in enumerate(ring))
        return StimulusSchedule(events, repeat_period=1.0, mode="sliding")
    raise DomainError(f"unknown direction {direction!r}")


def active_chambers(schedule, t):
    """Chamber set the schedule commands open at time t since its start."""
    if t < 0:
        return frozenset()
    phase = t if schedule.repeat_period is None else math.fmod(t, schedule.repeat_period)
    out = set()
    for chambers, onset, duration in schedule.events:
        if onset <= phase < onset + duration:
            out |= chambers
    return frozenset(out)


def vibro_drive(material, active, t, phase_origin=0.0):
    """Per-chamber boolean drive for material-coded vibration.

    Active chambers share one 50%-duty square wave at the material frequency,
    high at the phase origin. Neutral or an empty active set yields all-off.
    """
    if material != NEUTRAL and material not in MATERIAL_FREQUENCY_HZ:
        raise ProtocolError(f"unknown material id {material}")
    if material == NEUTRAL or not active:
        return (False, False, False, False)
    freq = MATERIAL_FREQUENCY_HZ[material]
    high = math.floor((t - phase_origin) * 2.0 * freq) % 2 == 0
    return tuple(high and (c in active) for c in (1, 2, 3, 4))


def compose_frame(depths_mm, materials, velocity_m_s, angular_speed, seq, t):
    """Pack one render tick into a wire frame (velocities converted to mm/s)."""
    v_mm = np.asarray(velocity_m_s, dtype=float) * 1000.0
    return make_frame(seq, int(round(t * 1000.0)), depths_mm, materials,
                      v_mm, angular_speed)


def angular_speed_between(q_prev, q_next, dt):
    """Geodesic rotation angle between two orientations divided by dt, rad/s."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    dot = abs(sum(a * b for a, b in zip(q_prev, q_next)))
    return 2.0 * math.acos(min(1.0, dot)) / dt


def render_frames(samples, objects, pad=None, state=None, seq_start=0):
    """Render one HapticFrame per trajectory sample.

    Velocities are backward differences between consecutive samples passed
    through the EMA filters; the first frame carries the filter's initial
    state. Trajectories are expected at the frame cadence (bundled assets use
    50 Hz).
    """
    pad = ContactPad() if pad is None else pad
    state = FilterState() if state is None else state
    frames = []
    prev = None
    for i, sample in enumerate(samples):
        if prev is not None:
            dt = sample.timestamp - prev.timestamp
            raw_v = (np.asarray(sample.position) - np.asarray(prev.position)) / dt
            raw_w = angular_speed_between(prev.orientation, sample.orientation, dt)
            state.velocity = ema(state.velocity, raw_v, state.alpha_linear)
            state.angular_speed = ema(state.angular_speed, raw_w, state.alpha_angular)
        depths, materials = scene_indentation(sample.position, sample.orientation,
                                              pad, objects)
        frames.append(compose_frame(depths, materials, state.velocity,
                                    state.angular_speed, seq_start + i,
                                    sample.timestamp))
        prev = sample
    return frames


def load_scene(path):
    """Read a JSON list of {min, max, material} boxes."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, list):
        raise ConfigError("scene file must be a JSON list of objects")
    objects = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise ConfigError(f"scene object {i}: expected a JSON object")
        try:
            material = item.get("material", "Neutral")
            if isinstance(material, str):
                if material not in MATERIAL_IDS:
                    raise ConfigError(f"unknown material {material!r}")
                material = MATERIAL_IDS[material]
            objects.append(SceneObject(tuple(item["min"]), tuple(item["max"]),
                                       int(material)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"scene object {i}: {exc}") from exc
        except ConfigError as exc:
            raise ConfigError(f"scene object {i}: {exc}") from exc
    if not objects:
        raise ConfigError("scene file lists no objects")
    return objects


def load_trajectory(path):
    """Read a pose CSV with columns time_s,px,py,pz,qw,qx,qy,qz."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise ConfigError("trajectory line 1: expected header "
                              + ",".join(TRAJECTORY_HEADER))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 8:
                raise ConfigError(f"trajectory line {lineno}: expected 8 columns")
            try:
                vals = [float(cell) for cell in row]
            except ValueError as exc:
                raise ConfigError(f"trajectory line {lineno}: {exc}") from exc
            try:
                sample = HandSample(tuple(vals[1:4]), tuple(vals[4:8]), vals[0])
            except DomainError as exc:
                raise ConfigError(f"trajectory line {lineno}: {exc}") from exc
            if samples and sample.timestamp <= samples[-1].timestamp:
                raise ConfigError(f"trajectory line {lineno}: time must increase")
            samples.append(sample)
    if len(samples) < 2:
        raise ConfigError("trajectory needs at least 2 samples")
    return samples
