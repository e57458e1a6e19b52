"""Time-domain emulation of pump, valves, and chamber pressure.

Each chamber relaxes exponentially toward its target: the pump supply while
its valve is energized (time constant tau_up), atmosphere when de-energized
(tau_down). The update is the exact solution of the first-order ODE, so step
size only limits event timing, not integration accuracy. Pump capacity is
enforced by clamping the equivalent free-air inflow

    V_air = (1 + P/P_atm) * A(H) * L,   dV_air/dt <= max_flow

shared proportionally between the two chambers fed by one pump.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DomainError
from .statics import ARC, ActuatorGeometry, blocked_force, chamber_volume

ATMOSPHERE = 101325.0  # Pa

LN9 = math.log(9.0)  # 10-90% span of a first-order response, in time constants


@dataclass(frozen=True)
class PumpModel:
    """Duty-cycle to pressure map plus a free-air flow capacity."""

    duties: tuple = (0.0, 1.0)
    pressures: tuple = (0.0, 64e3)       # Pa
    max_flow: float = 0.8e-3 / 60.0      # m^3/s free air (0.8 L/min per pump)

    def __post_init__(self):
        d = np.asarray(self.duties, float)
        p = np.asarray(self.pressures, float)
        if d.ndim != 1 or d.shape != p.shape or len(d) < 2:
            raise ConfigError("pump table needs matching duty/pressure vectors, >= 2 points")
        if d[0] != 0.0 or d[-1] != 1.0:
            raise ConfigError("pump duty table must span [0, 1]")
        if np.any(np.diff(d) <= 0) or np.any(np.diff(p) < 0) or np.any(p < 0):
            raise ConfigError("pump table must be monotone non-decreasing")
        if self.max_flow <= 0:
            raise ConfigError("pump max_flow must be positive")

    @classmethod
    def from_csv(cls, path, max_flow=0.8e-3 / 60.0):
        """Load a duty->pressure table from CSV with header duty,pressure_pa."""
        duties, pressures = [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"duty", "pressure_pa"}.issubset(reader.fieldnames):
                raise ConfigError(f"{path}: expected header duty,pressure_pa")
            for i, row in enumerate(reader):
                try:
                    duties.append(float(row["duty"]))
                    pressures.append(float(row["pressure_pa"]))
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"{path}: bad value on data row {i + 1}") from exc
        order = np.argsort(duties)
        return cls(duties=tuple(np.asarray(duties)[order]),
                   pressures=tuple(np.asarray(pressures)[order]),
                   max_flow=max_flow)


def pump_pressure(duty, pump: PumpModel) -> float:
    """Supply pressure at a PWM duty cycle (piecewise-linear in the pump table)."""
    if duty < 0.0 or duty > 1.0:
        raise DomainError("duty must be in [0, 1]")
    return float(np.interp(duty, pump.duties, pump.pressures))


@dataclass(frozen=True)
class DynamicsParams:
    """First-order inflate/vent time constants and the emulator step."""

    tau_up: float = 29.13e-3   # s; 10-90% rise of 64 ms
    tau_down: float = 5.01e-3  # s; 90-10% fall of 11 ms
    dt: float = 1e-3           # s

    def __post_init__(self):
        if self.tau_up <= 0 or self.tau_down <= 0:
            raise ConfigError("time constants must be positive")
        if self.dt <= 0 or self.dt > self.tau_down / 2:
            raise ConfigError("dt must satisfy 0 < dt <= tau_down/2")

    @classmethod
    def bandwidth_calibrated(cls, dt=1e-3):
        """Preset with tau_up tuned so the default sweep measures a 7.1 Hz bandwidth."""
        return cls(tau_up=TAU_UP_BANDWIDTH_CAL, tau_down=5.01e-3, dt=dt)


# tau_up for which the stock 1-100 Hz square-drive sweep, analyzed by the
# lock-in/Bode pipeline, lands its -3 dB crossing at 7.1 Hz.
TAU_UP_BANDWIDTH_CAL = 32.446e-3


@dataclass(frozen=True)
class ChamberState:
    """Snapshot of one chamber: gauge pressure, constrained height, valve, time."""

    pressure: float = 0.0      # Pa
    height: float = 0.5e-3     # m, set by the external constraint
    valve_open: bool = False
    time: float = 0.0          # s


def _flow_limited_rise(p_old, p_new, dt, volume, max_flow):
    """Clamp a pressure rise so equivalent free-air inflow stays within max_flow."""
    dv_air = volume * (p_new - p_old) / ATMOSPHERE
    budget = max_flow * dt
    if dv_air <= budget:
        return p_new
    return p_old + budget * ATMOSPHERE / volume


def step(state: ChamberState, valve_open: bool, supply: float, dt: float,
         params: DynamicsParams, geom: ActuatorGeometry,
         max_flow: float | None = None) -> ChamberState:
    """Advance one chamber by dt with the valve held in the given state.

    With the valve open the chamber tracks the supply; closed, it vents to
    atmosphere. The exponential update is exact for any dt (semigroup), so a
    single long step equals many short ones while the flow limit is slack.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if supply < 0:
        raise DomainError("supply pressure must be non-negative")
    if valve_open:
        target = supply
        tau = params.tau_up if supply >= state.pressure else params.tau_down
    else:
        target = 0.0
        tau = params.tau_down
    p_new = target + (state.pressure - target) * math.exp(-dt / tau)
    if p_new > state.pressure and max_flow is not None:
        vol = chamber_volume(state.height, geom)
        p_new = _flow_limited_rise(state.pressure, p_new, dt, vol, max_flow)
    return replace(state, pressure=p_new, valve_open=valve_open, time=state.time + dt)


@dataclass
class Trajectory:
    """Sampled (time, pressure, force, valve) record of one simulated drive."""

    time: np.ndarray
    pressure: np.ndarray
    force: np.ndarray
    valve: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_s", "pressure_pa", "force_n", "valve"])
            for t, p, f, v in zip(self.time, self.pressure, self.force, self.valve):
                writer.writerow([f"{t:.6f}", f"{p:.6f}", f"{f:.9f}", int(v)])


def simulate_drive(valve_waveform, supply, constrained_height, params: DynamicsParams,
                   geom: ActuatorGeometry, law=ARC, pump: PumpModel | None = None,
                   initial_pressure=0.0) -> Trajectory:
    """Run one chamber through a boolean valve waveform sampled at the emulator step.

    Returns the blocked-force trajectory at the constrained height. Pass a
    PumpModel to enforce its flow capacity; omit it for the ideal-supply case.
    """
    waveform = np.asarray(valve_waveform, dtype=bool)
    n = len(waveform)
    max_flow = pump.max_flow if pump is not None else None
    state = ChamberState(pressure=initial_pressure, height=constrained_height)
    pressures = np.empty(n)
    for i, v in enumerate(waveform):
        state = step(state, bool(v), supply, params.dt, params, geom, max_flow=max_flow)
        pressures[i] = state.pressure
    times = (np.arange(n) + 1) * params.dt
    forces = blocked_force(pressures, constrained_height, geom, law)
    return Trajectory(time=times, pressure=pressures,
                      force=np.asarray(forces, float), valve=waveform.astype(int))


# pump assignment: chambers 1,2 on pump A; 3,4 on pump B
DEFAULT_PUMP_MAP = {1: "A", 2: "A", 3: "B", 4: "B"}


class PneumaticSystem:
    """Four chambers fed by two pumps through binary valves.

    Mutable single-owner object: one driver advances it; `snapshot()` hands
    out immutable per-chamber states.
    """

    def __init__(self, geom: ActuatorGeometry = None, params: DynamicsParams = None,
                 pumps: dict | None = None, pump_map: dict | None = None,
                 heights=None):
        self.geom = geom if geom is not None else ActuatorGeometry()
        self.params = params if params is not None else DynamicsParams()
        self.pumps = pumps if pumps is not None else {"A": PumpModel(), "B": PumpModel()}
        self.pump_map = dict(pump_map) if pump_map is not None else dict(DEFAULT_PUMP_MAP)
        if heights is None:
            heights = [2.0e-3] * 4
        self.states = [ChamberState(pressure=0.0, height=h) for h in heights]
        self.time = 0.0

    @property
    def pressures(self):
        return tuple(s.pressure for s in self.states)

    def snapshot(self):
        return tuple(self.states)

    def step(self, valves, duties, dt):
        """Advance all chambers by dt given valve booleans and per-pump duty cycles.

        Inflating chambers that share a pump split its flow budget in
        proportion to their unconstrained demand.
        """
        if dt <= 0:
            raise DomainError("dt must be positive")
        supplies = {}
        for name, pump in self.pumps.items():
            supplies[name] = pump_pressure(duties.get(name, 0.0), pump)
        proposed = []
        for idx, state in enumerate(self.states):
            chamber = idx + 1
            supply = supplies[self.pump_map[chamber]]
            new = step(state, bool(valves[idx]), supply, dt, self.params, self.geom,
                       max_flow=None)
            proposed.append(new)
        # shared flow budget per pump
        final = list(proposed)
        for name, pump in self.pumps.items():
            members = [i for i in range(4) if self.pump_map[i + 1] == name]
            demands = {}
            for i in members:
                rise = proposed[i].pressure - self.states[i].pressure
                if rise > 0:
                    vol = chamber_volume(self.states[i].height, self.geom)
                    demands[i] = vol * rise / ATMOSPHERE
            total = sum(demands.values())
            budget = pump.max_flow * dt
            if total > budget and total > 0:
                scale = budget / total
                for i, dv in demands.items():
                    dp = dv * scale * ATMOSPHERE / chamber_volume(self.states[i].height, self.geom)
                    final[i] = replace(proposed[i], pressure=self.states[i].pressure + dp)
        self.states = final
        self.time += dt
        return self.pressures
