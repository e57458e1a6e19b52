"""Bench measurement algorithms: frequency sweeps, lock-in amplitude
extraction, Bode normalization, -3 dB bandwidth, 10-90% step metrics, and
durability cycling.

All analysis functions are pure and accept plain arrays, so they run equally
on emulator output and on imported lab CSVs. Lock-in windows must contain a
whole number of drive cycles; the sweep runner guarantees this by snapping
each requested frequency to f = m*fs/N with N the analysis window length in
samples and m the analyzed cycle count.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsParams, simulate_drive
from .errors import AnalysisError, ConfigError, DomainError
from .statics import ARC, ActuatorGeometry, blocked_force


@dataclass(frozen=True)
class SweepPlan:
    """Log-spaced frequency sweep description."""

    fmin: float = 1.0      # Hz
    fmax: float = 100.0    # Hz
    points: int = 30
    cycles: int = 10       # simulated cycles per frequency
    discard_first: bool = True

    def __post_init__(self):
        if not self.fmin < self.fmax:
            raise ConfigError("fmin must be below fmax")
        if self.fmin <= 0:
            raise ConfigError("frequencies must be positive")
        if self.points < 2:
            raise ConfigError("need at least 2 sweep points")
        if self.cycles < 2:
            raise ConfigError("need at least 2 cycles per point")


def sweep_frequencies(plan: SweepPlan) -> np.ndarray:
    """Log-spaced frequencies with exact endpoints."""
    freqs = np.geomspace(plan.fmin, plan.fmax, plan.points)
    freqs[0] = plan.fmin
    freqs[-1] = plan.fmax
    return freqs


def lockin_amplitude(signal, freq: float, sample_rate: float) -> float:
    """Amplitude of the `freq` component via quadrature correlation.

    The window must span a whole number of cycles; fractional windows leak
    and are rejected rather than tapered.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError("signal must be a 1-D array with >= 2 samples")
    if sample_rate <= 2 * freq:
        raise DomainError("sample rate must exceed twice the analysis frequency")
    n = len(x)
    cycles = n * freq / sample_rate
    if abs(cycles - round(cycles)) > 1e-6 or round(cycles) < 1:
        raise DomainError(
            f"window of {n} samples at {sample_rate} Hz spans {cycles:.6f} cycles "
            f"of {freq} Hz; a whole-cycle window is required")
    t = np.arange(n) / sample_rate
    w = 2 * math.pi * freq * t
    c = float(np.dot(x, np.cos(w)))
    s = float(np.dot(x, np.sin(w)))
    return (2.0 / n) * math.hypot(c, s)


@dataclass(frozen=True)
class BodeResult:
    """Normalized frequency response with its interpolated -3 dB crossing."""

    freqs: tuple        # Hz, strictly increasing
    gains_db: tuple     # normalized to the first point (0 dB reference)
    bandwidth_hz: float | None
    amplitudes: tuple | None = None  # raw lock-in amplitudes, if available

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.amplitudes is not None:
                writer.writerow(["freq_hz", "amplitude", "gain_db"])
                for f, a, g in zip(self.freqs, self.amplitudes, self.gains_db):
                    writer.writerow([f"{f:.9g}", f"{a:.9g}", f"{g:.9g}"])
            else:
                writer.writerow(["freq_hz", "gain_db"])
                for f, g in zip(self.freqs, self.gains_db):
                    writer.writerow([f"{f:.9g}", f"{g:.9g}"])

    def to_json(self, path=None):
        doc = {
            "freqs_hz": list(self.freqs),
            "gains_db": list(self.gains_db),
            "bandwidth_hz": self.bandwidth_hz,
        }
        if self.amplitudes is not None:
            doc["amplitudes"] = list(self.amplitudes)
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        return doc


def minus3db(freqs, gains_db) -> float | None:
    """First -3 dB crossing, linearly interpolated in log frequency."""
    f = np.asarray(freqs, dtype=float)
    g = np.asarray(gains_db, dtype=float)
    if f.ndim != 1 or f.shape != g.shape or len(f) < 1:
        raise DomainError("freqs and gains must be matching 1-D arrays")
    if np.any(np.diff(f) <= 0):
        raise DomainError("frequencies must be strictly increasing")
    if g[0] < -3.0:
        raise DomainError("response already below -3 dB at the reference point")
    for k in range(len(g)):
        if g[k] <= -3.0:
            if g[k] == -3.0:
                return float(f[k])
            # k >= 1 here because g[0] >= -3 and g[k] < -3
            frac = (-3.0 - g[k - 1]) / (g[k] - g[k - 1])
            return float(math.exp(math.log(f[k - 1])
                                  + frac * (math.log(f[k]) - math.log(f[k - 1]))))
    return None


def bode(freqs, amplitudes) -> BodeResult:
    """Normalize amplitudes to the first (lowest-frequency) point, in dB."""
    f = np.asarray(freqs, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if f.shape != a.shape or f.ndim != 1 or len(f) < 1:
        raise DomainError("freqs and amplitudes must be matching 1-D arrays")
    if np.any(a <= 0):
        raise DomainError("amplitudes must be positive (zero reference is undefined)")
    gains = 20.0 * np.log10(a / a[0])
    bw = minus3db(f, gains)
    return BodeResult(freqs=tuple(f), gains_db=tuple(gains),
                      bandwidth_hz=bw, amplitudes=tuple(a))


@dataclass(frozen=True)
class StepMetrics:
    rise_10_90: float   # s
    fall_90_10: float   # s
    steady_value: float

    def to_json(self, path=None):
        doc = {"rise_10_90_s": self.rise_10_90, "fall_90_10_s": self.fall_90_10,
               "steady_value": self.steady_value}
        if path is not None:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
        return doc


def _cross_up(t, v, level, start):
    idx = np.nonzero((t[:-1] >= start) & (v[:-1] < level) & (v[1:] >= level))[0]
    if len(idx) == 0:
        raise AnalysisError(f"signal never rises through {level:.6g}")
    i = idx[0]
    if v[i + 1] == v[i]:
        return float(t[i + 1])
    return float(t[i] + (t[i + 1] - t[i]) * (level - v[i]) / (v[i + 1] - v[i]))


def _cross_down(t, v, level, start):
    idx = np.nonzero((t[:-1] >= start) & (v[:-1] > level) & (v[1:] <= level))[0]
    if len(idx) == 0:
        raise AnalysisError(f"signal never falls through {level:.6g}")
    i = idx[0]
    if v[i + 1] == v[i]:
        return float(t[i + 1])
    return float(t[i] + (t[i + 1] - t[i]) * (level - v[i]) / (v[i + 1] - v[i]))


def step_metrics(time, values, on_time: float, off_time: float) -> StepMetrics:
    """10-90% rise and 90-10% fall times of a hold-and-release record.

    Steady state is the mean over the final 20% of the [on_time, off_time]
    hold window; crossing instants are linearly interpolated between samples.
    """
    t = np.asarray(time, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1 or len(t) < 4:
        raise DomainError("time and values must be matching 1-D arrays")
    if not on_time < off_time:
        raise DomainError("on_time must precede off_time")
    tail = (t >= off_time - 0.2 * (off_time - on_time)) & (t <= off_time)
    if not np.any(tail):
        raise AnalysisError("no samples in the steady-state window")
    steady = float(np.mean(v[tail]))
    if steady <= 0:
        raise AnalysisError("steady-state value is not positive")
    lo, hi = 0.1 * steady, 0.9 * steady
    t10 = _cross_up(t, v, lo, on_time)
    t90 = _cross_up(t, v, hi, on_time)
    t90f = _cross_down(t, v, hi, off_time)
    t10f = _cross_down(t, v, lo, off_time)
    return StepMetrics(rise_10_90=t90 - t10, fall_90_10=t10f - t90f, steady_value=steady)


def run_step(params: DynamicsParams = None, geom: ActuatorGeometry = None,
             supply: float = 64e3, height: float = 0.5e-3, hold: float = 3.0,
             vent: float = 0.5, law=ARC):
    """Open-hold-vent experiment on the emulator; returns (trajectory, metrics)."""
    params = params if params is not None else DynamicsParams()
    geom = geom if geom is not None else ActuatorGeometry()
    n_hold = round(hold / params.dt)
    n_vent = round(vent / params.dt)
    waveform = np.concatenate([np.ones(n_hold, bool), np.zeros(n_vent, bool)])
    traj = simulate_drive(waveform, supply, height, params, geom, law=law)
    metrics = step_metrics(traj.time, traj.force, on_time=0.0, off_time=n_hold * params.dt)
    return traj, metrics


def _square_drive(n_total: int, m_cycles: int, n_window: int) -> np.ndarray:
    # Bresenham square wave: exactly m_cycles cycles per n_window samples,
    # integer arithmetic so edges never drift
    i = np.arange(n_total, dtype=np.int64)
    return ((2 * m_cycles * i) // n_window) % 2 == 0


def run_sweep(params: DynamicsParams = None, geom: ActuatorGeometry = None,
              plan: SweepPlan = None, supply: float = 64e3, height: float = 0.5e-3,
              sample_rate: float = 5000.0, law=ARC) -> BodeResult:
    """Square-valve-drive frequency sweep analyzed by lock-in, as a Bode result.

    Each requested frequency is snapped to f = m*fs/N so the analysis window
    holds exactly m cycles (m = cycles - 1 when the first cycle is discarded).
    """
    params = params if params is not None else DynamicsParams()
    geom = geom if geom is not None else ActuatorGeometry()
    plan = plan if plan is not None else SweepPlan()
    if sample_rate <= 0:
        raise ConfigError("sample_rate must be positive")
    # re-step the emulator at the sweep's own sampling rate
    params = DynamicsParams(tau_up=params.tau_up, tau_down=params.tau_down,
                            dt=1.0 / sample_rate)
    m = plan.cycles - 1 if plan.discard_first else plan.cycles
    snapped = []
    amplitudes = []
    for f_req in sweep_frequencies(plan):
        n_window = round(m * sample_rate / f_req)
        if n_window < 4 * m:
            raise DomainError(f"{f_req:.3g} Hz is too fast for {sample_rate} Hz sampling")
        f = m * sample_rate / n_window
        n_discard = int(math.ceil(n_window / m)) * (plan.cycles - m)
        waveform = _square_drive(n_discard + n_window, m, n_window)
        traj = simulate_drive(waveform, supply, height, params, geom, law=law)
        window = traj.force[n_discard:]
        amplitudes.append(lockin_amplitude(window, f, sample_rate))
        snapped.append(f)
    return bode(np.asarray(snapped), np.asarray(amplitudes))


@dataclass(frozen=True)
class DurabilityReport:
    """Per-cycle peaks and drift relative to the cycle-2 baseline."""

    peak_force: tuple     # N, one per cycle
    peak_pressure: tuple  # Pa, one per cycle
    max_drift: float      # max |relative force drift| over cycles >= 2

    def to_json(self, path=None):
        doc = {"cycles": len(self.peak_force),
               "peak_force_n": list(self.peak_force),
               "peak_pressure_pa": list(self.peak_pressure),
               "baseline_cycle": 2,
               "max_drift": self.max_drift}
        if path is not None:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2)
                fh.write("\n")
        return doc

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cycle", "peak_force_n", "peak_pressure_pa"])
            for k, (f, p) in enumerate(zip(self.peak_force, self.peak_pressure), start=1):
                writer.writerow([k, f"{f:.9g}", f"{p:.9g}"])


def durability_run(cycles: int = 1000, peak_pressure: float = 60e3, period: float = 4.0,
                   height: float = 0.5e-3, geom: ActuatorGeometry = None, law=ARC,
                   wear_per_cycle: float = 0.0, samples_per_cycle: int = 200) -> DurabilityReport:
    """Prescribed sinusoidal pressure cycling with an optional wear multiplier.

    Pressure follows peak/2 * (1 - cos(2*pi*t/period)) so each cycle starts
    and peaks exactly at 0 and peak_pressure. Wear scales the force of cycle
    n by (1 - wear_per_cycle)**(n-1). Drift is reported against the cycle-2
    baseline, past the first-cycle transient by convention.
    """
    geom = geom if geom is not None else ActuatorGeometry()
    if cycles < 2:
        raise AnalysisError("durability drift needs at least 2 cycles")
    if not 0 <= wear_per_cycle < 1:
        raise DomainError("wear_per_cycle must be in [0, 1)")
    if samples_per_cycle < 8 or samples_per_cycle % 2:
        raise ConfigError("samples_per_cycle must be even and >= 8")
    phase = np.arange(samples_per_cycle) / samples_per_cycle
    pressure = peak_pressure / 2 * (1 - np.cos(2 * math.pi * phase))
    force_cycle = np.asarray(blocked_force(pressure, height, geom, law), dtype=float)
    wear = (1.0 - wear_per_cycle) ** np.arange(cycles)
    peak_f = float(force_cycle.max()) * wear
    peak_p = np.full(cycles, float(pressure.max()))
    baseline = peak_f[1]
    drift = np.abs(peak_f[1:] - baseline) / baseline
    return DurabilityReport(peak_force=tuple(peak_f), peak_pressure=tuple(peak_p),
                            max_drift=float(drift.max()))


def load_force_csv(path):
    """Read a lab record CSV with header time_s,force_n[,pressure_pa]."""
    times, forces, pressures = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"time_s", "force_n"}.issubset(reader.fieldnames):
            raise ConfigError(f"{path}: expected header time_s,force_n[,pressure_pa]")
        has_pressure = "pressure_pa" in reader.fieldnames
        for i, row in enumerate(reader):
            try:
                times.append(float(row["time_s"]))
                forces.append(float(row["force_n"]))
                if has_pressure:
                    pressures.append(float(row["pressure_pa"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad value on data row {i + 1}") from exc
    if len(times) < 2:
        raise ConfigError(f"{path}: need at least 2 samples")
    t = np.asarray(times)
    if np.any(np.diff(t) <= 0):
        raise ConfigError(f"{path}: time_s must be strictly increasing")
    return (t, np.asarray(forces), np.asarray(pressures) if has_pressure else None)
