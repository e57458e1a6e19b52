import math

import numpy as np
import pytest

from pneuhaptics.characterization import (
    BodeResult,
    SweepPlan,
    bode,
    durability_run,
    load_force_csv,
    lockin_amplitude,
    minus3db,
    run_step,
    run_sweep,
    step_metrics,
    sweep_frequencies,
)
from pneuhaptics.dynamics import DynamicsParams
from pneuhaptics.errors import AnalysisError, ConfigError, DomainError
from pneuhaptics.statics import ActuatorGeometry, blocked_force


def test_sweep_frequencies_default():
    f = sweep_frequencies(SweepPlan())
    assert len(f) == 30
    assert f[0] == 1.0 and f[-1] == 100.0
    ratios = f[1:] / f[:-1]
    assert np.all(np.abs(ratios - ratios[0]) < 1e-9)


def test_sweep_frequencies_two_points():
    f = sweep_frequencies(SweepPlan(points=2))
    assert list(f) == [1.0, 100.0]


def test_sweep_plan_validation():
    with pytest.raises(ConfigError):
        SweepPlan(fmin=10.0, fmax=1.0)
    with pytest.raises(ConfigError):
        SweepPlan(points=1)
    with pytest.raises(ConfigError):
        SweepPlan(cycles=1)


def test_lockin_pure_tone_any_phase():
    fs, f, n = 1000.0, 10.0, 1000
    t = np.arange(n) / fs
    for phase in np.linspace(0, 2 * math.pi, 7):
        x = 2.0 * np.sin(2 * math.pi * f * t + phase)
        assert lockin_amplitude(x, f, fs) == pytest.approx(2.0, abs=1e-6)


def test_lockin_rejects_dc():
    fs, f, n = 1000.0, 10.0, 1000
    t = np.arange(n) / fs
    x = np.sin(2 * math.pi * f * t + 0.3)
    assert lockin_amplitude(x + 5.0, f, fs) == pytest.approx(lockin_amplitude(x, f, fs), abs=1e-6)


def test_lockin_phase_invariance_tight():
    fs, f, n = 2000.0, 8.0, 2000
    t = np.arange(n) / fs
    a0 = lockin_amplitude(np.sin(2 * math.pi * f * t), f, fs)
    a1 = lockin_amplitude(np.sin(2 * math.pi * f * t + 1.234), f, fs)
    assert abs(a0 - a1) < 1e-9


def test_lockin_snr20_mean_within_one_percent():
    fs, f = 1000.0, 10.0
    n = 1000  # 10 cycles
    t = np.arange(n) / fs
    clean = np.sin(2 * math.pi * f * t + 0.7)
    sigma = math.sqrt(0.5) / 10.0  # SNR 20 dB for unit amplitude
    estimates = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        estimates.append(lockin_amplitude(clean + rng.normal(0, sigma, n), f, fs))
    assert abs(np.mean(estimates) - 1.0) < 0.01


def test_lockin_window_guard():
    fs, f = 1000.0, 10.0
    x = np.zeros(1050)  # 10.5 cycles
    with pytest.raises(DomainError):
        lockin_amplitude(x, f, fs)
    with pytest.raises(DomainError):
        lockin_amplitude(np.zeros(100), 300.0, 500.0)  # beyond Nyquist


def test_bode_flat_response():
    res = bode([1.0, 10.0, 100.0], [2.0, 2.0, 2.0])
    assert all(g == 0.0 for g in res.gains_db)
    assert res.bandwidth_hz is None


def test_bode_halving_is_minus_6db():
    res = bode([1.0, 10.0], [2.0, 1.0])
    assert res.gains_db[1] == pytest.approx(-6.0206, abs=1e-3)


def test_bode_rejects_nonpositive_amplitude():
    with pytest.raises(DomainError):
        bode([1.0, 10.0], [0.0, 1.0])


def test_bode_first_order_tau20ms():
    tau = 20e-3
    freqs = sweep_frequencies(SweepPlan())
    amps = 1.0 / np.sqrt(1 + (2 * math.pi * freqs * tau) ** 2)
    res = bode(freqs, amps)
    assert res.bandwidth_hz == pytest.approx(1 / (2 * math.pi * tau), rel=0.02)


def test_minus3db_log_interpolation_example():
    f = minus3db([1.0, 5.0, 10.0], [0.0, -2.0, -4.0])
    assert f == pytest.approx(7.07, abs=0.01)


def test_minus3db_no_crossing():
    assert minus3db([1.0, 10.0, 100.0], [0.0, -1.0, -2.5]) is None


def test_minus3db_exact_sample():
    assert minus3db([1.0, 5.0, 10.0], [0.0, -3.0, -5.0]) == 5.0


def test_minus3db_bad_reference():
    with pytest.raises(DomainError):
        minus3db([1.0, 10.0], [-4.0, -5.0])


def test_minus3db_converges_with_density():
    # denser grids approach 1/(2*pi*tau) when fed DC-referenced gains
    tau = 20e-3
    true_bw = 1 / (2 * math.pi * tau)
    errs = []
    for n in (30, 300):
        freqs = sweep_frequencies(SweepPlan(points=n))
        gains = 20 * np.log10(1.0 / np.sqrt(1 + (2 * math.pi * freqs * tau) ** 2))
        errs.append(abs(minus3db(freqs, gains) - true_bw))
    assert errs[1] < errs[0]


def _exponential_record(tau_up, tau_down, fs, hold=3.0, vent=0.5, steady=10.0):
    t = np.arange(round((hold + vent) * fs)) / fs
    v = np.where(t <= hold,
                 steady * (1 - np.exp(-t / tau_up)),
                 steady * (1 - math.exp(-hold / tau_up)) * np.exp(-(t - hold) / tau_down))
    return t, v


def test_step_metrics_exponential_rise():
    t, v = _exponential_record(29.13e-3, 5.01e-3, 1000.0)
    m = step_metrics(t, v, on_time=0.0, off_time=3.0)
    assert m.rise_10_90 == pytest.approx(64e-3, abs=0.5e-3)
    assert m.fall_90_10 == pytest.approx(11e-3, abs=0.5e-3)
    assert m.steady_value == pytest.approx(10.0, rel=1e-6)


def test_step_metrics_instantaneous_step():
    fs = 1000.0
    t = np.arange(2000) / fs
    v = np.where(t >= 0.5, 10.0, 0.0)
    v = np.where(t >= 1.5, 0.0, v)
    m = step_metrics(t, v, on_time=0.4, off_time=1.45)
    assert m.rise_10_90 <= 1 / fs
    assert m.fall_90_10 <= 1 / fs


def test_step_metrics_sampling_rate_consistency():
    vals = []
    for fs in (1000.0, 10000.0):
        t, v = _exponential_record(29.13e-3, 5.01e-3, fs)
        m = step_metrics(t, v, on_time=0.0, off_time=3.0)
        vals.append((m.rise_10_90, m.fall_90_10))
    assert abs(vals[0][0] - vals[1][0]) < 1e-3
    assert abs(vals[0][1] - vals[1][1]) < 1e-3


def test_step_metrics_never_crossed():
    t = np.arange(100) / 100.0
    with pytest.raises(AnalysisError):
        step_metrics(t, np.full_like(t, 5.0), on_time=0.0, off_time=0.9)


def test_run_step_closure():
    traj, m = run_step()
    assert m.rise_10_90 == pytest.approx(64e-3, abs=2e-3)
    assert m.fall_90_10 == pytest.approx(11e-3, abs=1e-3)
    assert traj.force.max() > 0


def test_run_sweep_default_bandwidth_band():
    res = run_sweep()
    assert res.gains_db[0] == 0.0
    assert 5.0 <= res.bandwidth_hz <= 9.0


def test_durability_stateless_has_zero_drift():
    rep = durability_run(cycles=50)
    assert rep.max_drift == 0.0
    assert len(rep.peak_force) == 50
    assert rep.peak_pressure[0] == pytest.approx(60e3)


def test_durability_detects_injected_wear():
    rep = durability_run(cycles=1000, wear_per_cycle=1e-5)
    assert rep.max_drift == pytest.approx(0.01, abs=0.0005)


def test_durability_needs_two_cycles():
    with pytest.raises(AnalysisError):
        durability_run(cycles=1)


def test_durability_peak_force_matches_statics():
    geom = ActuatorGeometry()
    rep = durability_run(cycles=3, height=0.5e-3, geom=geom)
    assert rep.peak_force[0] == pytest.approx(blocked_force(60e3, 0.5e-3, geom), rel=1e-12)


def test_bode_result_files(tmp_path):
    res = bode([1.0, 10.0], [2.0, 1.0])
    csv_path = tmp_path / "bode.csv"
    res.to_csv(csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "freq_hz,amplitude,gain_db"
    assert len(lines) == 3
    doc = res.to_json(tmp_path / "bode.json")
    assert doc["bandwidth_hz"] is None or isinstance(doc["bandwidth_hz"], float)
    assert (tmp_path / "bode.json").exists()


def test_load_force_csv(tmp_path):
    path = tmp_path / "lab.csv"
    path.write_text("time_s,force_n\n0.0,0.0\n0.001,1.0\n0.002,2.0\n")
    t, f, p = load_force_csv(path)
    assert len(t) == 3 and p is None
    assert f[2] == 2.0


def test_load_force_csv_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time_s,force_n\n0.0,0.0\n0.001,oops\n")
    with pytest.raises(ConfigError, match="row 2"):
        load_force_csv(path)


def test_load_force_csv_requires_monotone_time(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time_s,force_n\n0.0,0.0\n0.0,1.0\n")
    with pytest.raises(ConfigError):
        load_force_csv(path)
