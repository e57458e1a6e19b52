"""Command-line entry points for scripted, reproducible runs.

Subcommands: sim run, characterize sweep|step|durability, study run,
study analyze, serve. Every seeded run is bit-reproducible. Exit codes:
0 success, 2 validation, 3 I/O, 4 analysis.
"""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .characterization import (bode, durability_run, load_force_csv,
                               run_step, run_sweep, step_metrics)
from .dynamics import DynamicsParams
from .errors import AnalysisError, ConfigError, DomainError, ProtocolError
from .rig import run_simulation
from .study import (StudySession, TaskSpec, analyze, read_trial_log)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_ANALYSIS = 4

CONFIG_KEYS = {"seed", "out", "sense_sigma", "map_every_ms", "repetitions",
               "isi_s", "participant", "port", "host", "realtime"}


def _load_config(path):
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: expected a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {sorted(unknown)}")
    return doc


def _pick(args, config, name, builtin):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, builtin)


def _resolve_out(args, config, required=True):
    out = getattr(args, "out", None) or config.get("out") \
        or os.environ.get("HAPTICS_OUT")
    if out is None:
        if required:
            raise ConfigError("no output directory: pass --out or set HAPTICS_OUT")
        return None
    return Path(out)


def _guard_overwrite(out: Path, force: bool, names):
    if out is None or force:
        return
    clashes = [n for n in names if (out / n).exists()]
    if clashes:
        raise ConfigError(
            f"{out} already contains {clashes}; pass --force to overwrite")


# -- sim ----------------------------------------------------------------

def _cmd_sim_run(args, config):
    out = _resolve_out(args, config)
    _guard_overwrite(out, args.force, ["summary.json", "frames.csv",
                                       "commands.csv", "maps"])
    summary = run_simulation(
        args.scene, args.trajectory, args.mode, out,
        sense_sigma=_pick(args, config, "sense_sigma", 0.0),
        seed=_pick(args, config, "seed", 0),
        map_every_ms=_pick(args, config, "map_every_ms", 250))
    print(f"wrote {out}: {summary['frames_accepted']} frames, "
          f"{summary['map_files']} maps, {summary['duration_s']:.3f} s")
    return EXIT_OK


# -- characterize -------------------------------------------------------

def _write_or_print(doc, out, name):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _cmd_characterize_step(args, config):
    out = _resolve_out(args, config, required=False)
    _guard_overwrite(out, args.force, ["step.json", "step.csv"])
    if args.import_csv is not None:
        time, force, _ = load_force_csv(args.import_csv)
        if args.off_time is None:
            raise ConfigError("--import step data needs --off-time")
        metrics = step_metrics(time, force, on_time=args.on_time,
                               off_time=args.off_time)
        traj = None
    else:
        traj, metrics = run_step()
    print(f"rise_10_90 {metrics.rise_10_90 * 1000:.2f} ms, "
          f"fall_90_10 {metrics.fall_90_10 * 1000:.2f} ms, "
          f"steady {metrics.steady_value:.3f} N")
    _write_or_print(metrics.to_json(), out, "step.json")
    if out is not None and traj is not None:
        traj.to_csv(out / "step.csv")
    return EXIT_OK


def _load_sweep_csv(path):
    freqs, amps = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"freq_hz", "amplitude"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise ConfigError(f"{path}: expected header freq_hz,amplitude")
        for i, row in enumerate(reader):
            try:
                freqs.append(float(row["freq_hz"]))
                amps.append(float(row["amplitude"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad value on data row {i + 1}") from exc
    if len(freqs) < 2:
        raise ConfigError(f"{path}: need at least 2 sweep points")
    return np.asarray(freqs), np.asarray(amps)


def _cmd_characterize_sweep(args, config):
    out = _resolve_out(args, config, required=False)
    _guard_overwrite(out, args.force, ["bode.json", "bode.csv"])
    if args.import_csv is not None:
        freqs, amps = _load_sweep_csv(args.import_csv)
        result = bode(freqs, amps)
    else:
        params = (DynamicsParams.bandwidth_calibrated() if args.calibrated
                  else None)
        result = run_sweep(params=params)
    if result.bandwidth_hz is None:
        print("no -3 dB crossing inside the sweep")
    else:
        print(f"bandwidth_hz {result.bandwidth_hz:.4f}")
    _write_or_print(result.to_json(), out, "bode.json")
    if out is not None:
        result.to_csv(out / "bode.csv")
    return EXIT_OK


def _load_cycles_csv(path):
    peaks_f, peaks_p = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "peak_force_n" not in reader.fieldnames:
            raise ConfigError(f"{path}: expected header cycle,peak_force_n[,peak_pressure_pa]")
        for i, row in enumerate(reader):
            try:
                peaks_f.append(float(row["peak_force_n"]))
                peaks_p.append(float(row.get("peak_pressure_pa") or "nan"))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad value on data row {i + 1}") from exc
    if len(peaks_f) < 2:
        raise ConfigError(f"{path}: durability drift needs at least 2 cycles")
    return peaks_f, peaks_p


def _cmd_characterize_durability(args, config):
    from .characterization import DurabilityReport
    out = _resolve_out(args, config, required=False)
    _guard_overwrite(out, args.force, ["durability.json", "durability.csv"])
    if args.import_csv is not None:
        peaks_f, peaks_p = _load_cycles_csv(args.import_csv)
        baseline = peaks_f[1]
        drift = max(abs(f - baseline) / baseline for f in peaks_f[1:])
        report = DurabilityReport(peak_force=tuple(peaks_f),
                                  peak_pressure=tuple(peaks_p),
                                  max_drift=float(drift))
    else:
        report = durability_run(cycles=args.cycles,
                                wear_per_cycle=args.wear)
    print(f"cycles {len(report.peak_force)}, max_drift {report.max_drift:.6g}")
    _write_or_print(report.to_json(), out, "durability.json")
    if out is not None:
        report.to_csv(out / "durability.csv")
    return EXIT_OK


# -- study --------------------------------------------------------------

def _cmd_study_run(args, config):
    out = _resolve_out(args, config)
    _guard_overwrite(out, args.force, ["trials.jsonl", "commands.csv",
                                       "report.json", "confusion.csv"])
    if args.responder == "console":
        raise ConfigError("console responder needs the session service: "
                          "run `pneuhaptics serve` and use the web console")
    spec = TaskSpec(args.task,
                    repetitions=_pick(args, config, "repetitions", 5),
                    isi_s=_pick(args, config, "isi_s", 2.0))
    session = StudySession(
        spec, seed=_pick(args, config, "seed", 0),
        participant=_pick(args, config, "participant", "observer"),
        sense_sigma=_pick(args, config, "sense_sigma", 0.0))
    records = session.run()
    session.write_logs(out)
    report = analyze(records)
    (out / "report.json").write_text(report.to_json())
    (out / "confusion.csv").write_text(report.counts_csv())
    print(f"{len(records)} trials, accuracy {report.accuracy_mean:.4f}, "
          f"abstains {session.abstains}, wrote {out}")
    return EXIT_OK


def _cmd_study_analyze(args, config):
    records = []
    for path in args.infile:
        records.extend(read_trial_log(path))
    report = analyze(records)
    out = _resolve_out(args, config, required=False)
    _guard_overwrite(out, args.force, ["report.json", "confusion.csv"])
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json())
        (out / "confusion.csv").write_text(report.counts_csv())
    sys.stdout.write(report.to_json())
    return EXIT_OK


# -- serve --------------------------------------------------------------

def _cmd_serve(args, config):
    import uvicorn

    from .service import create_app
    out = _resolve_out(args, config, required=False)
    app = create_app(out_dir=out,
                     realtime=_pick(args, config, "realtime", False))
    uvicorn.run(app, host=_pick(args, config, "host", "127.0.0.1"),
                port=_pick(args, config, "port", 8000), log_level="warning")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pneuhaptics",
        description="Software twin of a four-chamber pneumatic fingertip "
                    "haptic device")
    parser.add_argument("--config", help="JSON file with default options")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="scene-driven pipeline runs")
    sim_sub = sim.add_subparsers(dest="subcommand", required=True)
    run = sim_sub.add_parser("run", help="render a scene+trajectory through "
                                         "the full pipeline")
    run.add_argument("--scene", required=True)
    run.add_argument("--trajectory", required=True)
    run.add_argument("--mode", required=True,
                     choices=["contact", "sliding", "vibro"])
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--sense-sigma", type=float, dest="sense_sigma")
    run.add_argument("--map-every-ms", type=int, dest="map_every_ms")
    run.add_argument("--force", action="store_true")
    run.set_defaults(func=_cmd_sim_run)

    char = sub.add_parser("characterize", help="actuator characterization")
    char_sub = char.add_subparsers(dest="subcommand", required=True)
    sweep = char_sub.add_parser("sweep", help="frequency sweep -> Bode")
    sweep.add_argument("--import", dest="import_csv",
                       help="analyze a lab CSV (freq_hz,amplitude) instead")
    sweep.add_argument("--calibrated", action="store_true",
                       help="use the bandwidth-calibrated time constants")
    sweep.add_argument("--out")
    sweep.add_argument("--force", action="store_true")
    sweep.set_defaults(func=_cmd_characterize_sweep)
    step = char_sub.add_parser("step", help="step response metrics")
    step.add_argument("--import", dest="import_csv",
                      help="analyze a lab CSV (time_s,force_n) instead")
    step.add_argument("--on-time", type=float, default=0.0, dest="on_time")
    step.add_argument("--off-time", type=float, dest="off_time")
    step.add_argument("--out")
    step.add_argument("--force", action="store_true")
    step.set_defaults(func=_cmd_characterize_step)
    dur = char_sub.add_parser("durability", help="cycling drift report")
    dur.add_argument("--import", dest="import_csv",
                     help="analyze a lab CSV (cycle,peak_force_n) instead")
    dur.add_argument("--cycles", type=int, default=1000)
    dur.add_argument("--wear", type=float, default=0.0)
    dur.add_argument("--out")
    dur.add_argument("--force", action="store_true")
    dur.set_defaults(func=_cmd_characterize_durability)

    study = sub.add_parser("study", help="psychophysics sessions")
    study_sub = study.add_subparsers(dest="subcommand", required=True)
    srun = study_sub.add_parser("run", help="run a full session")
    srun.add_argument("--task", required=True,
                      choices=["patterns", "sliding", "vibro"])
    srun.add_argument("--responder", default="observer",
                      choices=["observer", "console"])
    srun.add_argument("--seed", type=int)
    srun.add_argument("--repetitions", type=int)
    srun.add_argument("--isi", type=float, dest="isi_s")
    srun.add_argument("--sense-sigma", type=float, dest="sense_sigma")
    srun.add_argument("--participant")
    srun.add_argument("--out")
    srun.add_argument("--force", action="store_true")
    srun.set_defaults(func=_cmd_study_run)
    sana = study_sub.add_parser("analyze", help="confusion matrix and stats "
                                               "from trial logs")
    sana.add_argument("--in", dest="infile", required=True, action="append",
                      help="trial JSONL (repeat for multiple participants)")
    sana.add_argument("--out")
    sana.add_argument("--force", action="store_true")
    sana.set_defaults(func=_cmd_study_analyze)

    serve = sub.add_parser("serve", help="run the session service")
    serve.add_argument("--port", type=int)
    serve.add_argument("--host")
    serve.add_argument("--realtime", action="store_true", default=None)
    serve.add_argument("--out")
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (ConfigError, DomainError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
