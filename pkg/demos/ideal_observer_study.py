"""Closed-loop psychophysics session with the ideal observer.

Runs a pattern-identification block twice, noise-free and with 5% full-scale
sensor noise, decodes every stimulus from the simulated 6x6 maps, and prints
the confusion matrix and accuracy against chance. Writes trial logs, the
analysis report, and the confusion counts.

    python3 demos/ideal_observer_study.py [--out DIR] [--repetitions N]
"""

import argparse
from pathlib import Path

from pneuhaptics.sensing import FULL_SCALE_KPA
from pneuhaptics.study import StudySession, TaskSpec, analyze


def run_block(spec, seed, sigma, participant):
    session = StudySession(spec, seed=seed, participant=participant,
                           sense_sigma=sigma)
    session.run()
    return session


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/ideal_observer_study")
    ap.add_argument("--repetitions", type=int, default=2)
    args = ap.parse_args(argv)
    out = Path(args.out)

    spec = TaskSpec("patterns", repetitions=args.repetitions, isi_s=0.5)
    print(f"task patterns: {spec.stimulus_count} stimuli x "
          f"{spec.repetitions} repetitions, 0.8 s observation window")

    clean = run_block(spec, seed=5, sigma=0.0, participant="observer-clean")
    clean.write_logs(out / "clean")
    report = analyze(clean.records)
    print(f"noise-free: accuracy {report.accuracy_mean:.3f} "
          f"(chance {report.chance:.3f}), abstains {clean.abstains}")

    sigma = 0.05 * FULL_SCALE_KPA
    noisy = run_block(spec, seed=6, sigma=sigma, participant="observer-noisy")
    noisy.write_logs(out / "noisy")
    noisy_report = analyze(noisy.records)
    print(f"5% FS noise: accuracy {noisy_report.accuracy_mean:.3f}, "
          f"abstains {noisy.abstains}")

    (out / "report.json").write_text(noisy_report.to_json() + "\n")
    (out / "counts.csv").write_text(noisy_report.counts_csv())
    print("confusion counts (noisy block):")
    for line in noisy_report.counts_csv().splitlines():
        print(f"  {line}")
    print(f"mean correct response time {noisy_report.rt_mean_s:.2f} s "
          f"over {noisy_report.trial_count} trials")
    print(f"wrote {out}/clean/, {out}/noisy/, report.json, counts.csv")


if __name__ == "__main__":
    main()
