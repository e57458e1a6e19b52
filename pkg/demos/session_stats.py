"""Statistics workflow on simulated session outcomes.

Builds response-time samples for two synthetic participant groups, checks
normality with Shapiro-Wilk, compares the groups with the Mann-Whitney U
test, and tests a set of per-participant accuracies against chance with a
one-sample t-test. Writes the samples as CSV.

    python3 demos/session_stats.py [--out DIR]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from pneuhaptics.stats import mann_whitney_u, one_sample_t, shapiro_wilk


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/session_stats")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # skewed response times, one group slower: lognormal shapes like these
    # are why the comparison below is rank-based
    rng = np.random.default_rng(12)
    rt_a = rng.lognormal(mean=0.0, sigma=0.35, size=14)
    rt_b = rng.lognormal(mean=0.3, sigma=0.35, size=14)
    with open(out / "response_times.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "rt_s"])
        writer.writerows([("a", f"{v:.6f}") for v in rt_a] +
                         [("b", f"{v:.6f}") for v in rt_b])

    sw_a = shapiro_wilk(rt_a)
    sw_b = shapiro_wilk(rt_b)
    print(f"normality (Shapiro-Wilk): group a W={sw_a.w:.3f} p={sw_a.p_value:.3f}, "
          f"group b W={sw_b.w:.3f} p={sw_b.p_value:.3f}")

    mwu = mann_whitney_u(rt_a, rt_b)
    print(f"group comparison (Mann-Whitney): U={mwu.u:.1f} "
          f"p={mwu.p_value:.4f} "
          f"(medians {np.median(rt_a):.2f} vs {np.median(rt_b):.2f} s)")

    # small-n exact branch on the same data, truncated
    exact = mann_whitney_u(rt_a[:6], rt_b[:6], method="exact")
    print(f"first 6 per group, exact enumeration: U={exact.u:.1f} "
          f"p={exact.p_value:.4f}")

    # accuracies of 8 synthetic participants on a 9-alternative task
    accuracy = rng.normal(0.82, 0.06, size=8).clip(0, 1)
    tt = one_sample_t(accuracy, 1 / 9)
    print(f"accuracy vs chance 1/9 (one-sample t, n=8): t={tt.t:.1f} "
          f"p={tt.p_value:.2e}")
    print(f"wrote {out}/response_times.csv")


if __name__ == "__main__":
    main()
