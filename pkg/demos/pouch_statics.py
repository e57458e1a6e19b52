"""Blocked-force tables for the fabric pouch actuator.

Sweeps gauge pressure at a fixed constrained height and height at a fixed
pressure, prints the headline numbers, and writes both sweeps as CSV.

    python3 demos/pouch_statics.py [--out DIR]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from pneuhaptics.statics import ActuatorGeometry, blocked_force, multi_chamber_force


def write_rows(path, header, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([f"{v:.6f}" for v in row])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/pouch_statics")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    geom = ActuatorGeometry()
    print(f"pouch: {geom.width * 1e3:.0f} x {geom.length * 1e3:.0f} mm, "
          f"{geom.chamber_count} chambers")

    # pressure sweep at a shallow constrained height: force grows linearly
    height = 0.5e-3
    pressures = np.linspace(0, 60e3, 61)
    forces = blocked_force(pressures, height, geom)
    write_rows(out / "force_vs_pressure.csv",
               ["pressure_pa", "force_n"], (pressures, forces))
    print(f"at H={height * 1e3:.1f} mm: F(30 kPa)={forces[30]:.2f} N, "
          f"F(60 kPa)={forces[60]:.2f} N")

    # height sweep at full supply: contact area shrinks as the pouch rounds,
    # vanishing at the free height 2W/pi (the model's domain edge)
    free_h = 2 * geom.width / np.pi
    heights = np.linspace(0, free_h, 84)
    forces_h = blocked_force(60e3, heights, geom)
    write_rows(out / "force_vs_height.csv",
               ["height_m", "force_n"], (heights, forces_h))
    print(f"at 60 kPa: F(H=0)={forces_h[0]:.2f} N, falling to "
          f"{forces_h[-1]:.2f} N at the free height {free_h * 1e3:.2f} mm")

    # chambers in parallel add exactly
    one = blocked_force(60e3, height, geom)
    four = multi_chamber_force(60e3, height, 4, geom)
    print(f"additivity: 4 x {one:.2f} N = {four:.2f} N "
          f"(exact: {four == 4 * one})")
    print(f"wrote {out}/force_vs_pressure.csv and force_vs_height.csv")


if __name__ == "__main__":
    main()
