"""Scripted hand motion rendered all the way to tactile pressure maps.

Runs the bundled sliding scene through the full pipeline (renderer -> wire
frames -> receiver -> controller -> chamber emulator -> 6x6 sensor) and
leaves the frame log, valve command log, and periodic pressure maps (CSV +
PGM) in the output directory.

    python3 demos/trajectory_to_maps.py [--out DIR] [--mode MODE]
"""

import argparse
from importlib import resources

from pneuhaptics.rig import run_simulation


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/trajectory_to_maps")
    ap.add_argument("--mode", default="sliding",
                    choices=("contact", "sliding", "vibro"))
    ap.add_argument("--sigma", type=float, default=0.0,
                    help="sensor noise in kPa")
    args = ap.parse_args(argv)

    demos = resources.files("pneuhaptics") / "data" / "demos"
    scene = demos / f"{args.mode}_scene.json"
    trajectory = demos / f"{args.mode}_trajectory.csv"
    print(f"scene {scene.name}, trajectory {trajectory.name}, "
          f"mode {args.mode}")

    summary = run_simulation(scene, trajectory, args.mode, args.out,
                             sense_sigma=args.sigma, seed=0)
    for key in ("duration_s", "frames_sent", "frames_accepted",
                "map_files", "clamped_pixels"):
        print(f"  {key}: {summary[key]}")
    print(f"wrote {args.out}/frames.csv, commands.csv, summary.json and "
          f"{summary['map_files']} maps under {args.out}/maps/ "
          f"(.csv numeric, .pgm viewable)")


if __name__ == "__main__":
    main()
