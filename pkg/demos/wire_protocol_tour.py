"""Tour of the 47-byte wire frame and the latest-wins receiver.

Encodes one frame and hexdumps it, demonstrates round-trip identity and
single-bit corruption rejection, then replays a seeded lossy/reordered
50 Hz stream through a receiver and prints its counters. Writes the stream
bookkeeping as CSV.

    python3 demos/wire_protocol_tour.py [--out DIR]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from pneuhaptics.protocol import (
    FRAME_SIZE,
    FrameReceiver,
    ProtocolError,
    decode,
    encode,
    make_frame,
)


def hexdump(data):
    for off in range(0, len(data), 16):
        chunk = data[off:off + 16]
        print(f"  {off:04x}  {' '.join(f'{b:02x}' for b in chunk)}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="demo_out/wire_protocol_tour")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    frame = make_frame(seq=7, timestamp_ms=140,
                       indentation_mm=(5.0, 0.0, 2.5, 0.0),
                       material_id=(1, 0, 2, 0),
                       velocity_mm_s=(20.0, 0.0, 0.0),
                       angular_velocity_rad_s=0.0)
    wire = encode(frame)
    print(f"encoded frame: {len(wire)} bytes (expected {FRAME_SIZE})")
    hexdump(wire)
    print(f"round-trip identity: {decode(wire) == frame}")

    # flip one bit anywhere and the CRC (or a header check) rejects it
    corrupt = bytearray(wire)
    corrupt[20] ^= 0x01
    try:
        decode(bytes(corrupt))
    except ProtocolError as exc:
        print(f"bit flip in byte 20 rejected: {type(exc).__name__}")

    # latest-wins: a 10 s stream at 50 Hz with 20% loss and adjacent swaps
    rng = np.random.default_rng(0)
    swap = np.random.default_rng(1)
    stream = [(i * 0.02, make_frame(i + 1, i * 20, (0.0,) * 4, (0,) * 4,
                                    (0.0, 0.0, 0.0), 0.0))
              for i in range(500) if rng.random() >= 0.2]
    k = 0
    while k + 1 < len(stream):
        if swap.random() < 0.3:
            (ta, fa), (tb, fb) = stream[k], stream[k + 1]
            stream[k], stream[k + 1] = (ta, fb), (tb, fa)
            k += 2
        else:
            k += 1

    rx = FrameReceiver()
    rows = []
    worst_gap, last_t = 0.0, 0.0
    for t, f in stream:
        accepted = rx.push(encode(f), arrival_time=t)
        if accepted is not None:
            worst_gap = max(worst_gap, t - last_t)
            last_t = t
        rows.append((t, f.seq, int(accepted is not None)))
    with open(out / "stream.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arrival_s", "seq", "accepted"])
        writer.writerows(rows)

    counters = rx.counters()
    print(f"delivered {len(stream)} of 500 frames; "
          f"accepted {counters['accepted']}, stale {counters['stale']}, "
          f"duplicates {counters['duplicates']}")
    print(f"worst acceptance gap {worst_gap * 1e3:.0f} ms "
          f"(frame period 20 ms)")
    print(f"wrote {out}/stream.csv")


if __name__ == "__main__":
    main()
