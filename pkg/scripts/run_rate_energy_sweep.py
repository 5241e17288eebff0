#!/usr/bin/env python3
"""Monte Carlo rate / harvested-power trade-off over the splitting ratio.

Sweeps the power-splitting ratio rho for one technique and channel,
writes the per-point metrics (with confidence intervals) to CSV, and
appends a provenance line to a JSON-lines manifest so the run can be
reproduced later.

Run from the repo root:

    python3 scripts/run_rate_energy_sweep.py --technique companding \\
        --channel rayleigh_flat --trials 40 --out out/
"""

import argparse
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from swiptsim.channel import CHANNEL_KINDS, ChannelSpec  # noqa: E402
from swiptsim.experiments import (  # noqa: E402
    TECHNIQUES,
    Scenario,
    append_manifest,
    sweep,
    sweep_to_csv,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--technique", choices=TECHNIQUES, default="companding")
    ap.add_argument("--channel", choices=CHANNEL_KINDS, default="awgn")
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--rho", type=float, nargs="+",
                    default=list(np.round(np.linspace(0.1, 0.9, 9), 3)))
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("out"))
    args = ap.parse_args()

    base = Scenario(
        name=f"rate-energy/{args.technique}/{args.channel}",
        technique=args.technique,
        channel=ChannelSpec(kind=args.channel),
        trials=args.trials,
        seed=args.seed,
    )
    result = sweep("rho", args.rho, base, threads=args.threads)

    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / f"rate_energy_{args.technique}_{args.channel}.csv"
    sweep_to_csv(result, csv_path,
                 comments=(f"technique={args.technique} channel={args.channel} "
                           f"trials={args.trials}",))
    append_manifest(args.out / "manifest.jsonl", result, base)

    print(f"{'rho':>6}{'rate b/s/Hz':>13}{'H_P/E':>10}{'eta3':>8}{'+-':>8}")
    for row in result.rows:
        m = row.metrics
        print(f"{row.axis_value:>6.2f}{m.rate_bps_hz:>13.3f}"
              f"{m.harvested_norm:>10.4f}{m.eta3:>8.4f}{row.ci('eta3'):>8.4f}")
    print(f"\nwrote {csv_path} and appended to {args.out / 'manifest.jsonl'}")


if __name__ == "__main__":
    main()
