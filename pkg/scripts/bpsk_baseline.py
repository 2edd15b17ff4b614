#!/usr/bin/env python3
"""BPSK-over-AWGN sanity sweep: simulate the degenerate single-user,
single-carrier, unspread link and compare against 0.5*erfc(sqrt(Eb/N0)).
Exits nonzero if any point falls outside its 95% interval, so this doubles
as a quick end-to-end check of the noise calibration."""

import argparse
import sys

from mcmccdma.analysis import conditional_ber
from mcmccdma.harness import Scenario, run_scenario
from mcmccdma.txchain import LinkConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=20260817)
    parser.add_argument("--bits", type=int, default=200_000,
                        help="minimum bits per grid point")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    scenario = Scenario(
        name="bpsk-baseline",
        config=LinkConfig(users=1, substreams=1, carriers=1, walsh_order=1,
                          pn_length=7, oversampling=4),
        ebn0_grid=(0.0, 2.0, 4.0, 6.0, 8.0),
        min_errors=1, min_bits=args.bits, allow_small_min_errors=True,
        symbols_per_block=256, master_seed=args.seed)
    report = run_scenario(scenario, workers=args.workers)

    print("Eb/N0 dB      bits    measured      theory        ci95   inside")
    all_inside = True
    for r in report.records:
        theory = conditional_ber(10.0 ** (r.ebn0_db / 10.0))
        inside = abs(r.ber - theory) <= r.ci95
        all_inside &= inside
        print(f"{r.ebn0_db:8.1f}  {r.bits:8d}  {r.ber:.4e}  {theory:.4e}  "
              f"{r.ci95:.2e}   {'yes' if inside else 'NO'}")
    return 0 if all_inside else 1


if __name__ == "__main__":
    sys.exit(main())
