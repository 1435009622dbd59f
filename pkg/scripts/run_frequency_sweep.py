#!/usr/bin/env python3
"""Closed-loop frequency response of the nominal sweep configuration.

Runs one sine-tracking simulation per frequency, extracts the gain at the
command frequency, and reports both cutoff estimators: the least-squares knee
of the two-segment gain model and the first 1/sqrt(2) crossing.
"""

import argparse
from pathlib import Path

from pneusim import analysis
from pneusim.cli import load_scenario

DEFAULT_OMEGAS = [0.14, 0.20, 0.30, 0.45, 0.68, 0.95, 1.35, 1.91, 2.70, 3.82, 5.40, 6.75]
SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "sweep_21kpa_half_liter.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default=str(SCENARIO), help="sine scenario JSON")
    parser.add_argument(
        "--omegas", default=",".join(str(w) for w in DEFAULT_OMEGAS), help="frequencies (Hz)"
    )
    args = parser.parse_args()

    scn, _ = load_scenario(Path(args.scenario))
    omegas = [float(w) for w in args.omegas.split(",") if w.strip()]
    points = analysis.frequency_sweep(scn, omegas)

    print(f"{'omega Hz':>9} {'gain':>8} {'periods':>8}")
    for p in points:
        if p.error:
            print(f"{p.omega:>9.3f} {'failed':>8}  ({p.error})")
        else:
            print(f"{p.omega:>9.3f} {p.gain:>8.4f} {p.n_periods:>8d}")

    ok = [p for p in points if p.error is None]
    if len(ok) >= 2:
        knee = analysis.fit_rolloff_knee([p.omega for p in ok], [p.gain for p in ok])
        f3db = analysis.first_crossing_3db([p.omega for p in ok], [p.gain for p in ok])
        print(f"\nfitted knee: {knee:.3f} Hz   first -3 dB crossing: {f3db:.3f} Hz")


if __name__ == "__main__":
    main()
