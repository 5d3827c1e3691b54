#!/usr/bin/env python3
"""Regenerate the sweep tables and SVG plots for both synthetic presets.

For each preset this runs a t_B sweep (s_min fixed at 0.05 Mb) and an s_min
sweep (t_B fixed at 1/60 s) over the six default controllers, then writes
``{network}_{axis}.csv`` and ``{network}_{axis}_{metric}.svg`` to --out.
"""

import argparse
import time
from pathlib import Path

from uplinkq import experiment as ex
from uplinkq.plotting import plot_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--networks", default="network1,network2")
    ap.add_argument("--quick", action="store_true", help="30 s training + 60 s measured")
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timing = {"training_seconds": 30.0, "measured_seconds": 60.0} if args.quick else {}
    for network in args.networks.split(","):
        base = ex.ExperimentSpec(network=network, seed=args.seed, **timing)
        trace = base.load_trace()
        rows = []
        for axis in ex.AXES:
            spec = ex.with_axis(base, axis)
            t0 = time.perf_counter()
            part = ex.run_sweep(spec, trace=trace, jobs=args.jobs)
            with open(out / f"{network}_{axis}.csv", "w", newline="", encoding="utf-8") as fh:
                ex.write_table(part, fh)
            print(f"{network} {axis}: {len(part)} rows in {time.perf_counter() - t0:.1f}s")
            rows += part
        for path in plot_table(rows, out, network, base.epsilon):
            print(f"  {path}")


if __name__ == "__main__":
    main()
