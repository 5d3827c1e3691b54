"""Command-line front end: ``gen-trace``, ``simulate``, ``sweep``, ``plot``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiment as ex
from .controllers import parse_controller
from .streamer import SimulationConfig, run, write_ledger
from .trace import generate_trace, preset_spec, read_trace_file, write_trace_file

log = logging.getLogger("uplinkq")


def _add_trace_args(p: argparse.ArgumentParser):
    p.add_argument("--trace", help="trace CSV (timestamp_seconds,payload_bytes)")
    p.add_argument("--preset", default=None, help="synthetic preset: network1 or network2")
    p.add_argument("--seed", type=int, default=None)


def _add_controller_args(p: argparse.ArgumentParser):
    p.add_argument("--epsilon", type=ex.parse_number, default=None)
    p.add_argument("--J", type=int, default=None)
    p.add_argument("--alpha", type=ex.parse_number, default=None)
    p.add_argument("--s-min", dest="s_min", type=ex.parse_number, default=None)
    p.add_argument("--cond-tolerance", dest="cond_tolerance", type=ex.parse_number, default=None)
    p.add_argument("--fps", type=ex.parse_number, default=None)
    p.add_argument("--training", dest="training_seconds", type=ex.parse_number, default=None)
    p.add_argument("--measured", dest="measured_seconds", type=ex.parse_number, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uplinkq", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-trace", help="write a synthetic trace CSV")
    g.add_argument("--preset", default="network1")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--duration", type=ex.parse_number, default=480.0)
    g.add_argument("--dwell", type=ex.parse_number, default=None, help="mean state dwell (s)")
    g.add_argument("--jitter", type=ex.parse_number, default=None, help="packet-gap coefficient of variation")
    g.add_argument("--packet-size", dest="packet_size", type=ex.parse_number, default=None, help="Mb")
    g.add_argument("-o", "--output", required=True)

    s = sub.add_parser("simulate", help="run one controller over one trace")
    _add_trace_args(s)
    _add_controller_args(s)
    s.add_argument("--controller", default="conditional")
    s.add_argument("--K", type=int, default=16)
    s.add_argument("--t-B", dest="t_B", type=ex.parse_number, default=1 / 60)
    s.add_argument("--ledger", help="write the per-frame ledger CSV here")

    w = sub.add_parser("sweep", help="sweep t_B or s_min across controllers")
    _add_trace_args(w)
    _add_controller_args(w)
    w.add_argument("--config", help="flat key = value experiment file")
    w.add_argument("--controllers", default=None, help="comma-separated, e.g. min-size,am-5,conditional")
    w.add_argument("--axis", choices=ex.AXES, default=None)
    w.add_argument("--values", default=None, help="comma-separated axis values; fractions allowed")
    w.add_argument("--t-B", dest="t_B", type=ex.parse_number, default=None, help="fixed t_B for s_min sweeps")
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("-o", "--output", required=True, help="table CSV")
    w.add_argument("--plot-dir", help="also write SVG plots here")

    pl = sub.add_parser("plot", help="render SVGs from a sweep table")
    pl.add_argument("table")
    pl.add_argument("--network", default=None, help="name used in file names (default: table stem)")
    pl.add_argument("--epsilon", type=ex.parse_number, default=0.05)
    pl.add_argument("--out-dir", default=".")
    return parser


def _trace_from(args):
    if args.trace:
        return read_trace_file(args.trace), Path(args.trace).stem
    name = args.preset or "network1"
    seed = args.seed if args.seed is not None else 0
    sim_len = (args.training_seconds or 120.0) + (args.measured_seconds or 300.0)
    return generate_trace(preset_spec(name, seed=seed, duration=sim_len + 60.0)), name


def cmd_gen_trace(args) -> int:
    overrides = {}
    if args.dwell is not None:
        overrides["transition_dwell_mean"] = args.dwell
    if args.jitter is not None:
        overrides["jitter"] = args.jitter
    if args.packet_size is not None:
        overrides["packet_size"] = args.packet_size
    trace = generate_trace(preset_spec(args.preset, seed=args.seed, duration=args.duration, **overrides))
    write_trace_file(trace, args.output)
    print(f"wrote {len(trace)} packets, mean {trace.mean_rate():.3f} Mbps -> {args.output}")
    return 0


def cmd_simulate(args) -> int:
    trace, _ = _trace_from(args)
    params = {k: getattr(args, k) for k in ("epsilon", "J", "alpha", "s_min", "cond_tolerance")
              if getattr(args, k) is not None}
    name = args.controller
    if name == "am":
        name = f"am-{args.K}"
    cfg = parse_controller(name, **params)
    sim_kw = {k: getattr(args, k) for k in ("fps", "training_seconds", "measured_seconds")
              if getattr(args, k) is not None}
    sim = SimulationConfig(t_B=args.t_B, **sim_kw)
    rep = run(trace, cfg, sim)
    print(f"controller={cfg.label} t_B={sim.t_B:.6g} s_min={cfg.s_min:.6g}")
    print(f"loss_rate={rep.loss_rate:.6f} avg_bitrate={rep.avg_bitrate:.6f} "
          f"late={rep.late_count} skipped={rep.skipped_count} generated={rep.generated}"
          + (" truncated" if rep.truncated else ""))
    if args.ledger:
        with open(args.ledger, "w", newline="", encoding="utf-8") as fh:
            write_ledger(rep, fh)
    return 0


def _spec_from_args(args) -> ex.ExperimentSpec:
    values = {}
    if args.config:
        values.update(ex.parse_config_text(Path(args.config).read_text(encoding="utf-8")))
    flag_map = {
        "trace_path": args.trace,
        "network": args.preset,
        "seed": args.seed,
        "axis": args.axis,
        "epsilon": args.epsilon,
        "J": args.J,
        "alpha": args.alpha,
        "s_min": args.s_min,
        "t_B": args.t_B,
        "cond_tolerance": args.cond_tolerance,
        "fps": args.fps,
        "training_seconds": args.training_seconds,
        "measured_seconds": args.measured_seconds,
    }
    for k, v in flag_map.items():
        if v is not None:
            values[k] = v
    if args.controllers:
        values["controllers"] = [c for c in args.controllers.split(",") if c.strip()]
    if args.values:
        values["values"] = [v for v in args.values.split(",") if v.strip()]
    return ex.spec_from_mapping(values)


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    rows = ex.run_sweep(spec, jobs=args.jobs)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        ex.write_table(rows, fh)
    print(f"wrote {len(rows)} rows -> {args.output}")
    if args.plot_dir:
        from .plotting import plot_table

        for path in plot_table(rows, args.plot_dir, spec.label, spec.epsilon):
            print(f"wrote {path}")
    return 0


def cmd_plot(args) -> int:
    from .plotting import plot_table

    with open(args.table, encoding="utf-8") as fh:
        rows = ex.read_table(fh)
    network = args.network or Path(args.table).stem
    for path in plot_table(rows, args.out_dir, network, args.epsilon):
        print(f"wrote {path}")
    return 0


COMMANDS = {
    "gen-trace": cmd_gen_trace,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        if args.verbose:
            log.exception("failed")
        print(f"uplinkq: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
