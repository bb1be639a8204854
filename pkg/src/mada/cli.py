"""Command-line entry point: ``mada <subcommand> ...``.

Every failure exits nonzero after printing exactly one line starting with
``error: `` on stderr.  Output files go under ``--out``, else
``$MADA_OUTPUT_DIR``, else ``./runs``.
"""

import argparse
import os
import sys
from pathlib import Path

from . import theory
from .config import PRESETS, ConfigError, RunConfig, parse_assignments
from .experiment import execute, replay_fs, run_sweep
from .gradcheck import run_check
from .numkit import ContractError, DomainError, NumericError
from .plotdata import emit_and_render
from .records import RecordError, read_record, write_record

EXIT_FAIL = 1
EXIT_USAGE = 2
REDDI_OPTIMIZERS = ("adam", "avgrad", "amsgrad", "mada")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def output_dir(args):
    return Path(args.out or os.environ.get("MADA_OUTPUT_DIR") or "runs")


def _emit(line=""):
    print(line, flush=True)


def _write_run(record, out, name, figures, plots):
    csv_path = write_record(record, out / f"{name}.csv")
    written = [csv_path]
    for kind in plots:
        data, png = emit_and_render(record, kind, out / f"{name}.{kind}.tsv", figures, title=name)
        written += [data] + ([png] if png else [])
    return written


def _plots_for(record):
    return ["loss", "coefficients"] + (["regret"] if record.extras else [])


def _summary_lines(record):
    s = record.summary
    yield f"config_hash\t{s.get('config_hash', '')}"
    yield f"final_loss\t{s['final_loss']!r}"
    if s.get("final_x") is not None and len(s["final_x"]) <= 4:
        yield "final_x\t" + "\t".join(repr(v) for v in s["final_x"])
    if s.get("final_q"):
        yield "final_q\t" + "\t".join(f"{k}={v!r}" for k, v in s["final_q"].items())


def cmd_run(args):
    cfg = RunConfig.load(args.config, parse_assignments(args.set))
    _, record = execute(cfg)
    out = output_dir(args)
    name = args.name or (args.config if args.config in PRESETS else Path(args.config).stem)
    for path in _write_run(record, out, name, not args.no_figures, _plots_for(record)):
        _emit(f"wrote\t{path}")
    for line in _summary_lines(record):
        _emit(line)
    return 0


def _parse_grid(items):
    grid = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item, "grid entries look like key=v1,v2,...")
        key, values = item.split("=", 1)
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(key, "no grid values")
        grid[key.strip()] = vals
    return grid


def cmd_sweep(args):
    cfg = RunConfig.load(args.config, parse_assignments(args.set))
    grid = _parse_grid(args.grid)
    results = run_sweep(cfg, grid, workers=args.workers)
    out = output_dir(args) / (args.name or "sweep")
    keys = list(grid)
    index = ["cell\t" + "\t".join(keys) + "\tfinal_loss\tconfig_hash"]
    for i, (assign, record) in enumerate(results):
        write_record(record, out / f"cell_{i:03d}.csv")
        index.append(f"{i}\t" + "\t".join(assign[k] for k in keys)
                     + f"\t{record.summary['final_loss']!r}\t{record.summary['config_hash']}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "index.tsv").write_text("\n".join(index) + "\n")
    for line in index:
        _emit(line)
    return 0


def reddi_verdict(optimizer, record):
    """Expected outcome on the adversarial problem: Adam drifts to the wrong end,
    the others reach x = -1 (and MADA's rho falls below 0.1)."""
    x = record.summary["final_x"][0]
    if optimizer == "adam":
        return x > 0
    ok = abs(x + 1.0) <= 0.05
    if optimizer == "mada":
        ok = ok and record.summary["final_q"]["rho"] < 0.1
    return ok


def cmd_reddi(args):
    overrides = parse_assignments(args.set)
    if args.steps is not None:
        overrides["run.steps"] = str(args.steps)
    cfg = RunConfig.load(f"reddi_{args.optimizer}", overrides)
    _, record = execute(cfg)
    out = output_dir(args)
    name = args.name or f"reddi_{args.optimizer}"
    for path in _write_run(record, out, name, not args.no_figures, _plots_for(record)):
        _emit(f"wrote\t{path}")
    s = record.summary
    _emit(f"optimizer\t{args.optimizer}")
    _emit(f"steps\t{s['steps']}")
    _emit(f"final_x\t{s['final_x'][0]!r}")
    _emit(f"final_rho\t{s['final_q']['rho']!r}" if s.get("final_q") else "final_rho\tnan")
    _emit(f"final_avg_regret\t{float(record.extras['avg_regret'][-1])!r}")
    ok = reddi_verdict(args.optimizer, record)
    _emit(f"check\t{'pass' if ok else 'fail'}")
    return 0 if ok or args.no_check else EXIT_FAIL


def _bound_params(args, **kw):
    return theory.BoundParams(R=args.R, L=args.L, d=args.d, alpha=args.alpha, beta1=0.0,
                              beta2=args.beta2, eps=args.eps, F_gap=args.F_gap, T=args.T, **kw)


def cmd_bound(args):
    if args.grid < 1:
        raise ContractError("--grid must be >= 1")
    p = _bound_params(args)
    grid = theory.default_rho_grid(args.grid, args.beta2 if args.include_beta2 else None)
    sweep = theory.thm3_sweep(p, grid)
    _emit("rho\tbound")
    for rho, b in sweep.rows:
        _emit(f"{rho!r}\t{b!r}")
    _emit(f"argmin\t{sweep.argmin!r}")
    _emit(f"thm1_avgrad\t{theory.thm12_bound(p)!r}")
    out = output_dir(args)
    data = {"rho": [r for r, _ in sweep.rows], "bound": [b for _, b in sweep.rows]}
    name = args.name or f"bound_b{args.beta2}_T{args.T}"
    for path in emit_and_render(data, "bound", out / f"{name}.tsv", not args.no_figures,
                                title=f"beta2={args.beta2}, T={args.T}"):
        if path:
            _emit(f"wrote\t{path}")
    return 0


def _rho_schedule(name, beta2):
    if name == "boundary":
        return theory.prop1_rho(beta2)
    if name == "adam":
        return lambda t: 1.0
    return lambda t: 0.0


def cmd_prop1(args):
    sched = _rho_schedule(args.schedule, args.beta2)
    first = theory.prop1_trials(args.trials, args.T, dim=args.dim, beta2=args.beta2,
                                seed=args.seed, eps=args.eps, rho_schedule=sched)
    bad = first[first > 0]
    _emit("schedule\ttrials\tsteps\tviolating_trials\tearliest_violation")
    _emit(f"{args.schedule}\t{args.trials}\t{args.T}\t{bad.size}\t{int(bad.min()) if bad.size else '-'}")
    crafted = theory.prop1_check(args.beta2, lambda t: 1.0, 50, theory.crafted_adam_stream())
    _emit(f"crafted_adam_stream\tmonotone={crafted.monotone}\tfirst_violation={crafted.first_violation}")
    # the schedules inside the sufficient condition are expected to stay monotone
    return EXIT_FAIL if bad.size and args.schedule != "adam" else 0


def cmd_check_hypergrad(args):
    worst = run_check(n_states=args.states, seed=args.seed)
    _emit("variant\tcoefficient\tmax_rel_error")
    for (variant, name), err in sorted(worst.items()):
        _emit(f"{variant}\t{name}\t{err:.3e}")
    top = max(worst.values())
    _emit(f"max\t{top:.3e}\t{'pass' if top <= args.tol else 'fail'}")
    return 0 if top <= args.tol else EXIT_FAIL


def cmd_replay_fs(args):
    record = read_record(args.record)
    _, frozen = replay_fs(record)
    out = output_dir(args)
    name = args.name or (Path(args.record).stem + "_fs")
    for path in _write_run(frozen, out, name, not args.no_figures, _plots_for(frozen)):
        _emit(f"wrote\t{path}")
    for line in _summary_lines(frozen):
        _emit(line)
    return 0


def build_parser():
    parser = _Parser(prog="mada", description="Parameterized optimizer experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, outputs=True):
        if outputs:
            p.add_argument("--out", help="output directory (default $MADA_OUTPUT_DIR or ./runs)")
            p.add_argument("--name", help="base name for written files")
            p.add_argument("--no-figures", action="store_true", help="write data files only")
        return p

    p = common(sub.add_parser("run", help="run one config"))
    p.add_argument("--config", required=True, help="preset name or config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_run)

    p = common(sub.add_parser("sweep", help="grid over config keys"))
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--grid", action="append", required=True, metavar="KEY=V1,V2")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = common(sub.add_parser("reddi", help="adversarial online problem"))
    p.add_argument("--optimizer", choices=REDDI_OPTIMIZERS, default="mada")
    p.add_argument("--steps", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--no-check", action="store_true", help="exit 0 even if the outcome check fails")
    p.set_defaults(func=cmd_reddi)

    p = common(sub.add_parser("bound", help="interpolation bound swept over rho"))
    p.add_argument("--beta2", type=float, default=0.9)
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--grid", type=int, default=101, help="number of evenly spaced rho values")
    p.add_argument("--include-beta2", action="store_true", help="add rho = beta2 to the grid")
    for flag, val in theory.DEFAULT_BOUND.items():
        p.add_argument(f"--{flag}", type=type(val), default=val)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("prop1", help="effective learning-rate monotonicity trials")
    p.add_argument("--beta2", type=float, default=0.9)
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--schedule", choices=("boundary", "avgrad", "adam"), default="boundary")
    p.set_defaults(func=cmd_prop1)

    p = sub.add_parser("check-hypergrad", help="finite-difference check of the hyper-gradients")
    p.add_argument("--states", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_check_hypergrad)

    p = common(sub.add_parser("replay-fs", help="re-run a record with its final coefficients frozen"))
    p.add_argument("--record", required=True, help="path to a record CSV")
    p.set_defaults(func=cmd_replay_fs)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("missing subcommand")
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (ContractError, DomainError, NumericError, RecordError, ValueError, OSError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_FAIL


def _one_line(exc):
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
