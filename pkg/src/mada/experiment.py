"""Run a RunConfig end to end, sweep over config keys, and replay learned coefficients."""

import itertools
from concurrent.futures import ThreadPoolExecutor

from .config import RunConfig
from .hyper import MadaOptimizer, extract_fs
from .numkit import ContractError
from .poly import COEF_NAMES
from .records import config_hash
from .runner import BaseOptimizer, PolyOptimizer, run_optimizer


def build_optimizer(cfg, dim):
    kind = cfg["optimizer.kind"]
    q = cfg.coefficients()
    eps, wd = cfg["run.eps"], cfg["run.weight_decay"]
    if kind == "base":
        return BaseOptimizer(cfg["optimizer.base"], cfg.base_hyperparams(), dim)
    if kind == "poly":
        return PolyOptimizer(q, dim, cfg["optimizer.variant"], eps, wd)
    return MadaOptimizer(q, cfg.hyper_config(), dim, cfg["optimizer.variant"], eps, wd,
                         projection_aware=cfg["mada.projection_aware"])


def execute(cfg: RunConfig):
    """Run one config; returns ``(x_final, RunRecord)`` with the config stored in the summary."""
    problem = cfg.problem()
    opt = build_optimizer(cfg, problem.dim)
    x, record = run_optimizer(problem, cfg.schedule(), cfg["run.steps"], cfg["run.seed"], opt,
                              record_stride=cfg["run.record_stride"] or None)
    flat = cfg.flat()
    record.summary["config"] = flat
    record.summary["config_hash"] = config_hash(flat)
    return x, record


def replay_config(record):
    """Config for a frozen re-run at the record's final coefficients."""
    if "config" not in record.summary:
        raise ContractError("record summary has no config to replay")
    q = extract_fs(record)
    raw = dict(record.summary["config"])
    raw["optimizer.kind"] = "poly"
    for name in COEF_NAMES:
        raw[f"q.{name}"] = repr(float(getattr(q, name)))
    return RunConfig.from_raw(raw)


def replay_fs(record):
    """Re-run the recorded problem with coefficients frozen at q_final (MADA-FS)."""
    x, out = execute(replay_config(record))
    out.summary["replayed_from"] = record.summary.get("config_hash")
    return x, out


def sweep_cells(cfg, grid):
    """Cartesian product of ``grid`` (key -> list of raw values) applied to ``cfg``."""
    if not grid:
        raise ContractError("sweep grid is empty")
    keys = list(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        raw = dict(cfg.flat())
        raw.update(dict(zip(keys, combo)))
        cells.append((dict(zip(keys, combo)), RunConfig.from_raw(raw)))
    return cells


def run_sweep(cfg, grid, workers=1):
    """Run every cell; returns ``[(assignment, record), ...]`` in grid order.

    Cells share no state, so the worker count does not change any record.
    """
    cells = sweep_cells(cfg, grid)

    def one(cell):
        return cell[0], execute(cell[1])[1]

    if workers <= 1:
        return [one(c) for c in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, cells))
