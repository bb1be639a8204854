"""Small experiments built on the library: max-routing of the beta2 hyper-gradient
and robustness to a poor initial (beta1, beta2)."""

from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .experiment import execute
from .hyper import HyperConfig, MadaOptimizer, beta2_path_terms
from .numkit import Schedule
from .poly import vertex
from .problems import make_problem
from .runner import run_optimizer


@dataclass
class RoutingReport:
    steps: int
    pairs: int
    blocked: int
    blocked_after_warmin: float
    max_blocked_contribution: float  # largest |beta2 term through the max path| on blocked pairs

    @property
    def blocked_fraction(self):
        return self.blocked / self.pairs if self.pairs else 0.0


def routing_diagnostic(steps=5000, seed=0, dim=10, peak=0.01, warmin=100, rho=0.5):
    """Run max-interp MADA on logistic-synth and account for every (step, coordinate)
    pair where the running max shields the fresh second moment from beta2."""
    problem = make_problem("logistic-synth", dim=dim, seed=seed)
    q0 = vertex("amsgrad", beta1=0.9, beta2=0.99, rho=rho)
    opt = MadaOptimizer(q0, HyperConfig(), problem.dim, variant="max-interp")
    tally = {"pairs": 0, "blocked": 0, "late_pairs": 0, "late_blocked": 0, "worst": 0.0}

    def observe(trace, grad_next):
        _, via_max = beta2_path_terms(trace, grad_next)
        blocked = ~trace.route
        tally["pairs"] += blocked.size
        tally["blocked"] += int(blocked.sum())
        if trace.t > warmin:
            tally["late_pairs"] += blocked.size
            tally["late_blocked"] += int(blocked.sum())
        if blocked.any():
            tally["worst"] = max(tally["worst"], float(np.abs(via_max[blocked]).max()))

    opt.observer = observe
    run_optimizer(problem, Schedule("constant", peak=peak), steps, seed, opt)
    late = tally["late_blocked"] / tally["late_pairs"] if tally["late_pairs"] else 0.0
    return RoutingReport(steps, tally["pairs"], tally["blocked"], late, tally["worst"])


@dataclass
class RobustnessReport:
    seeds: tuple
    mada_poor: float
    adam_good: float
    adam_poor: float

    @property
    def mada_gap(self):
        return abs(self.mada_poor - self.adam_good) / self.adam_good


def mlp_robustness(seeds=range(5), poor=(0.7, 0.8), good=(0.9, 0.95), overrides=None):
    """Mean final full-data loss on tiny-mlp for MADA from ``poor``, Adam at ``good``
    and Adam at ``poor``."""
    results = {"mada": [], "good": [], "poor": []}
    for seed in seeds:
        common = {"problem.seed": str(seed), "run.seed": str(seed), **(overrides or {})}
        for name, preset, (b1, b2) in (("mada", "mlp_mada", poor), ("good", "mlp_adam", good),
                                       ("poor", "mlp_adam", poor)):
            cfg = RunConfig.load(preset, {**common, "q.beta1": repr(b1), "q.beta2": repr(b2)})
            results[name].append(execute(cfg)[1].summary["final_loss"])
    return RobustnessReport(tuple(seeds), float(np.mean(results["mada"])),
                            float(np.mean(results["good"])), float(np.mean(results["poor"])))
