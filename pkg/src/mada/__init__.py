"""Parameterized adaptive-moment optimizers with online hyper-gradient
coefficient learning, plus evaluators for the associated convergence results."""

from .numkit import Schedule, schedule_at, central_diff, make_rng
from .problems import make_problem, evaluate, reddi_grad, reddi_average_regret
from .base_opt import BaseOptState, BaseHyperParams, base_step, effective_lr
from .poly import CoefficientVector, PolyState, poly_step, freeze, vertex
from .hyper import HyperConfig, HyperState, MadaOptimizer, hypergrad, hyper_update, run_mada, extract_fs
from .records import RunRecord, read_record, write_record
from .config import RunConfig, PRESETS
from .experiment import execute, replay_fs, run_sweep
from . import theory

__version__ = "0.1.0"
