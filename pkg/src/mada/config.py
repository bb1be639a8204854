"""Flat ``key = value`` run configuration with dotted keys.

A config file holds one assignment per line; ``#`` starts a comment.  Every
key has a type and a default, so a config only lists what it changes.
Builtin presets are named configs that can be used in place of a file.
"""

from dataclasses import dataclass
from pathlib import Path

from .base_opt import BASE_KINDS, BaseHyperParams
from .hyper import LEARNED, HyperConfig
from .numkit import SCHEDULE_KINDS, Schedule
from .poly import COEF_NAMES, VARIANTS, CoefficientVector
from .problems import make_problem

PROBLEM_KINDS = ("quadratic", "rosenbrock", "logistic-synth", "reddi-online", "tiny-mlp")
OPTIMIZER_KINDS = ("base", "poly", "mada")


class ConfigError(ValueError):
    """Bad config text or value; ``key`` names the offending key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return conv


# key -> (converter, default)
SCHEMA = {
    "problem.kind": (_choice(PROBLEM_KINDS), "quadratic"),
    "problem.seed": (int, 0),
    "problem.dim": (int, 10),
    "problem.cond": (float, 100.0),
    "problem.noise": (float, 0.0),
    "problem.n_samples": (int, 512),
    "problem.separation": (float, 2.0),
    "problem.batch_size": (int, 32),
    "problem.l2": (float, 1e-3),
    "problem.label_noise": (float, 0.05),
    "problem.widths": (str, "2,16,16,2"),
    "problem.x0": (float, 1.0),
    "optimizer.kind": (_choice(OPTIMIZER_KINDS), "base"),
    "optimizer.base": (_choice(BASE_KINDS), "adam"),
    "optimizer.variant": (_choice(VARIANTS), "avgrad-interp"),
    "mada.hyper_lr_betas": (float, 2.5e-3),
    "mada.hyper_lr_other": (float, 2.5e-3),
    "mada.hyper_momentum": (float, 0.5),
    "mada.freeze_steps": (int, 0),
    "mada.projection_aware": (_bool, True),
    "schedule.kind": (_choice(SCHEDULE_KINDS), "constant"),
    "schedule.peak": (float, 1e-3),
    "schedule.final": (float, 0.0),
    "schedule.warmup_steps": (int, 0),
    "run.steps": (int, 1000),
    "run.seed": (int, 0),
    "run.eps": (float, 1e-8),
    "run.weight_decay": (float, 0.0),
    "run.record_stride": (int, 0),  # 0 = default stride
}
_q_defaults = CoefficientVector().as_dict()
for _name in COEF_NAMES:
    SCHEMA[f"q.{_name}"] = (float, _q_defaults[_name])
for _name in LEARNED:
    SCHEMA[f"mada.lr.{_name}"] = (float, -1.0)  # negative = use the group rate
    SCHEMA[f"mada.momentum.{_name}"] = (_bool, _name != "gamma")


PRESETS = {
    "quadratic_adam": {
        "problem.kind": "quadratic", "problem.dim": "20", "optimizer.kind": "base",
        "optimizer.base": "adam", "q.beta1": "0.9", "q.beta2": "0.99",
        "schedule.peak": "0.01", "run.steps": "2000",
    },
    "quadratic_mada": {
        "problem.kind": "quadratic", "problem.dim": "20", "optimizer.kind": "mada",
        "q.beta1": "0.9", "q.beta2": "0.99", "schedule.peak": "0.01", "run.steps": "2000",
    },
    "rosenbrock_adam": {
        "problem.kind": "rosenbrock", "optimizer.kind": "base", "optimizer.base": "adam",
        "schedule.peak": "0.01", "run.steps": "5000",
    },
    "logistic_mada": {
        "problem.kind": "logistic-synth", "optimizer.kind": "mada",
        "schedule.peak": "0.01", "run.steps": "2000",
    },
    "logistic_max_mada": {
        "problem.kind": "logistic-synth", "optimizer.kind": "mada",
        "optimizer.variant": "max-interp", "q.rho": "0.5", "schedule.peak": "0.01",
        "run.steps": "5000",
    },
    "mlp_adam": {
        "problem.kind": "tiny-mlp", "problem.batch_size": "64", "optimizer.kind": "base",
        "optimizer.base": "adam", "q.beta1": "0.9", "q.beta2": "0.95",
        "schedule.kind": "cosine-warmup", "schedule.peak": "0.01", "schedule.final": "0.001",
        "schedule.warmup_steps": "100", "run.steps": "3000",
    },
    "mlp_mada": {
        "problem.kind": "tiny-mlp", "problem.batch_size": "64", "optimizer.kind": "mada",
        "q.beta1": "0.9", "q.beta2": "0.95", "schedule.kind": "cosine-warmup",
        "schedule.peak": "0.01", "schedule.final": "0.001", "schedule.warmup_steps": "100",
        "run.steps": "3000",
    },
}

# Adversarial online problem: inverse-sqrt step size, Adam-like betas.
_REDDI = {
    "problem.kind": "reddi-online", "problem.x0": "1.0", "q.beta1": "0.9", "q.beta2": "0.99",
    "schedule.kind": "inv-sqrt", "schedule.peak": "1.0", "run.steps": "500000",
}
PRESETS["reddi_adam"] = {**_REDDI, "optimizer.base": "adam"}
PRESETS["reddi_avgrad"] = {**_REDDI, "optimizer.base": "avgrad"}
PRESETS["reddi_amsgrad"] = {**_REDDI, "optimizer.base": "amsgrad"}
# Learns rho only, starting from the Adam corner; the other coefficients stay put.
PRESETS["reddi_mada"] = {
    **_REDDI, "optimizer.kind": "mada", "q.rho": "1.0", "mada.hyper_lr_betas": "0",
    "mada.hyper_lr_other": "0", "mada.lr.rho": "0.5", "mada.projection_aware": "false",
}


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}", "empty key")
        out[key] = value
    return out


def parse_assignments(items):
    """``["a.b=1", ...]`` from the command line into a raw dict."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "expected key=value")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_raw(name_or_path):
    """Raw assignments of a preset name or a config file path."""
    if name_or_path in PRESETS:
        return dict(PRESETS[name_or_path])
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError("config", f"no preset or file named {name_or_path!r} "
                          f"(presets: {', '.join(sorted(PRESETS))})")
    return parse_config_text(path.read_text(), str(path))


@dataclass(frozen=True)
class RunConfig:
    values: dict

    @classmethod
    def from_raw(cls, raw):
        values = {k: default for k, (_, default) in SCHEMA.items()}
        for key, text in raw.items():
            if key not in SCHEMA:
                raise ConfigError(key, "unknown key")
            conv = SCHEMA[key][0]
            try:
                values[key] = conv(text) if isinstance(text, str) else conv(str(text))
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, name_or_path, overrides=None):
        raw = load_raw(name_or_path)
        raw.update(overrides or {})
        return cls.from_raw(raw)

    def __getitem__(self, key):
        return self.values[key]

    def flat(self):
        """Every key rendered as text, the form hashed and stored with records."""
        return {k: _render(v) for k, v in sorted(self.values.items())}

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.flat().items())

    def with_(self, **raw):
        merged = dict(self.flat())
        merged.update({k.replace("__", "."): v for k, v in raw.items()})
        return RunConfig.from_raw(merged)

    def validate(self):
        v = self.values
        checks = [
            ("run.steps", v["run.steps"] >= 1, "must be >= 1"),
            ("run.eps", v["run.eps"] > 0, "must be > 0"),
            ("run.weight_decay", v["run.weight_decay"] >= 0, "must be >= 0"),
            ("run.record_stride", v["run.record_stride"] >= 0, "must be >= 0"),
            ("problem.dim", v["problem.dim"] >= 1, "must be >= 1"),
            ("schedule.peak", v["schedule.peak"] > 0, "must be > 0"),
            ("mada.hyper_momentum", 0 <= v["mada.hyper_momentum"] < 1, "must lie in [0, 1)"),
            ("mada.hyper_lr_betas", v["mada.hyper_lr_betas"] >= 0, "must be >= 0"),
            ("mada.hyper_lr_other", v["mada.hyper_lr_other"] >= 0, "must be >= 0"),
            ("mada.freeze_steps", v["mada.freeze_steps"] >= 0, "must be >= 0"),
        ]
        if v["optimizer.kind"] == "mada":
            checks.append(("mada.freeze_steps", v["run.steps"] > v["mada.freeze_steps"],
                           "run.steps must exceed mada.freeze_steps"))
        if v["schedule.kind"] == "cosine-warmup":
            checks.append(("schedule.warmup_steps", v["schedule.warmup_steps"] < v["run.steps"],
                           "must be < run.steps"))
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(key, f"{msg} (got {v[key]})")
        try:
            self.coefficients().check()
        except ValueError as exc:
            raise ConfigError("q", str(exc)) from None
        return self

    def coefficients(self):
        return CoefficientVector(**{k: self.values[f"q.{k}"] for k in COEF_NAMES})

    def problem(self):
        v = self.values
        kind = v["problem.kind"]
        params = {"seed": v["problem.seed"]}
        if kind == "quadratic":
            params.update(dim=v["problem.dim"], cond=v["problem.cond"], noise=v["problem.noise"])
        elif kind == "rosenbrock":
            params.update(dim=v["problem.dim"] if v["problem.dim"] >= 2 else 2)
        elif kind == "logistic-synth":
            params.update(dim=v["problem.dim"], n_samples=v["problem.n_samples"],
                          separation=v["problem.separation"], batch_size=v["problem.batch_size"],
                          l2=v["problem.l2"])
        elif kind == "reddi-online":
            params = {"x0": v["problem.x0"]}
        elif kind == "tiny-mlp":
            params.update(widths=v["problem.widths"], n_samples=v["problem.n_samples"],
                          separation=v["problem.separation"], label_noise=v["problem.label_noise"],
                          batch_size=v["problem.batch_size"])
        try:
            return make_problem(kind, **params)
        except ValueError as exc:
            raise ConfigError("problem", str(exc)) from None

    def schedule(self):
        v = self.values
        return Schedule(v["schedule.kind"], peak=v["schedule.peak"], final=v["schedule.final"],
                        warmup_steps=v["schedule.warmup_steps"], total_steps=v["run.steps"])

    def hyper_config(self):
        v = self.values
        overrides = {k: v[f"mada.lr.{k}"] for k in LEARNED if v[f"mada.lr.{k}"] >= 0}
        return HyperConfig(hyper_lr_betas=v["mada.hyper_lr_betas"],
                           hyper_lr_other=v["mada.hyper_lr_other"],
                           hyper_momentum=v["mada.hyper_momentum"],
                           momentum_enabled={k: v[f"mada.momentum.{k}"] for k in LEARNED},
                           lr_overrides=overrides, freeze_steps=v["mada.freeze_steps"])

    def base_hyperparams(self):
        q, v = self.coefficients(), self.values
        try:
            return BaseHyperParams(beta1=q.beta1, beta2=q.beta2, beta3=q.beta3, eps=v["run.eps"],
                                   weight_decay=v["run.weight_decay"], beta1_lion=q.beta1_lion,
                                   beta2_lion=q.beta2_lion)
        except ValueError as exc:
            raise ConfigError("q", str(exc)) from None


def _render(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)
