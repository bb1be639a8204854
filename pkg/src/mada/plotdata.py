"""Plot-ready series files and their matplotlib renderings.

Each figure kind is written as a tab-separated text file with a header row,
usable by any plotting tool; ``render`` draws the same file to a PNG.
"""

from pathlib import Path

import numpy as np

from .numkit import ContractError
from .poly import COEF_NAMES

PLOT_KINDS = ("coefficients", "regret", "bound", "loss")


def _need(source, names, kind):
    missing = [name for name in names if name not in source]
    if missing:
        raise ContractError(f"{kind} plot needs series {', '.join(map(repr, missing))}")
    return [np.asarray(source[name]) for name in names]


def series_for(kind, source):
    """Column names and arrays for ``kind``.

    ``source`` is a RunRecord (coefficients, regret, loss) or a mapping with
    ``rho`` and ``bound`` arrays (bound).
    """
    if kind == "coefficients":
        names = ("step",) + COEF_NAMES
        return names, _need(source.columns, names, kind)
    if kind == "loss":
        names = ("step", "loss")
        return names, _need(source.columns, names, kind)
    if kind == "regret":
        names = ("step", "avg_regret", "x")
        return names, _need(source.extras, names, kind)
    if kind == "bound":
        names = ("rho", "bound")
        return names, _need(source, names, kind)
    raise ContractError(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")


def emit_plotdata(source, kind, path):
    """Write the ``kind`` series of ``source`` to ``path``; returns the path."""
    names, cols = series_for(kind, source)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["\t".join(names)]
    for row in zip(*cols):
        lines.append("\t".join(str(int(v)) if n == "step" else repr(float(v))
                               for n, v in zip(names, row)))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_plotdata(path):
    lines = Path(path).read_text().splitlines()
    names = lines[0].split("\t")
    rows = [[float(v) for v in ln.split("\t")] for ln in lines[1:]]
    data = np.array(rows).reshape(len(rows), len(names))
    return {n: data[:, j] for j, n in enumerate(names)}


def render(kind, data_path, png_path=None, title=None):
    """Draw a plot-data file to PNG next to it (or at ``png_path``)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = read_plotdata(data_path)
    png_path = Path(png_path) if png_path else Path(data_path).with_suffix(".png")
    fig, axes = _axes_for(kind, plt)
    if kind == "coefficients":
        ax = axes[0]
        for name in COEF_NAMES:
            ax.plot(data["step"], data[name], label=name, lw=1.2)
        ax.set_xlabel("step")
        ax.set_ylabel("coefficient")
        ax.legend(fontsize=7, ncol=2)
    elif kind == "loss":
        ax = axes[0]
        ax.plot(data["step"], data["loss"], lw=1.0)
        ax.set_xlabel("step")
        ax.set_ylabel("loss")
        if np.all(data["loss"] > 0):
            ax.set_yscale("log")
    elif kind == "regret":
        axes[0].plot(data["step"], data["avg_regret"], lw=1.0)
        axes[0].set_ylabel("average regret")
        axes[1].plot(data["step"], data["x"], lw=1.0)
        axes[1].set_ylabel("x")
        for ax in axes:
            ax.set_xlabel("step")
            ax.set_xscale("log")
    elif kind == "bound":
        ax = axes[0]
        ax.plot(data["rho"], data["bound"], marker=".", lw=1.0)
        i = int(np.argmin(data["bound"]))
        ax.axvline(data["rho"][i], ls="--", lw=0.8, color="grey")
        ax.set_xlabel("rho")
        ax.set_ylabel("bound")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=110)
    plt.close(fig)
    return png_path


def _axes_for(kind, plt):
    if kind == "regret":
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        return fig, list(axes)
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    return fig, [ax]


def emit_and_render(source, kind, path, figures=True, title=None):
    """Write the data file and, unless ``figures`` is off, its PNG."""
    data_path = emit_plotdata(source, kind, path)
    png = render(kind, data_path, title=title) if figures else None
    return data_path, png
