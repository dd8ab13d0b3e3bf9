"""Static SVG figures of one episode, one file per panel."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp so repeated runs write identical files
matplotlib.rcParams["svg.hashsalt"] = "irlmrac"
_META = {"Date": None, "Creator": None}

PANELS = ("reference_output", "tracking_error", "states", "control", "gains")


def _finish(fig, ax, path, xlabel="time (s)"):
    ax.set_xlabel(xlabel)
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def _switches(ax, log):
    for start in log.segment_starts[1:]:
        ax.axvline(start * log.dt, color="0.6", lw=0.8, ls=":")


def plot_episode(log, out_dir):
    """Write the five panels for ``log`` into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = log.column("t")
    paths = []

    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(t, log.column("y_ref"), "k--", lw=1.2, label="$y_{ref}$")
    ax.plot(t, log.column("y"), lw=1.2, label="$y$")
    ax.set_ylabel("vertical acceleration (m/s$^2$)")
    _switches(ax, log)
    paths.append(out / "reference_output.svg")
    _finish(fig, ax, paths[-1])

    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(t, log.column("e"), lw=1.2)
    ax.set_ylabel("tracking error $e$ (m/s$^2$)")
    _switches(ax, log)
    paths.append(out / "tracking_error.svg")
    _finish(fig, ax, paths[-1])

    fig, ax = plt.subplots(figsize=(6, 3.2))
    if log.states is not None and len(log.states):
        states = np.asarray(log.states)
        ts = np.arange(len(states)) * log.dt
        ax.plot(ts, states[:, 0], lw=1.2, label=r"$\alpha$ (rad)")
        if states.shape[1] > 1:
            ax.plot(ts, states[:, 1], lw=1.2, label="$q$ (rad/s)")
    ax.set_ylabel("plant states")
    _switches(ax, log)
    paths.append(out / "states.svg")
    _finish(fig, ax, paths[-1])

    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.step(t, log.column("u"), where="post", lw=1.2)
    ax.set_ylabel("control $u$")
    _switches(ax, log)
    paths.append(out / "control.svg")
    _finish(fig, ax, paths[-1])

    fig, ax = plt.subplots(figsize=(6, 3.2))
    for i, label in enumerate(("$K_0$", r"$K_\Delta$", r"$K_{2\Delta}$")):
        line, = ax.plot(t, log.column(f"K{i}"), lw=1.2, label=label)
        ax.plot(t, log.column(f"Kg{i}"), lw=0.8, ls="--", color=line.get_color())
    ax.set_ylabel("gains (solid: actor, dashed: greedy)")
    if log.status.kind == "converged":
        ax.axvline(log.status.step * log.dt, color="k", lw=0.8, ls="-.")
    _switches(ax, log)
    paths.append(out / "gains.svg")
    _finish(fig, ax, paths[-1])
    return paths
