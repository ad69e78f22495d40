"""Matplotlib figure emission for the CLI report paths (Agg, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ensembles import SequentialResult
from .scenario import MeasurementResult


def _save(fig, outdir: Path, name: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sg_run(result: MeasurementResult, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    final = result.final_field
    x = final.grid.x
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(x, np.abs(final.psi_up) ** 2, label=r"$|\psi_+|^2$")
    ax.plot(x, np.abs(final.psi_down) ** 2, label=r"$|\psi_-|^2$")
    ax.plot(x, final.rho(), "k--", lw=0.8, label=r"$\rho$")
    finals = np.array([t.x_final for t in result.integration.trajectories])
    ax.hist(finals, bins=80, density=True, alpha=0.3, color="gray", label="trajectory endpoints")
    if result.x_split is not None:
        ax.axvline(result.x_split, color="r", ls=":", lw=0.8, label="split point")
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title(f"final state, t = {result.t_final:.3g}")
    ax.legend(fontsize=8)
    paths.append(_save(fig, outdir, "final_density.png"))

    times = result.integration.record_times
    positions = result.integration.record_positions
    if positions.shape[0] > 2:
        fig, ax = plt.subplots(figsize=(7, 5))
        n_show = min(200, positions.shape[1])
        idx = np.linspace(0, positions.shape[1] - 1, n_show).astype(int)
        outcomes = result.outcomes[idx]
        for j, o in zip(idx, outcomes):
            color = "tab:blue" if o == 1 else ("tab:orange" if o == -1 else "gray")
            ax.plot(times, positions[:, j], color=color, lw=0.4, alpha=0.6)
        ax.set_xlabel("t")
        ax.set_ylabel("x(t)")
        ax.set_title("Bohmian trajectories (blue: +1, orange: -1)")
        paths.append(_save(fig, outdir, "trajectories.png"))
    return paths


def plot_partitions(
    x0s: np.ndarray,
    outcomes_a: np.ndarray,
    outcomes_b: np.ndarray,
    outdir: str | Path,
) -> list[Path]:
    """Three panels: the partition under each setting, and their intersection."""
    outdir = Path(outdir)
    fig, axes = plt.subplots(3, 1, figsize=(7, 6), sharex=True)
    rng_y = np.random.Generator(np.random.Philox(key=0))
    jitter = rng_y.random(x0s.size)

    for ax, outcomes, label in (
        (axes[0], outcomes_a, "setting a"),
        (axes[1], outcomes_b, "setting b"),
    ):
        for val, color in ((1, "tab:blue"), (-1, "tab:orange")):
            sel = outcomes == val
            ax.scatter(x0s[sel], jitter[sel], s=1, color=color, label=f"{val:+d}")
        ax.set_ylabel(label)
        ax.set_yticks([])
        ax.legend(fontsize=7, markerscale=4)

    classes = [
        ((1, 1), "tab:blue"),
        ((1, -1), "tab:green"),
        ((-1, 1), "tab:red"),
        ((-1, -1), "tab:orange"),
    ]
    ax = axes[2]
    for (va, vb), color in classes:
        sel = (outcomes_a == va) & (outcomes_b == vb)
        ax.scatter(x0s[sel], jitter[sel], s=1, color=color, label=f"({va:+d},{vb:+d})")
    ax.set_ylabel("intersection")
    ax.set_yticks([])
    ax.set_xlabel(r"hidden variable $x_0$")
    ax.legend(fontsize=7, markerscale=4, ncol=4)
    fig.suptitle("partitions of the hidden-variable sample (intersection not observable)")
    return [_save(fig, outdir, "partitions.png")]


def plot_sequential(
    seq: SequentialResult, reference: np.ndarray, outdir: str | Path, suffix: str = ""
) -> list[Path]:
    outdir = Path(outdir)
    labels = ["(+,+)", "(+,-)", "(-,+)", "(-,-)"]
    sim = seq.table.reshape(-1)
    ref = np.asarray(reference).reshape(-1)
    xs = np.arange(4)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs - 0.18, sim, width=0.36, label="simulated")
    ax.bar(xs + 0.18, ref, width=0.36, label="quantum chain rule")
    ax.set_xticks(xs, labels)
    ax.set_ylabel("probability")
    ax.set_title("sequential measurement (first outcome, second outcome)")
    ax.legend()
    name = f"sequential{('_' + suffix) if suffix else ''}.png"
    return [_save(fig, outdir, name)]


def plot_toy_curve(
    thetas: np.ndarray,
    estimates: np.ndarray,
    errors: np.ndarray,
    outdir: str | Path,
) -> list[Path]:
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(6, 4))
    dense = np.linspace(0, np.pi, 200)
    ax.plot(dense, -1 + 2 * dense / np.pi, "k-", lw=1, label=r"$-1 + 2\theta/\pi$")
    ax.plot(dense, -np.cos(dense), "k--", lw=1, label=r"singlet $-\cos\theta$")
    ax.errorbar(thetas, estimates, yerr=errors, fmt="o", ms=4, label="sphere model (MC)")
    ax.set_xlabel(r"$\theta_{ab}$")
    ax.set_ylabel(r"$E(\theta)$")
    ax.legend()
    return [_save(fig, outdir, "toy_correlation.png")]


def plot_chsh(correlations: np.ndarray, s_value: float, outdir: str | Path) -> list[Path]:
    outdir = Path(outdir)
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"]
    ax.bar(labels, np.asarray(correlations).reshape(-1))
    ax.axhline(0, color="k", lw=0.5)
    ax.set_ylabel("correlation")
    ax.set_title(f"|S| = {abs(s_value):.4f} (local bound 2, quantum max {2 * np.sqrt(2):.4f})")
    return [_save(fig, outdir, "chsh.png")]
