"""Figure rendering for experiment reports.

Every report-producing command line verb writes its delimited output first
and then, unless asked not to, renders a companion figure through these
helpers.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .cpc_sim.harness import CalibrationReport, GateErrorResult, SampleSizeResult  # noqa: E402


def sample_size_figure(result: SampleSizeResult, path: str | Path) -> Path:
    """Log-log plot of the empirical minimum trial count over the gap size.

    The reference line is the trial-count floor ``ceil(epsilon ** -2)``; the
    empirical points must lie on or above it and track its slope of -2.
    """
    path = Path(path)
    eps = [row.epsilon for row in result.rows]
    n_emp = [row.n_empirical for row in result.rows]
    n_bound = [row.n_bound for row in result.rows]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(eps, n_bound, "--", color="tab:gray", label="ceil(1 / epsilon^2)")
    ax.loglog(eps, n_emp, "o-", color="tab:blue",
              label=f"empirical, power {result.power_target:g}")
    for row in result.rows:
        if row.saturated:
            ax.annotate("saturated", (row.epsilon, row.n_empirical),
                        textcoords="offset points", xytext=(5, 5), fontsize=8)
    ax.set_xlabel("spectral-norm gap epsilon")
    ax.set_ylabel("trials")
    ax.set_title("Trials needed to tell the worst-case pair apart")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def calibration_figure(report: CalibrationReport, path: str | Path) -> Path:
    """Achieved distance per stage against the stage tolerances."""
    path = Path(path)
    stages = list(range(1, len(report.stages) + 1))
    eps = [s.epsilon for s in report.stages]
    achieved = [s.achieved_distance for s in report.stages]
    passed = [s.passed for s in report.stages]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.semilogy(stages, eps, "--", color="tab:gray", label="stage epsilon")
    ax.semilogy(stages, [e / 2 for e in eps], ":", color="tab:gray",
                label="pass threshold epsilon / 2")
    colors = ["tab:green" if ok else "tab:red" for ok in passed]
    ax.scatter(stages, achieved, c=colors, zorder=3, label="achieved distance")
    ax.semilogy(stages, achieved, "-", color="tab:blue", alpha=0.4)
    ax.set_xticks(stages)
    ax.set_xlabel("stage")
    ax.set_ylabel("weighted statistical distance")
    ax.set_title("Calibration against a tightening schedule")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def gate_error_figure(results: Sequence[GateErrorResult], path: str | Path) -> Path:
    """Measured product error over sequence length against the linear bound."""
    path = Path(path)
    ks = [r.gate_count for r in results]
    worst = [r.max_measured for r in results]
    means = [sum(r.measured) / len(r.measured) for r in results]
    bounds = [r.bound for r in results]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.plot(ks, bounds, "--", color="tab:gray", label="K * per-gate error")
    ax.plot(ks, worst, "o-", color="tab:red", label="worst draw")
    ax.plot(ks, means, "s-", color="tab:blue", label="mean draw")
    ax.set_xlabel("sequence length K")
    ax.set_ylabel("spectral norm of product error")
    ax.set_title("Error accumulation along gate sequences")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def distance_matrix_figure(labels: Sequence[str], matrix: Sequence[Sequence[float]],
                           path: str | Path) -> Path:
    """Heat map of pairwise weighted distances between fitted models."""
    path = Path(path)
    n = len(labels)
    fig, ax = plt.subplots(figsize=(1.0 + 0.9 * n, 0.9 + 0.9 * n))
    image = ax.imshow(matrix, cmap="viridis", vmin=0.0, vmax=math.pi / 2)
    ax.set_xticks(range(n), labels, rotation=45, ha="right")
    ax.set_yticks(range(n), labels)
    for i in range(n):
        for j in range(n):
            ax.text(j, i, f"{matrix[i][j]:.3f}", ha="center", va="center",
                    color="white", fontsize=8)
    fig.colorbar(image, ax=ax, label="distance")
    ax.set_title("Pairwise model distances")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
