"""Optional matplotlib rendering of report contents to PNG files.

Uses Figure objects directly (no pyplot, no global backend state), so
importing this module never touches the active backend.
"""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

from .estimator import BoundReport

_DPI = 150


def render_bound_figure(report: BoundReport, path: str) -> str:
    """Scatter of (test risk, test adversarial risk) with the fitted line."""
    risks = np.array([p.test_risk for p in report.points])
    advrisks = np.array([p.test_advrisk for p in report.points])
    fig = Figure(figsize=(5.5, 4.2), dpi=_DPI)
    ax = fig.subplots()
    ax.scatter(risks, advrisks, s=28, color="tab:blue", zorder=3, label="partitions")
    span = np.linspace(min(risks.min(), report.config.alpha),
                       max(risks.max(), report.config.alpha), 50)
    ax.plot(span, report.slope * span + report.intercept, color="tab:orange",
            label=f"fit: slope {report.slope:.3g}")
    ax.scatter([report.config.alpha], [report.c_adv], marker="*", s=140,
               color="tab:red", zorder=4,
               label=f"bound {report.c_adv:.4g} at alpha {report.config.alpha:.4g}")
    ax.set_xlabel("test risk")
    ax.set_ylabel("test adversarial risk")
    ax.set_title(f"{report.config.metric.name}, eps = {report.config.epsilon:g}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_sweep_figure(points, path: str) -> str:
    """Train/test expansion fractions against the sphere count."""
    spheres = [p.spheres for p in points]
    fig = Figure(figsize=(5.5, 4.2), dpi=_DPI)
    ax = fig.subplots()
    ax.plot(spheres, [p.train_expansion for p in points], "o-",
            color="tab:blue", label="train expansion")
    ax.plot(spheres, [p.test_expansion for p in points], "s-",
            color="tab:orange", label="test expansion")
    ax.set_xlabel("spheres")
    ax.set_ylabel("expanded membership fraction")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_invert_figure(probes, risk_budget: float, chosen: float, path: str) -> str:
    """Bound probes along the bisection, the budget line, and the answer."""
    probes = sorted(probes)
    eps = [p[0] for p in probes]
    vals = [p[1] for p in probes]
    fig = Figure(figsize=(5.5, 4.2), dpi=_DPI)
    ax = fig.subplots()
    ax.plot(eps, vals, "o-", color="tab:blue", label="bound probes")
    ax.axhline(risk_budget, color="tab:red", linestyle="--",
               label=f"budget {risk_budget:g}")
    ax.axvline(chosen, color="tab:green", linestyle=":",
               label=f"max strength {chosen:.4g}")
    ax.set_xlabel("attack strength eps")
    ax.set_ylabel("estimated bound")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    return path


def render_attack_figure(distances, epsilon: float, path: str) -> str:
    """Histogram of achieved perturbation sizes against the budget."""
    fig = Figure(figsize=(5.5, 4.2), dpi=_DPI)
    ax = fig.subplots()
    ax.hist(distances, bins=40, color="tab:blue", alpha=0.8)
    ax.axvline(epsilon, color="tab:red", linestyle="--", label=f"budget {epsilon:g}")
    ax.set_xlabel("perturbation size")
    ax.set_ylabel("samples")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    return path
