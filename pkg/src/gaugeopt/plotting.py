"""Figure rendering for solver traces.

Renders convergence figures next to the delimited trace output so a run
directory is self-describing: one PNG per experiment with the objective
and best-so-far curves per method on a log scale.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_trace_figure"]


def render_trace_figure(traces: dict, out_path, p_star: float | None = None, title: str = ""):
    """Plot per-method convergence curves and save a PNG.

    ``traces`` maps a method label to a Trace.  When a reference value
    p_star is given the plot shows squared-gap curves, otherwise the raw
    objective values.
    """
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for label, trace in sorted(traces.items()):
        ks = np.array([r[0] for r in trace.rows])
        obj = trace.objectives
        if p_star is not None:
            vals = np.maximum(0.5 * obj**2 - 0.5 * p_star**2, 1e-18)
            ax.semilogy(ks, vals, label=label)
        else:
            ax.semilogy(ks, np.maximum(obj, 1e-18), label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("squared-objective gap" if p_star is not None else "objective")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
