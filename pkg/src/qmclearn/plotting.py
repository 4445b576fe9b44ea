"""Optional figure rendering for convergence studies.

Kept separate from the data path: matplotlib is imported lazily and only
when a figure is explicitly requested, so emitting records never needs a
rendering backend.
"""

from __future__ import annotations

from pathlib import Path

from .experiments import ExperimentRecord, RateFit, group_records


def render_rates(records: list[ExperimentRecord],
                 fits: dict[tuple[str, str], RateFit], path) -> Path:
    """Log-log convergence figure, one curve per (benchmark, sampler)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for (bench, sampler), group in group_records(records).items():
        ns = [r.n for r in group]
        eg = [r.gen_error for r in group]
        label = f"{bench} / {sampler}"
        fit = fits.get((bench, sampler))
        if fit is not None:
            label += f" (rate {-fit.slope:.2f}, R$^2$={fit.r_squared:.3f})"
        ax.loglog(ns, eg, marker="o", base=2, label=label)
    ax.set_xlabel("training points N")
    ax.set_ylabel("generalization error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
