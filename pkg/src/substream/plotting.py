"""Figure rendering for run reports.

One figure per removal strategy: mean objective value against k, one line
per algorithm.  Files land next to the delimited report so a run leaves a
self-contained output directory.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_STYLE = {
    "robust-greedy": dict(color="#1f77b4", marker="o"),
    "robust-sieve": dict(color="#2ca02c", marker="s"),
    "sieve": dict(color="#d62728", marker="^"),
    "greedy": dict(color="#9467bd", marker="d"),
    "random": dict(color="#7f7f7f", marker="x", linestyle="--"),
}


def render_report_figures(report, out_dir, stem: str = "report") -> list[Path]:
    """Render one PNG per strategy found in the report rows."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    strategies = sorted({row.strategy for row in report.rows})
    paths = []
    for strategy in strategies:
        rows = [r for r in report.rows if r.strategy == strategy]
        ks = sorted({r.k for r in rows})
        algorithms = sorted({r.algorithm for r in rows})
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for algorithm in algorithms:
            means = []
            for k in ks:
                values = [r.value for r in rows if r.algorithm == algorithm and r.k == k]
                means.append(sum(values) / len(values) if values else float("nan"))
            ax.plot(ks, means, label=algorithm, **_STYLE.get(algorithm, {}))
        ax.set_xlabel("k")
        ax.set_ylabel("objective value")
        ax.set_title(f"{report.descriptor}\nremoval: {strategy}", fontsize=9)
        ax.legend(fontsize=7)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_dir / f"{stem}_{strategy}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        paths.append(path)
    return paths
