"""Optional matplotlib helpers for metrics CSV files."""

import csv
from pathlib import Path


def plot_metrics(csv_path, out_path=None):
    """Plot estimation errors and covariance gap from a metrics CSV.

    Returns the matplotlib figure. ``out_path`` saves a PNG when given.
    Requires the ``plots`` extra.
    """
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ImportError(
            "plot_metrics needs matplotlib; install the 'plots' extra"
        ) from exc

    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")

    k = [int(r["k"]) for r in rows]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
    axes[0].plot(k, [float(r["q_err_fro"]) for r in rows], label="Q error")
    axes[0].plot(k, [float(r["r_err_fro"]) for r in rows], label="R error")
    axes[0].set_ylabel("Frobenius error")
    axes[0].set_yscale("log")
    axes[0].legend()
    axes[1].plot(k, [float(r["p_gap_fro"]) for r in rows])
    axes[1].set_ylabel("covariance gap")
    axes[1].set_yscale("log")
    eig_cols = [c for c in rows[0] if c.startswith(("q_eig_", "r_eig_"))]
    for col in eig_cols:
        axes[2].plot(k, [float(r[col]) for r in rows], label=col)
    axes[2].axhline(0.0, color="k", lw=0.5)
    axes[2].set_ylabel("estimate eigenvalues")
    axes[2].set_xlabel("step")
    axes[2].legend(ncol=2, fontsize="small")
    fig.tight_layout()
    if out_path is not None:
        fig.savefig(Path(out_path), dpi=150)
    return fig
