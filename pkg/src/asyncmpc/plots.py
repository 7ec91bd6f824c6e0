"""Figure rendering for reports and sweeps.

Everything draws through the Agg backend straight to files; nothing
here opens a window. PNG metadata is pinned so a rerun writes the same
bytes the first run did.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": "asyncmpc"}

__all__ = ["render_outcomes_figure", "render_sweep_figure"]


def _label(sc):
    extra = sc["strategy"] if sc["strategy"] != "honest" else ""
    return f"{sc['protocol']} n={sc['n']}" + (f"\n{extra}" if extra else "")


def render_outcomes_figure(reports_data, path):
    """Stacked outcome counts per scenario, error rate printed on top."""
    labels = [_label(r["scenario"]) for r in reports_data]
    succ = [r["successes"] for r in reports_data]
    fail = [r["failures"] for r in reports_data]
    viol = [r["violations"] for r in reports_data]
    xs = range(len(labels))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(labels)), 3.6))
    ax.bar(xs, succ, color="#4a7", label="success")
    ax.bar(xs, fail, bottom=succ, color="#fb3", label="failure")
    ax.bar(xs, viol, bottom=[s + f for s, f in zip(succ, fail)],
           color="#d44", label="violation")
    for x, r in zip(xs, reports_data):
        est = r["error_rate"]["estimate"]
        ax.text(x, r["trials"], f"{est:.2g}", ha="center", va="bottom",
                fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("trials")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def render_sweep_figure(sweep, path):
    """Log-log cost points with the fitted trend line."""
    xs = [p["z_size"] for p in sweep["points"]]
    ys = [p["cost"] for p in sweep["points"]]
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    ax.loglog(xs, ys, "o", color="#36c")
    x0, x1 = min(xs), max(xs)
    slope = sweep["slope"]
    # anchor the fitted line at the first measured point
    y0 = ys[xs.index(x0)]
    ax.loglog([x0, x1], [y0, y0 * (x1 / x0) ** slope], "--", color="#888",
              label=f"slope {slope:.2f}")
    ax.set_xlabel("|Z|")
    ax.set_ylabel("cost per multiplication")
    ax.set_title(sweep["protocol"])
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path
