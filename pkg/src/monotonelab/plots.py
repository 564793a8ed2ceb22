"""Static report figures rendered next to the delimited output.

All rendering uses the Agg backend so the runner works headless; each
function writes one PNG and returns its path.  Figures are diagnostic
companions to the CSV/JSON artifacts, which remain the authoritative
record (and the only byte-deterministic one).
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STATUS_COLORS = {
    "PASS": "#2a9d3a",
    "FAIL": "#d62728",
    "INCONCLUSIVE": "#e8a33d",
    "DEGENERATE_DOMAIN": "#8c8c8c",
    "HYPOTHESIS_VIOLATION": "#7f4fc9",
}

# floor for log-scale plotting of exact zeros
_LOG_FLOOR = 1e-16


def _clip_log(values):
    out = []
    for v in values:
        if not math.isfinite(v):
            out.append(np.nan)
        else:
            out.append(max(abs(v), _LOG_FLOOR))
    return np.asarray(out)


def render_check_figure(scenario_name, check_id, report, path):
    """Convergence figure for one check: value and gap against the level scale."""
    table = report.convergence_table
    t = np.asarray([row[1] for row in table], dtype=float)
    values = np.asarray([row[2] for row in table], dtype=float)
    gaps = _clip_log([row[3] for row in table])

    fig, (ax_v, ax_g) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    finite = np.isfinite(values)
    ax_v.plot(t[finite], values[finite], marker="o", ms=3.5, lw=1.0, color="#1f77b4")
    ax_v.set_xscale("log")
    ax_v.set_xlabel("step / radius")
    ax_v.set_ylabel("level value")
    ax_v.set_title("estimate per level")
    ax_v.grid(True, which="both", alpha=0.3)

    ok = np.isfinite(gaps)
    ax_g.plot(t[ok], gaps[ok], marker="o", ms=3.5, lw=1.0, color="#d62728")
    ax_g.axhline(report.tolerance, color="black", ls="--", lw=0.9, label="tolerance")
    ax_g.set_xscale("log")
    ax_g.set_yscale("log")
    ax_g.set_xlabel("step / radius")
    ax_g.set_ylabel("gap")
    ax_g.set_title("gap per level")
    ax_g.grid(True, which="both", alpha=0.3)
    ax_g.legend(loc="best", fontsize=8)

    color = _STATUS_COLORS.get(report.status, "black")
    fig.suptitle(
        f"{scenario_name} / {check_id} [{report.theorem_id}]  {report.status}",
        fontsize=10,
        color=color,
    )
    fig.tight_layout(rect=(0, 0, 1, 0.93))
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_summary_figure(scenario_name, rows, path):
    """Horizontal bar chart of max gap per check, colored by status.

    Parameters
    ----------
    rows : sequence of (check_id, max_gap, tolerance, status)
    """
    ids = [r[0] for r in rows]
    gaps = _clip_log([r[1] for r in rows])
    tols = [r[2] for r in rows]
    statuses = [r[3] for r in rows]
    colors = [_STATUS_COLORS.get(s, "black") for s in statuses]
    # infinite gaps (unevaluated checks) render at a sentinel magnitude
    plotted = np.where(np.isnan(gaps), 1e3, gaps)

    height = max(2.2, 0.42 * len(rows) + 1.2)
    fig, ax = plt.subplots(figsize=(8.0, height))
    y = np.arange(len(rows))
    ax.barh(y, plotted, color=colors, height=0.6)
    for yi, tol in zip(y, tols):
        if isinstance(tol, float) and math.isfinite(tol):
            ax.plot([tol, tol], [yi - 0.35, yi + 0.35], color="black", lw=1.0)
    for yi, (gap, status) in enumerate(zip(gaps, statuses)):
        label = "inf" if np.isnan(gap) else f"{gap:.2e}"
        ax.text(
            plotted[yi] * 1.3, yi, f"{label} {status}", va="center", fontsize=8
        )
    ax.set_yticks(y)
    ax.set_yticklabels(ids, fontsize=8)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("max gap (log scale, ticks mark tolerances)")
    ax.set_title(f"{scenario_name}: verification summary")
    ax.grid(True, axis="x", which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
