"""Figure rendering for reports: rate summaries and sweep curves.

Figures are written to files next to the delimited report output; the Agg
backend is forced so this works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .runner import AggregateReport  # noqa: E402

_RATE_FIELDS = [
    ("decoy_error_rate", "decoy error"),
    ("detection_rate", "detection"),
    ("message_bit_error_rate", "message error"),
    ("eve_bit_accuracy", "eve bit acc"),
    ("eve_xor_accuracy", "eve xor acc"),
]

_ANALYTIC_FOR = {
    "decoy_error_rate": "decoy_error_rate",
    "message_bit_error_rate": "message_bit_error_rate",
    "eve_bit_accuracy": "eve_bit_accuracy",
    "eve_xor_accuracy": "eve_xor_accuracy",
}


def save_report_figure(report: AggregateReport, path) -> None:
    """Two panels: sampled rates with 3-sigma bars (analytic marks overlaid),
    and the per-round key fidelity trace."""
    sampled = report.sampled or {}
    analytic = report.analytic or {}

    labels, means, errs, marks = [], [], [], []
    for key, label in _RATE_FIELDS:
        stat = sampled.get(key)
        if not stat or stat.get("mean") is None:
            continue
        labels.append(label)
        means.append(stat["mean"])
        errs.append(stat.get("ci3") or 0.0)
        marks.append(analytic.get(_ANALYTIC_FOR.get(key, "")))

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    if labels:
        xs = range(len(labels))
        ax1.bar(xs, means, yerr=errs, capsize=4, color="#4878a8", alpha=0.85)
        for x, mark in zip(xs, marks):
            if mark is not None:
                ax1.plot([x - 0.35, x + 0.35], [mark, mark], "r--", lw=1.5)
        ax1.set_xticks(list(xs))
        ax1.set_xticklabels(labels, rotation=30, ha="right")
    ax1.set_ylabel("rate")
    ax1.set_title("sampled rates (red dashes: analytic)")

    fids = (sampled.get("key_fidelity_per_round") or []) if sampled else []
    xs = [i + 1 for i, f in enumerate(fids) if f is not None]
    ys = [f for f in fids if f is not None]
    if ys:
        ax2.plot(xs, ys, "o-", color="#348153")
        ax2.set_ylim(min(0.0, min(ys)) - 0.02, 1.02)
    ax2.set_xlabel("round")
    ax2.set_ylabel("mean key fidelity")
    ax2.set_title("key fidelity per round")

    fig.suptitle(report.scenario_id)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_figure(reports: list[AggregateReport], param: str, values, path) -> None:
    """Each sampled metric against the swept parameter, analytic values dashed."""
    try:
        xs = [float(v) for v in values]
    except (TypeError, ValueError):
        xs = list(range(len(values)))

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for key, label in _RATE_FIELDS:
        ys, errs = [], []
        for r in reports:
            stat = (r.sampled or {}).get(key)
            ys.append(stat["mean"] if stat and stat.get("mean") is not None else None)
            errs.append(stat.get("ci3") or 0.0 if stat else 0.0)
        if all(y is None for y in ys):
            continue
        pts = [(x, y, e) for x, y, e in zip(xs, ys, errs) if y is not None]
        ax.errorbar(
            [p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts],
            marker="o", capsize=3, label=label,
        )
    for key, label in _RATE_FIELDS:
        akey = _ANALYTIC_FOR.get(key)
        ys = [(r.analytic or {}).get(akey) if akey else None for r in reports]
        if all(y is None for y in ys):
            continue
        pts = [(x, y) for x, y in zip(xs, ys) if y is not None]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "--", alpha=0.7, label=f"{label} (analytic)")

    ax.set_xlabel(param)
    ax.set_ylabel("rate")
    ax.legend(fontsize=8)
    ax.set_title(f"sweep over {param}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
