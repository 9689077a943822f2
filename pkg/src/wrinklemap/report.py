"""Cohort report files: group table, region table, text summary and figures."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cohortstats import CohortReport  # noqa: E402
from .regions import REGION_IDS  # noqa: E402

GROUP_COLUMNS = ["age_group", "n_smoker", "n_nonsmoker",
                 "overall_average", "smoker_average", "nonsmoker_average"]
REGION_COLUMNS = ["region", "name", "nonsmoker_average", "smoker_average", "p_value"]

# fixed PNG metadata keeps figures byte-identical between runs
_PNG_METADATA = {"Software": None}


def _cell(value, fmt="{:.2f}"):
    return "" if value is None else fmt.format(value)


def format_p(p) -> str:
    return _cell(p, "{:.3f}")


def write_group_table(path, report: CohortReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GROUP_COLUMNS)
        for g in report.groups:
            w.writerow([g.group.label, g.n_smoker, g.n_nonsmoker,
                        _cell(g.overall), _cell(g.smoker), _cell(g.nonsmoker)])


def write_region_table(path, report: CohortReport, names=None) -> None:
    names = names or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_COLUMNS)
        for r in report.regions:
            w.writerow([r.region, names.get(r.region, ""), _cell(r.mean_nonsmoker, "{:.4f}"),
                        _cell(r.mean_smoker, "{:.4f}"), format_p(r.p_value)])


def summary_text(report: CohortReport, names=None, failures=()) -> str:
    names = names or {}

    def corr(v):
        return "undefined" if v is None else f"{v:.4f}"

    lines = [
        f"subjects analysed: {report.n_subjects}",
        f"subjects skipped: {len(failures)}",
        f"group comparison test: {report.test} (two-sided)",
        "",
        "correlation of age-group midpoint with average face density:",
        f"  overall:     {corr(report.correlation_overall)}",
        f"  smokers:     {corr(report.correlation_smoker)}",
        f"  non-smokers: {corr(report.correlation_nonsmoker)}",
        "",
        "regions where smokers differ at p < 0.05:",
    ]
    significant = [r for r in report.regions if r.p_value is not None and r.p_value < 0.05]
    for r in significant:
        direction = "higher" if (r.mean_smoker or 0) > (r.mean_nonsmoker or 0) else "lower"
        lines.append(f"  region {r.region} ({names.get(r.region, '?')}): smokers {direction}, "
                     f"p = {format_p(r.p_value)}")
    if not significant:
        lines.append("  none")
    if failures:
        lines += ["", "skipped subjects:"]
        lines += [f"  {sid}: {msg}" for sid, msg in failures]
    return "\n".join(lines) + "\n"


def plot_density_by_age(report: CohortReport, path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    labels = [g.group.label for g in report.groups]
    x = np.arange(len(labels))
    for column, style, name in (("overall", "o-", "overall"), ("smoker", "s--", "smokers"),
                                ("nonsmoker", "^:", "non-smokers")):
        ys = np.array([np.nan if getattr(g, column) is None else getattr(g, column)
                       for g in report.groups])
        ax.plot(x, ys, style, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_xlabel("age group (years)")
    ax.set_ylabel("average wrinkle density")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_region_comparison(report: CohortReport, path) -> None:
    fig, ax = plt.subplots(figsize=(7.2, 4.0))
    x = np.arange(len(REGION_IDS))
    non = [r.mean_nonsmoker or 0.0 for r in report.regions]
    smk = [r.mean_smoker or 0.0 for r in report.regions]
    ax.bar(x - 0.2, non, width=0.4, label="non-smokers")
    ax.bar(x + 0.2, smk, width=0.4, label="smokers")
    for xi, r in zip(x, report.regions):
        if r.p_value is not None and r.p_value < 0.05:
            ax.annotate("*", (xi, max(non[xi], smk[xi])), ha="center", va="bottom")
    ax.set_xticks(x)
    ax.set_xticklabels([str(i) for i in REGION_IDS])
    ax.set_xlabel("region")
    ax.set_ylabel("average wrinkle density")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_METADATA)
    plt.close(fig)


def write_report(out_dir, report: CohortReport, names=None, failures=()) -> dict:
    """Write every report artefact under ``out_dir``; returns their paths."""
    out = Path(out_dir)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    paths = {
        "groups": out / "report_groups.csv",
        "regions": out / "report_regions.csv",
        "summary": out / "summary.txt",
        "density_by_age": out / "figures" / "density_by_age.png",
        "region_comparison": out / "figures" / "region_comparison.png",
    }
    write_group_table(paths["groups"], report)
    write_region_table(paths["regions"], report, names)
    paths["summary"].write_text(summary_text(report, names, failures))
    plot_density_by_age(report, paths["density_by_age"])
    plot_region_comparison(report, paths["region_comparison"])
    return paths
