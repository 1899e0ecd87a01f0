"""Render correlation results and the per-pair showcase page.

The CSV carries one row per (dataset, generator, objective, metric) plus
bench-level aggregate rows; the markdown view mirrors the usual metric-rows by
dataset-columns correlation table. Every report header restates the analysis
assumptions so that numbers are interpretable on their own.
"""

from __future__ import annotations

import html
from dataclasses import dataclass

from .datasets import JoinedPair, bench_of
from .errors import DegenerateSeries
from .pipeline import collect_series, metric_name
from .stats import CorrelationResult, aggregate, kendall_tau_b, spearman_rho

ASSUMPTIONS = (
    "annotators are aggregated by arithmetic mean per pair before correlation",
    "Kendall correlation uses the tie-corrected tau-b variant",
    "Spearman correlation ranks ties by their mean rank",
    "human overall ratings are normalized from the 1-10 scale to [0, 1]",
    "error counts are mapped to quality via 1 - min(e, 9)/9, then averaged",
)

BENCH_LABELS = {"general": "GeneralBench", "compositional": "CompBench"}


@dataclass
class ReportRow:
    dataset: str
    generator: str
    objective: str
    metric: str
    tau: float | None
    rho: float | None
    p_tau: float | None
    p_rho: float | None
    n: int
    dropped: int
    note: str = ""


def build_report(joined: list[JoinedPair], score_records: list[dict],
                 objectives=("overall", "error_counting"), *,
                 tau_variant: str = "b") -> tuple[list[ReportRow], list[ReportRow]]:
    """Compute per-cell correlation rows and bench-level aggregate rows."""
    rows: list[ReportRow] = []
    for objective in objectives:
        human_attr = ("human_overall" if objective == "overall"
                      else "human_error_quality")
        rated: dict[tuple[str, str], int] = {}
        for p in joined:
            if getattr(p, human_attr) is not None:
                cell = (p.prompt.dataset, p.generator)
                rated[cell] = rated.get(cell, 0) + 1

        for (dataset, generator, metric), series in sorted(
                collect_series(joined, score_records, objective).items()):
            n = len(series.pair_ids)
            dropped = rated.get((dataset, generator), n) - n
            try:
                tau, p_tau = kendall_tau_b(series.metric_scores,
                                           series.human_scores,
                                           variant=tau_variant)
                rho, p_rho = spearman_rho(series.metric_scores,
                                          series.human_scores)
                rows.append(ReportRow(dataset, generator, objective, metric,
                                      tau, rho, p_tau, p_rho, n, dropped))
            except DegenerateSeries:
                rows.append(ReportRow(dataset, generator, objective, metric,
                                      None, None, None, None, n, dropped,
                                      note="n/a (all-tied series)"))

    aggregates: list[ReportRow] = []
    cells: dict[tuple[str, str, str], list[ReportRow]] = {}
    for row in rows:
        if row.tau is None:
            continue
        key = (bench_of(row.dataset), row.objective, row.metric)
        cells.setdefault(key, []).append(row)
    for (bench, objective, metric), members in sorted(cells.items()):
        summary = aggregate([CorrelationResult(r.tau, r.rho, r.p_tau, r.p_rho, r.n)
                             for r in members])
        aggregates.append(ReportRow(BENCH_LABELS[bench], "all", objective, metric,
                                    summary.tau, summary.rho, None, None,
                                    summary.n, sum(r.dropped for r in members)))
    return rows, aggregates


def _fmt(value: float | None, places: int = 6) -> str:
    return "n/a" if value is None else f"{value:.{places}f}"


def render_csv(rows: list[ReportRow], aggregates: list[ReportRow]) -> str:
    lines = ["dataset,model,objective,metric,tau,rho,p_tau,p_rho,n,dropped"]
    ordered = sorted(rows, key=lambda r: (r.objective, r.metric, r.dataset,
                                          r.generator))
    for r in ordered + aggregates:
        lines.append(",".join([r.dataset, r.generator, r.objective, r.metric,
                               _fmt(r.tau), _fmt(r.rho), _fmt(r.p_tau),
                               _fmt(r.p_rho), str(r.n), str(r.dropped)]))
    return "\n".join(lines) + "\n"


def render_markdown(rows: list[ReportRow], aggregates: list[ReportRow]) -> str:
    out = ["# Correlation report", "", "Assumptions:", ""]
    out.extend(f"- {a}" for a in ASSUMPTIONS)
    out.append("")

    objectives = sorted({r.objective for r in rows})
    for objective in objectives:
        subset = [r for r in rows if r.objective == objective]
        cells = sorted({(r.dataset, r.generator) for r in subset})
        metrics = sorted({r.metric for r in subset})
        out.append(f"## Objective: {objective}")
        out.append("")
        header = ["Metric"]
        for dataset, generator in cells:
            header.append(f"{dataset}/{generator} τ")
            header.append(f"{dataset}/{generator} ρ")
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "---|" * len(header))
        by_key = {(r.metric, r.dataset, r.generator): r for r in subset}
        for metric in metrics:
            line = [metric]
            for dataset, generator in cells:
                r = by_key.get((metric, dataset, generator))
                if r is None:
                    line.extend(["—", "—"])
                else:
                    line.append(_fmt(r.tau, 4))
                    line.append(_fmt(r.rho, 4))
            out.append("| " + " | ".join(line) + " |")
        out.append("")

    if aggregates:
        out.append("## Bench aggregates (uniform mean over dataset×model cells)")
        out.append("")
        out.append("| Bench | Objective | Metric | τ | ρ | n |")
        out.append("|---|---|---|---|---|---|")
        for r in aggregates:
            out.append(f"| {r.dataset} | {r.objective} | {r.metric} | "
                       f"{_fmt(r.tau, 4)} | {_fmt(r.rho, 4)} | {r.n} |")
        out.append("")
    return "\n".join(out)


def render_showcase(joined: list[JoinedPair], descriptions: dict[str, dict],
                    score_records: list[dict]) -> str:
    """Static HTML listing prompt, description, scores, and rationales per pair."""
    scores_by_pair: dict[str, list[dict]] = {}
    for record in score_records:
        scores_by_pair.setdefault(record["pair_id"], []).append(record)

    parts = [
        "<!doctype html>",
        "<html><head><meta charset='utf-8'><title>Evaluation showcase</title>",
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
        "article{border:1px solid #ccc;border-radius:6px;padding:1em;margin:1em 0}"
        "table{border-collapse:collapse}td,th{border:1px solid #ddd;"
        "padding:0.3em 0.6em;text-align:left}</style></head><body>",
        "<h1>Evaluation showcase</h1>",
    ]
    for pair in sorted(joined, key=lambda p: p.pair_id):
        parts.append("<article>")
        parts.append(f"<h2>{html.escape(pair.pair_id)}</h2>")
        parts.append(f"<p><b>Prompt</b> ({html.escape(pair.prompt.dataset)}, "
                     f"{html.escape(pair.generator)}): "
                     f"{html.escape(pair.prompt.text)}</p>")
        description = descriptions.get(pair.pair_id)
        if description:
            parts.append(f"<p><b>Description</b>: "
                         f"{html.escape(description['fused_text'])}</p>")
        records = scores_by_pair.get(pair.pair_id, [])
        if records:
            parts.append("<table><tr><th>metric</th><th>objective</th>"
                         "<th>raw</th><th>score</th><th>rationale</th></tr>")
            ordered = sorted(records, key=lambda r: (metric_name(r),
                                                     r.get("objective") or ""))
            for r in ordered:
                parts.append(
                    "<tr><td>{}</td><td>{}</td><td>{:.4f}</td><td>{:.4f}</td>"
                    "<td>{}</td></tr>".format(
                        html.escape(metric_name(r)),
                        html.escape(r.get("objective") or "—"),
                        r["raw_value"], r["normalized_score"],
                        html.escape(r.get("rationale", ""))))
            parts.append("</table>")
        parts.append("</article>")
    parts.append("</body></html>")
    return "\n".join(parts) + "\n"
