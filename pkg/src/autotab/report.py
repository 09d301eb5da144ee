"""Descriptive statistics and the single-file HTML run report.

The report embeds every chart as inline SVG and references no external
resources. Rendering is a pure function of the bundle; the only
non-deterministic content is the timestamp in the footer line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .svg import bar_chart, line_chart, _esc
from .table import Kind, Table

METRIC_COLUMNS = ["Model", "Fitting time (secs)", "Scoring time (secs)",
                  "Train AUC", "Test AUC", "Accuracy", "Precision", "Recall",
                  "F1_score"]


@dataclass(frozen=True)
class ColumnSummary:
    name: str
    kind: str
    n: int
    missing: int
    missing_pct: float
    stats: dict

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "n": self.n,
                "missing": self.missing, "missing_pct": self.missing_pct,
                "stats": self.stats}


def describe(t: Table) -> list[ColumnSummary]:
    """Per-column descriptives: numeric five-number summary + mean/sd,
    categorical level counts with top-5 frequencies."""
    out = []
    for c in t.columns:
        n = c.n_rows
        miss = int(c.missing.sum())
        stats: dict = {}
        obs = c.non_missing()
        if c.kind is Kind.NUMERIC and len(obs):
            q = np.quantile(obs, [0.25, 0.5, 0.75])
            stats = {"mean": float(obs.mean()),
                     "sd": float(obs.std(ddof=1)) if len(obs) > 1 else 0.0,
                     "min": float(obs.min()), "q1": float(q[0]),
                     "median": float(q[1]), "q3": float(q[2]),
                     "max": float(obs.max())}
        elif c.kind is Kind.CATEGORICAL:
            names = [c.levels[int(v)] for v in obs]
            uniq, counts = np.unique(names, return_counts=True) if names else ([], [])
            order = sorted(range(len(uniq)), key=lambda i: (-counts[i], uniq[i]))
            stats = {"levels": len(uniq),
                     "top": [[str(uniq[i]), int(counts[i])] for i in order[:5]]}
        elif c.kind is Kind.BOOLEAN and len(obs):
            stats = {"true": int(obs.sum()), "false": int(len(obs) - obs.sum())}
        elif c.kind is Kind.DATE and len(obs):
            stats = {"min_epochdays": int(obs.min()), "max_epochdays": int(obs.max())}
        out.append(ColumnSummary(name=c.name, kind=c.kind.value, n=n,
                                 missing=miss,
                                 missing_pct=miss / n if n else 0.0,
                                 stats=stats))
    return out


@dataclass
class ReportBundle:
    title: str
    config_echo: dict
    summary: list = field(default_factory=list)
    rejections: list = field(default_factory=list)
    selected: list = field(default_factory=list)
    mar_report: object = None
    records: list = field(default_factory=list)
    roc_curves: dict = field(default_factory=dict)
    lift: object = None
    lift_model: str = ""
    pdp_curves: list = field(default_factory=list)
    importance: dict = field(default_factory=dict)
    best_model: str = ""
    timings: dict = field(default_factory=dict)


def _num(v) -> str:
    return f"{v:.3f}"


def _html_table(headers, rows) -> str:
    head = "".join(f"<th>{_esc(h)}</th>" for h in headers)
    body = "".join("<tr>" + "".join(f"<td>{_esc(c)}</td>" for c in row) + "</tr>"
                   for row in rows)
    return f"<table><thead><tr>{head}</tr></thead><tbody>{body}</tbody></table>"


_STYLE = """
body{font-family:Helvetica,Arial,sans-serif;margin:24px auto;max-width:1000px;
     color:#222;line-height:1.4}
h1{font-size:22px} h2{font-size:17px;border-bottom:1px solid #ddd;
     padding-bottom:4px;margin-top:30px}
table{border-collapse:collapse;font-size:12px;margin:8px 0}
th,td{border:1px solid #ccc;padding:3px 8px;text-align:right}
th{background:#f0f0f0} td:first-child,th:first-child{text-align:left}
.charts{display:flex;flex-wrap:wrap;gap:12px}
footer{margin-top:40px;font-size:11px;color:#888}
.best{background:#eef7ee}
"""


def render_html(bundle: ReportBundle, out_path) -> None:
    """Write the UTF-8 HTML5 report; raises OSError on unwritable paths."""
    s = []
    s.append("<!DOCTYPE html>")
    s.append('<html lang="en"><head><meta charset="utf-8">')
    s.append(f"<title>{_esc(bundle.title)}</title>")
    s.append(f"<style>{_STYLE}</style></head><body>")
    s.append(f"<h1>{_esc(bundle.title)}</h1>")

    s.append("<h2>Run configuration</h2>")
    s.append(_html_table(["Setting", "Value"],
                         [(k, str(v)) for k, v in sorted(bundle.config_echo.items())]))

    s.append("<h2>Descriptive statistics</h2>")
    rows = []
    for c in bundle.summary:
        if c.kind == "numeric" and c.stats:
            detail = (f"mean={_num(c.stats['mean'])} sd={_num(c.stats['sd'])} "
                      f"min={_num(c.stats['min'])} median={_num(c.stats['median'])} "
                      f"max={_num(c.stats['max'])}")
        elif c.kind == "categorical":
            top = ", ".join(f"{lv}({ct})" for lv, ct in c.stats.get("top", []))
            detail = f"{c.stats.get('levels', 0)} levels: {top}"
        else:
            detail = " ".join(f"{k}={v}" for k, v in c.stats.items())
        rows.append((c.name, c.kind, c.n, c.missing, f"{100*c.missing_pct:.1f}%",
                     detail))
    s.append(_html_table(["Column", "Kind", "N", "Missing", "Missing %",
                          "Summary"], rows))

    s.append("<h2>Data preparation</h2>")
    s.append(f"<p>Selected features ({len(bundle.selected)}): "
             f"{_esc(', '.join(bundle.selected))}</p>")
    if bundle.rejections:
        s.append(_html_table(
            ["Feature", "Reason", "Detail"],
            [(r.feature, r.reason.value, r.detail) for r in bundle.rejections]))
    else:
        s.append("<p>No features rejected.</p>")

    s.append("<h2>Missing-at-random scan</h2>")
    mar = bundle.mar_report
    if mar is None or not mar.entries:
        s.append("<p>no features scanned</p>")
    else:
        s.append(_html_table(
            ["Feature", "Missing", "Aux AUC", "Verdict", "Note"],
            [(e.feature, e.missing_count,
              _num(e.auc) if e.auc is not None else "-", e.verdict, e.note)
             for e in mar.entries]))

    s.append("<h2>Model performance</h2>")
    rows = []
    for r in bundle.records:
        rows.append((r["model_id"], _num(r["fit_time_s"]), _num(r["score_time_s"]),
                     _num(r["train_auc"]), _num(r["test_auc"]), _num(r["accuracy"]),
                     _num(r["precision"]), _num(r["recall"]), _num(r["f1"])))
    s.append(_html_table(METRIC_COLUMNS, rows))
    if bundle.best_model:
        s.append(f"<p>Best model by test AUC: <b>{_esc(bundle.best_model)}</b></p>")

    if bundle.roc_curves:
        s.append("<h2>ROC curves (test)</h2>")
        s.append('<div class="charts">')
        for mid, curve in bundle.roc_curves.items():
            s.append(line_chart([(curve.fpr, curve.tpr, "")],
                                title=f"{mid} (AUC {_num(curve.auc)})",
                                x_label="False positive rate",
                                y_label="True positive rate", diagonal=True))
        s.append("</div>")

    if bundle.lift is not None:
        s.append(f"<h2>Lift: {_esc(bundle.lift_model)}</h2>")
        bins = bundle.lift.bins
        s.append(line_chart(
            [([b.bin for b in bins], [b.cum_lift for b in bins], "")],
            title="Cumulative lift", x_label="Bin", y_label="Cumulative lift"))
        s.append(_html_table(
            ["Bin", "N", "Events", "Response rate", "Cum events",
             "Cum capture", "Cum lift"],
            [(b.bin, b.n, b.events, _num(b.response_rate), b.cum_events,
              _num(b.cum_capture_rate), _num(b.cum_lift)) for b in bins]))

    if bundle.importance:
        s.append("<h2>Variable importance (best model)</h2>")
        items = sorted(bundle.importance.items(), key=lambda kv: -kv[1])[:20]
        s.append(bar_chart([k for k, _ in items], [v for _, v in items]))

    if bundle.pdp_curves:
        s.append("<h2>Partial dependence (best model)</h2>")
        s.append('<div class="charts">')
        for curve in bundle.pdp_curves:
            s.append(line_chart([(curve.grid, curve.mean_score, "")],
                                title=curve.feature, x_label=curve.feature,
                                y_label="Mean score"))
        s.append("</div>")

    if bundle.timings:
        s.append("<h2>Timings</h2>")
        s.append(_html_table(["Stage", "Seconds"],
                             [(k, _num(v)) for k, v in bundle.timings.items()]))

    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S UTC")
    s.append(f"<footer>generated {stamp}</footer>")
    s.append("</body></html>")
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(s) + "\n")
