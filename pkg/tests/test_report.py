import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from autotab.explain import PdpCurve
from autotab.metrics import lift_table, roc_curve
from autotab.prep import Reject, Rejection
from autotab.report import (METRIC_COLUMNS, ReportBundle, describe,
                            render_html)
from autotab.svg import bar_chart, line_chart
from autotab.table import read_csv


def extract_svgs(html: str) -> list[str]:
    return re.findall(r"<svg.*?</svg>", html, flags=re.S)


def sample_bundle():
    rng = np.random.default_rng(0)
    scores = rng.random(100)
    labels = (rng.random(100) < 0.5).astype(int)
    labels[0] = 1
    labels[1] = 0
    record = {"model_id": "logreg", "fit_time_s": 0.01, "score_time_s": 0.001,
              "train_auc": 0.9, "test_auc": 0.88, "accuracy": 0.8,
              "precision": 0.7, "recall": 0.75, "f1": 0.72, "failed": False}
    return ReportBundle(
        title="run <1> & done",
        config_echo={"seed": 1991, "test_split": 0.2},
        summary=[],
        rejections=[Rejection("junk", Reject.ZERO_VARIANCE)],
        selected=["a", "b"],
        mar_report=None,
        records=[record],
        roc_curves={"logreg": roc_curve(scores, labels)},
        lift=lift_table(scores, labels, 10),
        lift_model="logreg",
        pdp_curves=[PdpCurve("a", np.array([0.0, 1.0]), np.array([0.4, 0.6]))],
        importance={"a": 0.7, "b": 0.3},
        best_model="logreg",
        timings={"prep": 0.5, "train": 2.0},
    )


class TestDescribe:
    def test_numeric_stats(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x\n1\n2\n3\n4\nNA\n")
        s = describe(read_csv(p))[0]
        assert s.kind == "numeric" and s.n == 5 and s.missing == 1
        assert s.missing_pct == pytest.approx(0.2)
        assert s.stats["mean"] == pytest.approx(2.5)
        assert s.stats["sd"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert s.stats["median"] == pytest.approx(2.5)

    def test_categorical_top_levels(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("c\nb\na\nb\n")
        s = describe(read_csv(p))[0]
        assert s.stats["levels"] == 2
        assert s.stats["top"][0] == ["b", 2]

    def test_heart_summary_covers_all_columns(self, heart_table):
        assert len(describe(heart_table)) == 14


class TestRenderHtml:
    def test_structure(self, tmp_path):
        out = tmp_path / "r.html"
        render_html(sample_bundle(), out)
        html = out.read_text(encoding="utf-8")
        assert html.startswith("<!DOCTYPE html>")
        for section in ("Run configuration", "Descriptive statistics",
                        "Data preparation", "Missing-at-random scan",
                        "Model performance", "ROC curves", "Lift:",
                        "Variable importance", "Partial dependence",
                        "Timings"):
            assert section in html
        for col in METRIC_COLUMNS:
            assert col in html
        assert "no features scanned" in html
        assert "http://" not in html.replace("http://www.w3.org/2000/svg", "")
        assert "https://" not in html
        assert html.count("<footer>") == 1

    def test_title_escaped(self, tmp_path):
        out = tmp_path / "r.html"
        render_html(sample_bundle(), out)
        html = out.read_text(encoding="utf-8")
        assert "run &lt;1&gt; &amp; done" in html
        assert "<title>run <1>" not in html

    def test_byte_identical_modulo_footer(self, tmp_path):
        a, b = tmp_path / "a.html", tmp_path / "b.html"
        render_html(sample_bundle(), a)
        render_html(sample_bundle(), b)
        strip = lambda s: re.sub(r"<footer>.*?</footer>", "", s)
        assert strip(a.read_text()) == strip(b.read_text())

    def test_svgs_are_well_formed_xml(self, tmp_path):
        out = tmp_path / "r.html"
        render_html(sample_bundle(), out)
        svgs = extract_svgs(out.read_text(encoding="utf-8"))
        assert len(svgs) >= 3
        for svg in svgs:
            ET.fromstring(svg)

    def test_unwritable_path_raises(self, tmp_path):
        with pytest.raises(OSError):
            render_html(sample_bundle(), tmp_path / "nope" / "r.html")


class TestSvg:
    def test_line_chart_deterministic(self):
        x = np.array([0.0, 0.5, 1.0])
        y = np.array([0.0, 0.8, 1.0])
        a = line_chart([(x, y, "roc")], title="t", diagonal=True)
        b = line_chart([(x, y, "roc")], title="t", diagonal=True)
        assert a == b
        ET.fromstring(a)

    def test_line_chart_rejects_nan(self):
        with pytest.raises(ValueError):
            line_chart([(np.array([0.0, np.nan]), np.array([0.0, 1.0]), "")])

    def test_bar_chart_escapes_labels(self):
        svg = bar_chart(["a<b>", "ok"], [0.6, 0.4])
        assert "a&lt;b&gt;" in svg
        ET.fromstring(svg)

    def test_bar_chart_constant_zero_values(self):
        svg = bar_chart(["a"], [0.0])
        ET.fromstring(svg)
