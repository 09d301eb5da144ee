import numpy as np
import pytest

from autotab.mar import (MarConfig, MarError, MarReport, _stratified_folds,
                         mar_indicator, mar_scan)
from autotab.prep import PrepConfig, fit_prep
from autotab.table import infer_schema, read_csv


def build_csv(tmp_path, rows, header, name="m.csv"):
    p = tmp_path / name
    p.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return read_csv(p)


def informative_table(tmp_path, n=300, seed=0):
    """x goes missing exactly when z is above its median -> MAR signal."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    x = rng.standard_normal(n)
    y = (rng.random(n) < 0.5).astype(int)
    cut = np.median(z)
    rows = []
    for i in range(n):
        xs = "NA" if z[i] > cut else f"{x[i]:.4f}"
        rows.append(f"{y[i]},{xs},{z[i]:.4f}")
    return build_csv(tmp_path, rows, "y,x,z")


def random_missing_table(tmp_path, n=300, n_miss=60, seed=1):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    y = (rng.random(n) < 0.5).astype(int)
    miss = set(rng.permutation(n)[:n_miss].tolist())
    rows = []
    for i in range(n):
        xs = "NA" if i in miss else f"{x[i]:.4f}"
        rows.append(f"{y[i]},{xs},{z[i]:.4f}")
    return build_csv(tmp_path, rows, "y,x,z")


class TestIndicator:
    def test_marks_missing_cells(self, tmp_path):
        t = build_csv(tmp_path, ["0,1", "1,NA", "0,3"], "y,x")
        assert list(mar_indicator(t, "x")) == [0, 1, 0]


class TestFolds:
    def test_partition_and_balance(self):
        rng = np.random.default_rng(0)
        y = (rng.random(100) < 0.3).astype(int)
        folds = _stratified_folds(y, 5, rng)
        assert sorted(np.unique(folds)) == [0, 1, 2, 3, 4]
        per_fold_pos = [int(y[folds == f].sum()) for f in range(5)]
        assert max(per_fold_pos) - min(per_fold_pos) <= 1


class TestScan:
    def test_informative_missingness_retained(self, tmp_path):
        t = informative_table(tmp_path)
        schema = infer_schema(t, "y")
        out, report = mar_scan(t, schema, MarConfig(), seed=0)
        entry = next(e for e in report.entries if e.feature == "x")
        assert entry.verdict == "Retained"
        assert entry.auc >= 0.8
        assert out.has_column("x_mar")
        assert list(out.column("x_mar").values) == list(mar_indicator(t, "x"))

    def test_random_missingness_dropped(self, tmp_path):
        t = random_missing_table(tmp_path)
        schema = infer_schema(t, "y")
        out, report = mar_scan(t, schema, MarConfig(), seed=0)
        entry = next(e for e in report.entries if e.feature == "x")
        assert entry.verdict == "Dropped"
        assert entry.auc < 0.8
        assert not out.has_column("x_mar")

    def test_too_few_missing_skipped(self, tmp_path):
        t = random_missing_table(tmp_path, n_miss=5, seed=2)
        schema = infer_schema(t, "y")
        _, report = mar_scan(t, schema, MarConfig(), seed=0)
        entry = next(e for e in report.entries if e.feature == "x")
        assert entry.verdict == "Skipped"
        assert "fewer than 10" in entry.note

    def test_nearly_all_missing_skipped(self, tmp_path):
        t = random_missing_table(tmp_path, n_miss=295, seed=3)
        schema = infer_schema(t, "y")
        _, report = mar_scan(t, schema, MarConfig(), seed=0)
        entry = next(e for e in report.entries if e.feature == "x")
        assert entry.verdict == "Skipped"
        assert "constant" in entry.note

    def test_fully_observed_features_absent_from_report(self, tmp_path):
        t = informative_table(tmp_path)
        schema = infer_schema(t, "y")
        _, report = mar_scan(t, schema, MarConfig(), seed=0)
        assert all(e.feature != "z" for e in report.entries)

    def test_deterministic(self, tmp_path):
        t = random_missing_table(tmp_path)
        schema = infer_schema(t, "y")
        _, a = mar_scan(t, schema, MarConfig(), seed=7)
        _, b = mar_scan(t, schema, MarConfig(), seed=7)
        assert [e.to_json() for e in a.entries] == [e.to_json() for e in b.entries]

    def test_report_json_round_trip(self, tmp_path):
        t = informative_table(tmp_path)
        schema = infer_schema(t, "y")
        _, report = mar_scan(t, schema, MarConfig(), seed=0)
        again = MarReport.from_json(report.to_json())
        assert again == report


class TestConfig:
    def test_threshold_validated(self):
        with pytest.raises(MarError):
            MarConfig(auc_threshold=0.4)
        with pytest.raises(MarError):
            MarConfig(auc_threshold=1.0)


class TestPipelineIntegration:
    def test_fit_prep_picks_up_indicator(self, tmp_path):
        t = informative_table(tmp_path, n=400, seed=4)
        schema = infer_schema(t, "y")
        pipe = fit_prep(t, schema, PrepConfig(auto_mar=True), seed=0)
        assert pipe.mar_sources == ["x"]
        from autotab.prep import apply_prep
        out = apply_prep(pipe, t)
        assert "x_mar" in out.names or "x_mar" in {
            r.feature for r in pipe.rejections}

    def test_fit_prep_without_flag_skips_scan(self, tmp_path):
        t = informative_table(tmp_path, n=400, seed=4)
        schema = infer_schema(t, "y")
        pipe = fit_prep(t, schema, PrepConfig(auto_mar=False), seed=0)
        assert pipe.mar_sources == [] and pipe.mar_report is None
