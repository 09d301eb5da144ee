import numpy as np
import pytest

from autotab.prep import (PrepConfig, PrepError, PrepPipeline, Reject,
                          apply_impute, apply_onehot, apply_outliers,
                          apply_prep, clean, clean_name, clean_names,
                          dedupe_rows, engineer_dates, engineer_interactions,
                          fit_impute, fit_onehot, fit_outliers, fit_prep,
                          interaction_pairs, select_features, to_matrix)
from autotab.table import Kind, infer_schema, read_csv, split_train_test


def load(tmp_path, text, name="t.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return read_csv(p)


class TestClean:
    def test_clean_name(self):
        assert clean_name("Max Temp (C)") == "max_temp_c_"
        assert clean_name("already_ok") == "already_ok"

    def test_collisions_suffixed(self, tmp_path):
        t = load(tmp_path, "A b,a_b,x\n1,2,3\n")
        t2, mapping = clean_names(t)
        assert list(t2.names) == ["a_b", "a_b_2", "x"]
        assert mapping == {"A b": "a_b", "a_b": "a_b_2", "x": "x"}

    def test_dedupe_rows(self, tmp_path):
        t = load(tmp_path, "a,b\n1,x\n1,x\n2,x\n1,x\n")
        d = dedupe_rows(t)
        assert d.n_rows == 2
        assert list(d.column("a").values) == [1, 2]

    def test_dedupe_respects_missing(self, tmp_path):
        t = load(tmp_path, "a\n1\nNA\nNA\n")
        assert dedupe_rows(t).n_rows == 2

    def test_clean_combines(self, tmp_path):
        t = load(tmp_path, "A,B\n1,2\n1,2\n")
        t2, _ = clean(t)
        assert list(t2.names) == ["a", "b"] and t2.n_rows == 1


class TestImpute:
    def test_numeric_median(self, tmp_path):
        t = load(tmp_path, "x\n1\n2\nNA\n10\n")
        imap, rej = fit_impute(t, PrepConfig(), ["x"])
        assert imap["x"] == 2.0 and not rej
        out = apply_impute(t, imap)
        assert list(out.column("x").values) == [1, 2, 2, 10]
        assert not out.column("x").missing.any()

    def test_categorical_mode_tie_lexicographic(self, tmp_path):
        t = load(tmp_path, "c\nb\na\nb\na\nNA\n")
        imap, _ = fit_impute(t, PrepConfig(), ["c"])
        assert imap["c"] == "a"

    def test_mode_only_numeric(self, tmp_path):
        t = load(tmp_path, "x\n5\n5\n7\nNA\n")
        imap, _ = fit_impute(t, PrepConfig(missimpute="ModeOnly"), ["x"])
        assert imap["x"] == 5.0

    def test_all_missing_rejected(self, tmp_path):
        t = load(tmp_path, "x,y\nNA,1\nNA,2\n")
        imap, rej = fit_impute(t, PrepConfig(), ["x", "y"])
        assert "x" not in imap and "y" in imap
        assert rej[0].feature == "x" and rej[0].reason is Reject.ZERO_VARIANCE

    def test_apply_unseen_category_value(self, tmp_path):
        train = load(tmp_path, "c\nu\nu\nv\n", "tr.csv")
        imap, _ = fit_impute(train, PrepConfig(), ["c"])
        test = load(tmp_path, "c\nw\nNA\n", "te.csv")
        out = apply_impute(test, imap)
        col = out.column("c")
        assert col.levels[int(col.values[1])] == "u"


class TestOutliers:
    def test_tukey_fences_and_caps(self, tmp_path):
        t = load(tmp_path, "x\n1\n2\n3\n4\n1000\n")
        specs = fit_outliers(t, ["x"])
        s = specs["x"]
        # type-7 quantiles: q1=2, q3=4 -> fences (-1, 7); p95 = 800.8
        assert s.lo_fence == pytest.approx(-1.0)
        assert s.hi_fence == pytest.approx(7.0)
        assert s.cap_hi == pytest.approx(800.8)
        assert s.cap_lo == pytest.approx(1.2)
        assert s.has_outliers

    def test_apply_caps_and_flags(self, tmp_path):
        t = load(tmp_path, "x\n1\n2\n3\n4\n1000\n")
        specs = fit_outliers(t, ["x"])
        out = apply_outliers(t, specs)
        assert out.column("x").values[-1] == pytest.approx(800.8)
        assert list(out.column("x_out_flag").values) == [0, 0, 0, 0, 1]

    def test_no_flag_column_without_train_outliers(self, tmp_path):
        t = load(tmp_path, "x\n1\n2\n3\n4\n5\n")
        specs = fit_outliers(t, ["x"])
        out = apply_outliers(t, specs)
        assert not out.has_column("x_out_flag")

    def test_quantiles_1_to_100(self):
        # reference values for the 5th/95th percentile convention in use
        obs = np.arange(1.0, 101.0)
        p5, p95 = np.quantile(obs, [0.05, 0.95])
        assert p5 == pytest.approx(5.95)
        assert p95 == pytest.approx(95.05)


class TestEngineering:
    def test_date_expansion(self, tmp_path):
        t = load(tmp_path, "d\n2020-01-01\n")
        out = engineer_dates(t, ["d"])
        assert out.column("d_year").values[0] == 2020
        assert out.column("d_month").values[0] == 1
        assert out.column("d_day").values[0] == 1
        assert out.column("d_weekday").values[0] == 3  # ISO Wednesday
        assert out.column("d_epochdays").values[0] == 18262
        assert not out.has_column("d")

    def test_interaction_pairs_capped(self):
        names = [f"x{i}" for i in range(30)]
        pairs = interaction_pairs(names, 200)
        assert len(pairs) == 200
        assert pairs[0] == ("x0", "x1")

    def test_interactions_values(self, tmp_path):
        t = load(tmp_path, "a,b\n2,3\n4,5\n")
        out = engineer_interactions(t, [("a", "b")])
        assert list(out.column("a_x_b").values) == [6, 20]

    def test_onehot_train_levels_only(self, tmp_path):
        train = load(tmp_path, "c\nred\nblue\nred\n", "tr.csv")
        dmaps, rej = fit_onehot(train, PrepConfig(), ["c"])
        assert dmaps["c"] == ["blue", "red"] and not rej
        test = load(tmp_path, "c\ngreen\nred\n", "te.csv")
        out = apply_onehot(test, dmaps)
        assert list(out.column("c_blue").values) == [0, 0]
        assert list(out.column("c_red").values) == [0, 1]

    def test_onehot_high_cardinality_rejected(self, tmp_path):
        rows = "\n".join(f"v{i}" for i in range(16))
        train = load(tmp_path, "c\n" + rows + "\n")
        dmaps, rej = fit_onehot(train, PrepConfig(char_var_limit=15), ["c"])
        assert not dmaps
        assert rej[0].reason is Reject.HIGH_CARDINALITY

    def test_onehot_single_level_rejected(self, tmp_path):
        train = load(tmp_path, "c\nonly\nonly\n")
        dmaps, rej = fit_onehot(train, PrepConfig(), ["c"])
        assert not dmaps and rej[0].reason is Reject.ZERO_VARIANCE


class TestSelection:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.y = np.tile([0, 1], 100)
        self.signal = self.y + 0.2 * rng.standard_normal(200)
        self.noise = rng.standard_normal(200)

    def test_zero_variance(self):
        cands = [("const", np.ones(200)), ("sig", self.signal)]
        sel, rej = select_features(cands, self.y, PrepConfig())
        assert sel == ["sig"]
        assert rej[0] == rej[0].__class__("const", Reject.ZERO_VARIANCE)

    def test_duplicate_column_is_high_correlation(self):
        cands = [("sig", self.signal), ("sig_copy", self.signal.copy())]
        sel, rej = select_features(cands, self.y, PrepConfig())
        assert sel == ["sig"]
        assert rej[0].feature == "sig_copy"
        assert rej[0].reason is Reject.HIGH_CORRELATION
        assert rej[0].detail == "sig"

    def test_low_auc_filtered(self):
        flat = np.where(np.arange(200) % 2 == 0, 0.0, 1e-9) + self.y * 0  # pure noise vs y
        cands = [("sig", self.signal), ("coin", np.tile([0.0, 1.0, 1.0, 0.0], 50))]
        sel, rej = select_features(cands, self.y, PrepConfig(aucv=0.002))
        assert "sig" in sel
        assert any(r.reason is Reject.LOW_AUC and r.feature == "coin" for r in rej)

    def test_correlation_drops_later_column(self):
        a = self.signal
        b = a * 2.0 + 1.0  # r = 1 with a
        sel, rej = select_features([("a", a), ("b", b), ("n", self.noise + self.signal)],
                                   self.y, PrepConfig())
        assert "a" in sel and "b" not in sel
        hit = [r for r in rej if r.feature == "b"]
        assert hit[0].reason is Reject.HIGH_CORRELATION and hit[0].detail == "a"

    def test_everything_rejected_raises(self):
        with pytest.raises(PrepError, match="no features selected"):
            select_features([("const", np.zeros(200))], self.y, PrepConfig())


class TestPipeline:
    def fit_heart(self, heart_table):
        schema = infer_schema(heart_table, "target_var")
        train, test = split_train_test(heart_table, schema, 0.2, 1991)
        pipe = fit_prep(train, schema, PrepConfig(), seed=1991)
        return pipe, train, test

    def test_heart_selects_enough_features(self, heart_table):
        pipe, _, _ = self.fit_heart(heart_table)
        assert len(pipe.selected) >= 13

    def test_apply_is_deterministic(self, heart_table):
        pipe, train, test = self.fit_heart(heart_table)
        a = apply_prep(pipe, test)
        b = apply_prep(pipe, test)
        for ca, cb in zip(a.columns, b.columns):
            assert ca.name == cb.name
            assert np.array_equal(ca.values, cb.values)

    def test_apply_outputs_selected_plus_target(self, heart_table):
        pipe, train, test = self.fit_heart(heart_table)
        out = apply_prep(pipe, test)
        assert list(out.names) == pipe.selected + [pipe.target]
        assert out.n_rows == test.n_rows
        X = to_matrix(out, pipe.selected)
        assert X.shape == (test.n_rows, len(pipe.selected))
        assert np.isfinite(X).all()

    def test_no_leakage_from_test(self, tmp_path):
        # train median is 2; a fitted pipeline must impute 2 on test even
        # though the test column's own median is 100
        train = load(tmp_path, "y,x,z\n" + "".join(
            f"{i % 2},{v},{i}\n" for i, v in enumerate([1, 2, 2, 3, 1, 2, 3, 2])),
            "tr.csv")
        schema = infer_schema(train, "y")
        pipe = fit_prep(train, schema, PrepConfig())
        test = load(tmp_path, "y,x,z\n0,NA,1\n1,100,2\n0,100,3\n", "te.csv")
        out = apply_prep(pipe, test)
        assert pipe.impute_map["x"] == 2.0

    def test_json_round_trip(self, heart_table):
        pipe, train, test = self.fit_heart(heart_table)
        again = PrepPipeline.from_json(pipe.to_json())
        a = apply_prep(pipe, test)
        b = apply_prep(again, test)
        assert list(a.names) == list(b.names)
        for ca, cb in zip(a.columns, b.columns):
            assert np.array_equal(ca.values, cb.values)

    def test_json_version_check(self, heart_table):
        pipe, _, _ = self.fit_heart(heart_table)
        d = pipe.to_json()
        d["version"] = 99
        with pytest.raises(PrepError, match="version"):
            PrepPipeline.from_json(d)

    def test_ordinal_path_when_dummies_disabled(self, heart_table):
        schema = infer_schema(heart_table, "target_var")
        train, _ = split_train_test(heart_table, schema, 0.2, 1991)
        pipe = fit_prep(train, schema, PrepConfig(dummyvar=False), seed=1991)
        assert pipe.ordinal_maps and not pipe.dummy_maps
        out = apply_prep(pipe, train)
        assert all(out.column(n).kind in (Kind.NUMERIC, Kind.BOOLEAN)
                   for n in pipe.selected)

    def test_config_validation(self):
        with pytest.raises(PrepError):
            PrepConfig(missimpute="bogus")
        with pytest.raises(PrepError):
            PrepConfig(aucv=0.7)
        with pytest.raises(PrepError):
            PrepConfig(corr=0.0)
        with pytest.raises(PrepError):
            PrepConfig(char_var_limit=1)
