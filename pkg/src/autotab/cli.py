"""Command-line orchestrator: load -> prepare -> tune -> explain -> report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
failure (every model failed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import explain, metrics, prep, report, tuning
from .learners import MODEL_IDS
from .mar import MarConfig
from .prep import PrepConfig, PrepError, clean_name
from .table import DEFAULT_MISSING_TOKENS, TableError, infer_schema, read_csv, \
    split_train_test, target_labels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    input: str = ""
    target: str = ""
    uid: str | None = None
    drop: list = field(default_factory=list)
    onlykeep: list = field(default_factory=list)
    test_split: float = 0.2
    tune_iters: int = 10
    tune_type: str = "random"
    models: list = field(default_factory=lambda: list(MODEL_IDS))
    var_imp: int = 10
    lift_group: int = 50
    max_obs: int = 4000
    seed: int = 1991
    missimpute: str = "MeanMedian"
    auto_mar: bool = False
    mar_auc_threshold: float = 0.8
    dummyvar: bool = True
    char_var_limit: int = 15
    aucv: float = 0.002
    corr: float = 0.98
    outlier_flag: bool = True
    missing_tokens: list = field(
        default_factory=lambda: sorted(DEFAULT_MISSING_TOKENS))
    outdir: str = "autotab_out"
    html_report: bool = True
    workers: int = 1

    def validate(self) -> None:
        if not self.input:
            raise ConfigError("--input is required")
        if not self.target:
            raise ConfigError("--target is required")
        if not 0 < self.test_split < 1:
            raise ConfigError("test-split must be in (0,1)")
        if self.tune_type != "random":
            raise ConfigError(
                "tune-type supports only 'random' (iterated-racing tuning is "
                "not implemented)")
        if self.tune_iters < 1:
            raise ConfigError("tune-iters must be >= 1")
        if not 0 < self.aucv < 0.5:
            raise ConfigError("aucv must be in (0, 0.5)")
        if not 0 < self.corr <= 1:
            raise ConfigError("corr must be in (0,1]")
        if self.lift_group < 1:
            raise ConfigError("lift-group must be >= 1")
        if self.max_obs < 10:
            raise ConfigError("max-obs must be >= 10")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        bad = [m for m in self.models if m not in MODEL_IDS]
        if bad:
            raise ConfigError(f"unknown models: {', '.join(bad)} "
                              f"(choose from {', '.join(MODEL_IDS)})")
        if not self.models:
            raise ConfigError("at least one model required")

    def echo(self) -> dict:
        d = asdict(self)
        d["drop"] = ",".join(self.drop)
        d["onlykeep"] = ",".join(self.onlykeep)
        d["models"] = ",".join(self.models)
        d["missing_tokens"] = ",".join(repr(t) for t in self.missing_tokens)
        return d


_INT_KEYS = {"tune_iters", "var_imp", "lift_group", "max_obs", "seed",
             "char_var_limit", "workers"}
_FLOAT_KEYS = {"test_split", "aucv", "corr", "mar_auc_threshold"}
_BOOL_KEYS = {"auto_mar", "dummyvar", "outlier_flag", "html_report"}
_LIST_KEYS = {"drop", "onlykeep", "models", "missing_tokens"}


def _coerce(key: str, raw: str):
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if key in _LIST_KEYS:
        return [s for s in raw.split(",") if s]
    return raw


def load_config_file(path: str) -> dict:
    """Plain-text key=value config; '#' starts a comment."""
    out = {}
    valid = set(RunConfig.__dataclass_fields__)
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in valid:
            raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = _coerce(key, raw)
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="autotab",
        description="Automated binary-classification pipeline: data prep, "
                    "model tuning, evaluation, and HTML reporting.")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--input", help="input CSV path")
    p.add_argument("--target", help="target column name")
    p.add_argument("--uid", help="unique-id column to drop")
    p.add_argument("--drop", help="comma-separated columns to drop")
    p.add_argument("--onlykeep", help="comma-separated columns to keep")
    p.add_argument("--test-split", type=float, dest="test_split")
    p.add_argument("--tune-iters", type=int, dest="tune_iters")
    p.add_argument("--tune-type", dest="tune_type")
    p.add_argument("--models", help=f"comma-separated subset of {','.join(MODEL_IDS)}")
    p.add_argument("--var-imp", type=int, dest="var_imp")
    p.add_argument("--lift-group", type=int, dest="lift_group")
    p.add_argument("--max-obs", type=int, dest="max_obs")
    p.add_argument("--seed", type=int)
    p.add_argument("--missimpute", choices=["MeanMedian", "ModeOnly"])
    p.add_argument("--auto-mar", action=argparse.BooleanOptionalAction,
                   dest="auto_mar")
    p.add_argument("--mar-auc-threshold", type=float, dest="mar_auc_threshold")
    p.add_argument("--dummyvar", action=argparse.BooleanOptionalAction)
    p.add_argument("--char-var-limit", type=int, dest="char_var_limit")
    p.add_argument("--aucv", type=float)
    p.add_argument("--corr", type=float)
    p.add_argument("--outlier-flag", action=argparse.BooleanOptionalAction,
                   dest="outlier_flag")
    p.add_argument("--missing-tokens", dest="missing_tokens",
                   help="comma-separated missing-value tokens")
    p.add_argument("--outdir")
    p.add_argument("--html-report", action=argparse.BooleanOptionalAction,
                   dest="html_report")
    p.add_argument("--workers", type=int,
                   default=None, help="parallel model fits (env AUTOTAB_WORKERS)")
    return p


def validate_config(argv: list[str]) -> RunConfig:
    """Merge config file under CLI-flag overrides into a checked RunConfig."""
    args = build_parser().parse_args(argv)
    settings: dict = {}
    if args.config:
        settings.update(load_config_file(args.config))
    for key in RunConfig.__dataclass_fields__:
        v = getattr(args, key, None)
        if v is None:
            continue
        settings[key] = _coerce(key, v) if isinstance(v, str) else v
    if "workers" not in settings and os.environ.get("AUTOTAB_WORKERS"):
        settings["workers"] = int(os.environ["AUTOTAB_WORKERS"])
    cfg = RunConfig(**settings)
    cfg.validate()
    return cfg


def _json_dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run(cfg: RunConfig) -> int:
    t_start = time.perf_counter()
    timings: dict = {}
    try:
        table = read_csv(cfg.input, missing_tokens=set(cfg.missing_tokens),
                         name=Path(cfg.input).stem)
    except (OSError, TableError) as e:
        print(f"autotab: data: {e}", file=sys.stderr)
        return EXIT_DATA

    try:
        cleaned, mapping = prep.clean(table)
        rename = {clean_name(old): new for old, new in mapping.items()}
        def mapped(name):
            key = clean_name(name)
            if key not in rename:
                raise TableError(f"column not found: {name}")
            return rename[key]
        schema = infer_schema(
            cleaned, mapped(cfg.target),
            uid=mapped(cfg.uid) if cfg.uid else None,
            drop={mapped(d) for d in cfg.drop},
            onlykeep={mapped(k) for k in cfg.onlykeep} if cfg.onlykeep else None)
        train, test = split_train_test(cleaned, schema, cfg.test_split, cfg.seed)
    except TableError as e:
        print(f"autotab: data: {e}", file=sys.stderr)
        return EXIT_DATA
    timings["load_split"] = time.perf_counter() - t_start

    t0 = time.perf_counter()
    prep_cfg = PrepConfig(missimpute=cfg.missimpute, auto_mar=cfg.auto_mar,
                          dummyvar=cfg.dummyvar,
                          char_var_limit=cfg.char_var_limit, aucv=cfg.aucv,
                          corr=cfg.corr, outlier_flag=cfg.outlier_flag)
    try:
        pipe = prep.fit_prep(train, schema, prep_cfg,
                             mar_config=MarConfig(auc_threshold=cfg.mar_auc_threshold),
                             seed=cfg.seed)
        train_p = prep.apply_prep(pipe, train)
        test_p = prep.apply_prep(pipe, test)
    except PrepError as e:
        print(f"autotab: prep: {e} (check target/feature columns and prep "
              f"thresholds)", file=sys.stderr)
        return EXIT_DATA
    timings["prep"] = time.perf_counter() - t0

    X_train = prep.to_matrix(train_p, pipe.selected)
    X_test = prep.to_matrix(test_p, pipe.selected)
    y_train = train_p.column(pipe.target).values.astype(np.float64)
    y_test = test_p.column(pipe.target).values.astype(np.float64)

    t0 = time.perf_counter()
    spaces = tuning.default_spaces(len(pipe.selected))

    def _tune(mid):
        return tuning.random_search(X_train, y_train, X_test, y_test, mid,
                                    spaces[mid], tune_iters=cfg.tune_iters,
                                    folds=5, max_obs=cfg.max_obs, seed=cfg.seed,
                                    feature_names=pipe.selected)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_tune, cfg.models))
    else:
        results = [_tune(mid) for mid in cfg.models]
    timings["tuning"] = time.perf_counter() - t0

    try:
        best_id = tuning.select_best(results)
    except tuning.TuningError as e:
        print(f"autotab: training: {e}", file=sys.stderr)
        return EXIT_TRAINING
    by_id = {r.model_id: r for r in results}
    best = by_id[best_id]

    t0 = time.perf_counter()
    roc_curves = {}
    for r in results:
        if r.failed:
            continue
        roc_curves[r.model_id] = metrics.roc_curve(r.model.score(X_test), y_test)
    lift = metrics.lift_table(best.model.score(X_test), y_test, cfg.lift_group)
    pdp_feats = explain.top_features(best.model, 5)
    pdp_curves = [explain.pdp(best.model, X_train, f) for f in pdp_feats]
    importance = best.model.importance()
    timings["explain"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = [r.record() for r in results]
    _json_dump({"version": 1, "dataset": table.name, "seed": cfg.seed,
                "best_model": best_id, "records": records},
               outdir / "metrics.json")
    _json_dump(pipe.to_json(), outdir / "pipeline.json")
    _json_dump({"version": 1,
                "models": {r.model_id: r.model.to_json()
                           for r in results if not r.failed}},
               outdir / "models.json")

    if cfg.html_report:
        bundle = report.ReportBundle(
            title=f"Model report: {table.name}",
            config_echo=cfg.echo(),
            summary=report.describe(cleaned),
            rejections=pipe.rejections,
            selected=pipe.selected,
            mar_report=pipe.mar_report,
            records=records,
            roc_curves=roc_curves,
            lift=lift, lift_model=best_id,
            pdp_curves=pdp_curves,
            importance=importance,
            best_model=best_id,
            timings=timings)
        report.render_html(bundle, outdir / "report.html")
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = validate_config(argv)
    except ConfigError as e:
        print(f"autotab: config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:  # argparse usage error
        return EXIT_CONFIG if e.code not in (0, None) else 0
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
