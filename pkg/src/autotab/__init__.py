"""Automated machine learning for tabular binary classification."""

from .table import (Column, Kind, Role, Schema, Table, TableError,  # noqa: F401
                    infer_schema, read_csv, split_train_test, target_labels)
from .prep import PrepConfig, PrepPipeline, apply_prep, fit_prep  # noqa: F401
from .mar import MarConfig, MarReport, mar_scan  # noqa: F401
from .metrics import auc, confusion_metrics, lift_table, roc_curve  # noqa: F401
from .tuning import TuneResult, default_spaces, random_search, select_best  # noqa: F401
from .explain import pdp, top_features  # noqa: F401
from .report import ReportBundle, describe, render_html  # noqa: F401

__version__ = "0.1.0"
