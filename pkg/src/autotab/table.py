"""Typed in-memory tabular data model.

Columns are immutable numpy arrays plus a per-cell missing mask. All
mutation happens by constructing new Table objects, so tables are safe to
share across threads.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import date

import numpy as np

EPOCH_ORDINAL = date(1970, 1, 1).toordinal()
DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "NaN", "null", "N/A"})

_BOOL_TOKENS = {"true", "false", "t", "f", "0", "1"}
_BOOL_TRUE = {"true", "t", "1"}


class TableError(Exception):
    """Raised for malformed input files or schema violations."""


class Kind(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    DATE = "date"
    BOOLEAN = "boolean"


class Role(enum.Enum):
    FEATURE = "feature"
    TARGET = "target"
    UID = "uid"
    DROPPED = "dropped"


@dataclass(frozen=True)
class Column:
    """One typed column.

    values dtype by kind: NUMERIC float64, CATEGORICAL int32 level index
    into `levels`, DATE int64 days since 1970-01-01, BOOLEAN int8 0/1.
    Cells where missing is True hold a placeholder and must be ignored.
    """

    name: str
    kind: Kind
    values: np.ndarray
    missing: np.ndarray
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if len(self.values) != len(self.missing):
            raise TableError(f"column {self.name}: values/mask length mismatch")
        self.values.setflags(write=False)
        self.missing.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.values)

    def take(self, idx: np.ndarray) -> "Column":
        return Column(self.name, self.kind, self.values[idx].copy(),
                      self.missing[idx].copy(), self.levels)

    def rename(self, name: str) -> "Column":
        return Column(name, self.kind, self.values, self.missing, self.levels)

    def non_missing(self) -> np.ndarray:
        return self.values[~self.missing]

    def cell_str(self, i: int) -> str:
        """Render cell i for CSV output (missing -> empty string)."""
        if self.missing[i]:
            return ""
        if self.kind is Kind.NUMERIC:
            v = float(self.values[i])
            return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
        if self.kind is Kind.CATEGORICAL:
            return self.levels[int(self.values[i])]
        if self.kind is Kind.DATE:
            return date.fromordinal(int(self.values[i]) + EPOCH_ORDINAL).isoformat()
        return "true" if self.values[i] else "false"


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {c.name: i for i, c in enumerate(self.columns)})
        if len(self._index) != len(self.columns):
            raise TableError("duplicate column names")
        if self.columns:
            n = self.columns[0].n_rows
            for c in self.columns:
                if c.n_rows != n:
                    raise TableError(f"column {c.name} has {c.n_rows} rows, expected {n}")

    @property
    def n_rows(self) -> int:
        return self.columns[0].n_rows if self.columns else 0

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def has_column(self, name: str) -> bool:
        return name in self._index

    def column(self, name: str) -> Column:
        try:
            return self.columns[self._index[name]]
        except KeyError:
            raise TableError(f"no such column: {name}") from None

    def take(self, idx: np.ndarray) -> "Table":
        return Table(self.name, tuple(c.take(idx) for c in self.columns))

    def select(self, names: list[str]) -> "Table":
        return Table(self.name, tuple(self.column(n) for n in names))

    def with_columns(self, extra: list[Column]) -> "Table":
        return Table(self.name, self.columns + tuple(extra))

    def replace_column(self, col: Column) -> "Table":
        cols = list(self.columns)
        cols[self._index[col.name]] = col
        return Table(self.name, tuple(cols))

    def drop_columns(self, names: set[str]) -> "Table":
        return Table(self.name, tuple(c for c in self.columns if c.name not in names))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            for i in range(self.n_rows):
                w.writerow([c.cell_str(i) for c in self.columns])


@dataclass(frozen=True)
class Schema:
    target: str
    roles: dict
    target_positive_label: str

    def feature_names(self, t: Table) -> list[str]:
        return [n for n in t.names if self.roles.get(n) is Role.FEATURE]


def _parse_numeric(cells: list[str], miss: np.ndarray):
    vals = np.zeros(len(cells))
    for i, s in enumerate(cells):
        if miss[i]:
            continue
        try:
            vals[i] = float(s)
        except ValueError:
            return None
    miss = miss.copy()
    bad = ~np.isfinite(vals)
    vals[bad] = 0.0
    miss |= bad
    return vals, miss


def _parse_date_fmt(cells: list[str], miss: np.ndarray, fmt: str):
    vals = np.zeros(len(cells), dtype=np.int64)
    for i, s in enumerate(cells):
        if miss[i]:
            continue
        try:
            if fmt == "iso":
                d = date.fromisoformat(s)
            else:
                day, month, year = s.split("-")
                d = date(int(year), int(month), int(day))
                if len(day) != 2 or len(year) != 4:
                    return None
        except (ValueError, TypeError):
            return None
        vals[i] = d.toordinal() - EPOCH_ORDINAL
    return vals


def _parse_boolean(cells: list[str], miss: np.ndarray):
    vals = np.zeros(len(cells), dtype=np.int8)
    for i, s in enumerate(cells):
        if miss[i]:
            continue
        low = s.lower()
        if low not in _BOOL_TOKENS:
            return None
        vals[i] = 1 if low in _BOOL_TRUE else 0
    return vals


def _infer_column(name: str, cells: list[str], missing_tokens) -> Column:
    miss = np.array([s in missing_tokens for s in cells], dtype=bool)
    num = _parse_numeric(cells, miss)
    if num is not None:
        return Column(name, Kind.NUMERIC, num[0], num[1])
    for fmt in ("iso", "dmy"):
        d = _parse_date_fmt(cells, miss, fmt)
        if d is not None:
            return Column(name, Kind.DATE, d, miss)
    b = _parse_boolean(cells, miss)
    if b is not None:
        return Column(name, Kind.BOOLEAN, b, miss)
    levels = sorted({s for i, s in enumerate(cells) if not miss[i]})
    lut = {s: i for i, s in enumerate(levels)}
    vals = np.array([lut.get(s, 0) if not miss[i] else 0 for i, s in enumerate(cells)],
                    dtype=np.int32)
    return Column(name, Kind.CATEGORICAL, vals, miss, tuple(levels))


def read_csv(path, missing_tokens=DEFAULT_MISSING_TOKENS, name: str | None = None) -> Table:
    """Load an RFC-4180 CSV with a header row, inferring column types.

    Type inference order per column: numeric, date (ISO-8601 or
    DD-MM-YYYY), boolean, else categorical. Cells matching a missing
    token, and non-finite numerics, are masked as missing.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError(f"{path}: empty file, header row required") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise TableError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    cols = []
    for j, cname in enumerate(header):
        cells = [r[j] for r in rows]
        cols.append(_infer_column(cname, cells, missing_tokens))
    return Table(name or str(path), tuple(cols))


def _observed_levels(col: Column) -> list[str]:
    obs = col.values[~col.missing]
    if col.kind is Kind.CATEGORICAL:
        return sorted({col.levels[int(v)] for v in obs})
    if col.kind is Kind.NUMERIC:
        uniq = sorted(set(float(v) for v in obs))
        return [repr(int(v)) if float(v).is_integer() else repr(v) for v in uniq]
    if col.kind is Kind.BOOLEAN:
        return sorted({"1" if v else "0" for v in obs})
    raise TableError(f"column {col.name}: unsupported target kind {col.kind}")


def infer_schema(t: Table, target: str, uid: str | None = None,
                 drop: set[str] | None = None,
                 onlykeep: set[str] | None = None) -> Schema:
    """Assign per-column roles and pick the positive target label.

    Positive label is 1 when the two levels are {0,1}, otherwise the
    lexicographically greater level.
    """
    if not t.has_column(target):
        raise TableError(f"target column not found: {target}")
    drop = drop or set()
    for n in drop | ({uid} if uid else set()) | (onlykeep or set()):
        if not t.has_column(n):
            raise TableError(f"column not found: {n}")
    tcol = t.column(target)
    if tcol.missing.any():
        raise TableError(f"target {target} has missing values")
    levels = _observed_levels(tcol)
    if len(levels) != 2:
        raise TableError(f"target not binary: {target} has {len(levels)} levels")
    positive = "1" if set(levels) == {"0", "1"} else max(levels)
    roles = {}
    for c in t.columns:
        if c.name == target:
            roles[c.name] = Role.TARGET
        elif c.name == uid:
            roles[c.name] = Role.UID
        elif c.name in drop:
            roles[c.name] = Role.DROPPED
        elif onlykeep is not None and c.name not in onlykeep:
            roles[c.name] = Role.DROPPED
        else:
            roles[c.name] = Role.FEATURE
    return Schema(target=target, roles=roles, target_positive_label=positive)


def target_labels(t: Table, schema: Schema) -> np.ndarray:
    """0/1 labels for the schema's target column (1 = positive label)."""
    col = t.column(schema.target)
    if col.kind is Kind.CATEGORICAL:
        strs = [col.levels[int(v)] for v in col.values]
    elif col.kind is Kind.NUMERIC:
        strs = [repr(int(v)) if float(v).is_integer() else repr(float(v)) for v in col.values]
    else:
        strs = ["1" if v else "0" for v in col.values]
    return np.array([1 if s == schema.target_positive_label else 0 for s in strs],
                    dtype=np.int8)


def split_train_test(t: Table, schema: Schema, test_fraction: float, seed: int):
    """Deterministic stratified split; test size = floor(n * test_fraction).

    Per-class test counts start at floor(n_class * test_fraction); the
    remainder up to the total is given to classes with the largest
    fractional part (ties by class order).
    """
    if not 0 < test_fraction < 1:
        raise TableError("test_fraction must be in (0,1)")
    y = target_labels(t, schema)
    n = t.n_rows
    n_test = int(np.floor(n * test_fraction))
    rng = np.random.default_rng(seed)
    class_idx = [np.flatnonzero(y == c) for c in (0, 1)]
    for c, idx in zip((0, 1), class_idx):
        if len(idx) < 2:
            raise TableError(f"class {c} has fewer than 2 rows")
    counts = [int(np.floor(len(idx) * test_fraction)) for idx in class_idx]
    fracs = [len(idx) * test_fraction - cnt for idx, cnt in zip(class_idx, counts)]
    order = sorted(range(2), key=lambda c: (-fracs[c], c))
    k = 0
    while sum(counts) < n_test:
        c = order[k % 2]
        if counts[c] < len(class_idx[c]):
            counts[c] += 1
        k += 1
    test_rows = []
    for idx, cnt in zip(class_idx, counts):
        perm = rng.permutation(len(idx))
        test_rows.append(idx[perm[:cnt]])
    test_mask = np.zeros(n, dtype=bool)
    test_mask[np.concatenate(test_rows)] = True
    return t.take(np.flatnonzero(~test_mask)), t.take(np.flatnonzero(test_mask))
