"""CSV ingestion and emission for matrix panels, targets and fitted models.

A panel file is long format with columns ``time, row_id, col_id, value``;
the target file has columns ``time, value``.  Floats are written with
``repr`` so that values survive a write/read cycle exactly.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from .core_types import MatrixSeries, ScalarSeries, ValidationError

TRANSFORM_RULES = ("none", "diff1", "diff2", "log", "log_diff1")
_LOST = {"none": 0, "diff1": 1, "diff2": 2, "log": 0, "log_diff1": 1}


class Rule(str, Enum):
    NONE = "none"
    DIFF1 = "diff1"
    DIFF2 = "diff2"
    LOG = "log"
    LOG_DIFF1 = "log_diff1"


def apply_rule(x, rule: str) -> np.ndarray:
    """Transform one series: differencing and/or logs.

    >>> apply_rule([1.0, 3.0, 6.0], "diff1")
    array([2., 3.])
    """
    rule = Rule(rule)
    x = np.asarray(x, dtype=float)
    if rule in (Rule.LOG, Rule.LOG_DIFF1):
        bad = np.flatnonzero(~(x > 0))
        if bad.size:
            raise ValidationError(f"log of nonpositive value {x[bad[0]]!r} at position {int(bad[0])}")
        x = np.log(x)
    if rule in (Rule.DIFF1, Rule.LOG_DIFF1):
        return np.diff(x)
    if rule is Rule.DIFF2:
        return np.diff(x, n=2)
    return x


@dataclass(frozen=True)
class TransformSpec:
    """Per-series transformation rules followed by optional centering.

    The rule for cell ``(row_id, col_id)`` is looked up in ``per_cell``, then
    ``per_col``, then falls back to ``default``.
    """

    default: str = "none"
    per_col: dict = field(default_factory=dict)
    per_cell: dict = field(default_factory=dict)
    target: str = "none"
    center: bool = False

    def __post_init__(self):
        for rule in [self.default, self.target, *self.per_col.values(), *self.per_cell.values()]:
            if rule not in TRANSFORM_RULES:
                raise ValidationError(f"unknown transform {rule!r}; choose from {', '.join(TRANSFORM_RULES)}")

    def rule_for(self, row_id: str, col_id: str) -> str:
        return self.per_cell.get((row_id, col_id), self.per_col.get(col_id, self.default))

    def to_string(self) -> str:
        parts = [f"default:{self.default}", f"target:{self.target}", f"center:{int(self.center)}"]
        parts += [f"col[{c}]:{r}" for c, r in self.per_col.items()]
        parts += [f"cell[{a}|{b}]:{r}" for (a, b), r in self.per_cell.items()]
        return ";".join(parts)


class Panel(NamedTuple):
    values: np.ndarray  # T x p x q
    times: tuple
    row_ids: tuple
    col_ids: tuple


def _rows(path: str):
    """Yield ``(line_number, fields)`` for non-comment rows after the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = None
        for fields in reader:
            line = reader.line_num
            if not fields or fields[0].startswith("#"):
                continue
            if header is None:
                header = [f.strip() for f in fields]
                yield line, header
                continue
            yield line, [f.strip() for f in fields]


def _time_key(t: str):
    try:
        return (0, float(t), t)
    except ValueError:
        return (1, 0.0, t)


def _parse_float(s: str, path: str, line: int) -> float:
    try:
        return float(s)
    except ValueError:
        raise ValidationError(f"{path}:{line}: cannot parse value {s!r}") from None


def read_panel(path: str) -> Panel:
    """Parse a long-format panel file into a ``T x p x q`` array.

    Row and column identifiers keep their order of first appearance; times
    are sorted (numerically when all of them parse as numbers).
    """
    it = _rows(path)
    try:
        _, header = next(it)
    except StopIteration:
        raise ValidationError(f"{path}: empty file") from None
    need = ["time", "row_id", "col_id", "value"]
    if [h.lower() for h in header[:4]] != need:
        raise ValidationError(f"{path}: expected header {','.join(need)}, got {','.join(header)}")
    cells = {}
    row_ids, col_ids, times = {}, {}, {}
    for line, f in it:
        if len(f) < 4:
            raise ValidationError(f"{path}:{line}: expected 4 fields, got {len(f)}")
        t, ri, ci, v = f[:4]
        key = (t, ri, ci)
        if key in cells:
            raise ValidationError(f"{path}:{line}: duplicate entry for time={t} row={ri} col={ci}")
        cells[key] = _parse_float(v, path, line)
        row_ids.setdefault(ri, None)
        col_ids.setdefault(ci, None)
        times.setdefault(t, None)
    if not cells:
        raise ValidationError(f"{path}: no data rows")
    tlist = sorted(times, key=_time_key)
    rl, cl = list(row_ids), list(col_ids)
    missing = [(t, a, b) for t in tlist for a in rl for b in cl if (t, a, b) not in cells]
    if missing:
        shown = ", ".join(f"({t},{a},{b})" for t, a, b in missing[:10])
        more = f" and {len(missing) - 10} more" if len(missing) > 10 else ""
        raise ValidationError(f"{path}: incomplete grid; missing {shown}{more}")
    vals = np.array([[[cells[(t, a, b)] for b in cl] for a in rl] for t in tlist])
    return Panel(vals, tuple(tlist), tuple(rl), tuple(cl))


def read_target(path: str) -> tuple:
    """Return ``(times, values)`` from a ``time,value`` file."""
    it = _rows(path)
    try:
        _, header = next(it)
    except StopIteration:
        raise ValidationError(f"{path}: empty file") from None
    if [h.lower() for h in header[:2]] != ["time", "value"]:
        raise ValidationError(f"{path}: expected header time,value, got {','.join(header)}")
    out = {}
    for line, f in it:
        if len(f) < 2:
            raise ValidationError(f"{path}:{line}: expected 2 fields, got {len(f)}")
        if f[0] in out:
            raise ValidationError(f"{path}:{line}: duplicate time {f[0]}")
        out[f[0]] = _parse_float(f[1], path, line)
    times = sorted(out, key=_time_key)
    return tuple(times), np.array([out[t] for t in times])


class Ingested(NamedTuple):
    series: MatrixSeries
    target: ScalarSeries
    times: tuple
    row_ids: tuple
    col_ids: tuple
    panel_mean: np.ndarray | None
    target_mean: float | None


def transform_panel(panel: Panel, y: np.ndarray, spec: TransformSpec, means=None) -> Ingested:
    """Apply the per-series rules, align lengths and center.

    Differencing shortens series at the front; every series (and the target)
    is truncated to the common length.  ``means`` (a pair of panel mean and
    target mean) replaces the sample means, so new data can be centered with
    the training statistics.
    """
    X = panel.values
    T, p, q = X.shape
    lost = max([_LOST[spec.target]] + [_LOST[spec.rule_for(a, b)] for a in panel.row_ids for b in panel.col_ids])
    n = T - lost
    if n < 1:
        raise ValidationError(f"no observations left after transforms (T={T}, lost {lost})")
    out = np.empty((n, p, q))
    for i, a in enumerate(panel.row_ids):
        for j, b in enumerate(panel.col_ids):
            try:
                s = apply_rule(X[:, i, j], spec.rule_for(a, b))
            except ValidationError as exc:
                raise ValidationError(f"series ({a},{b}): {exc}") from None
            out[:, i, j] = s[s.size - n:]
    yt = apply_rule(y, spec.target)
    yt = yt[yt.size - n:]
    pm = tm = None
    if spec.center:
        if means is None:
            pm, tm = out.mean(axis=0), float(yt.mean())
        else:
            pm, tm = means
        out = out - pm
        yt = yt - tm
    times = panel.times[T - n:]
    return Ingested(MatrixSeries(out), ScalarSeries(yt), times, panel.row_ids, panel.col_ids, pm, tm)


def ingest(panel_path: str, target_path: str, spec: TransformSpec | None = None, means=None) -> Ingested:
    spec = spec or TransformSpec()
    panel = read_panel(panel_path)
    t_times, y = read_target(target_path)
    lookup = dict(zip(t_times, y))
    missing = [t for t in panel.times if t not in lookup]
    if missing:
        raise ValidationError(f"{target_path}: target missing for times {', '.join(missing[:10])}")
    yv = np.array([lookup[t] for t in panel.times])
    return transform_panel(panel, yv, spec, means)


# --- writers -------------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def config_line(config: dict) -> str:
    return "# config: " + " ".join(f"{k}={fmt(v)}" for k, v in config.items())


def write_csv(path: str, header: Iterable[str], rows: Iterable, config: dict | None = None) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write(config_line(config) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: str) -> tuple:
    """Return ``(header, rows)`` skipping ``#`` comment lines."""
    it = _rows(path)
    _, header = next(it)
    return header, [f for _, f in it]


def read_config_line(path: str) -> dict:
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("# config:"):
        return {}
    out = {}
    for tok in first[len("# config:"):].split():
        k, _, v = tok.partition("=")
        out[k] = v
    return out


def write_panel(path: str, X, times=None, row_ids=None, col_ids=None, config: dict | None = None) -> None:
    X = np.asarray(X, dtype=float)
    T, p, q = X.shape
    times = times if times is not None else range(T)
    row_ids = row_ids if row_ids is not None else [f"r{i}" for i in range(p)]
    col_ids = col_ids if col_ids is not None else [f"c{j}" for j in range(q)]
    rows = (
        (t, a, b, X[s, i, j])
        for s, t in enumerate(times) for i, a in enumerate(row_ids) for j, b in enumerate(col_ids)
    )
    write_csv(path, ["time", "row_id", "col_id", "value"], rows, config)


def write_target(path: str, y, times=None, config: dict | None = None) -> None:
    y = np.asarray(y, dtype=float)
    times = times if times is not None else range(y.size)
    write_csv(path, ["time", "value"], zip(times, y), config)


def write_matrix(path: str, M, config: dict | None = None) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    write_csv(path, [f"c{j}" for j in range(M.shape[1])], M.tolist(), config)


def read_matrix(path: str) -> np.ndarray:
    _, rows = read_csv(path)
    return np.array([[float(v) for v in r] for r in rows])


# --- key=value config files ----------------------------------------------------------


def read_kv(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{n}: expected key=value, got {raw.strip()!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out
