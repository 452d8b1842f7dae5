"""Age-versus-write-quorum sweeps and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .analytics import approx_average_age, exact_average_age
from .model import QuorumConfig, ShiftedExponential
from .simulator import DEFAULT_WARMUP, replicate

log = logging.getLogger(__name__)

COLUMNS = (
    "n", "w", "r", "lambda", "c",
    "exact_age", "approx_age", "sim_age", "sim_std_error",
    "is_optimum_exact", "is_optimum_approx",
)
_INT_COLS = {"n", "w", "r"}
_BOOL_COLS = {"is_optimum_exact", "is_optimum_approx"}
_OPTIONAL_COLS = {"approx_age", "sim_age", "sim_std_error"}


@dataclass(frozen=True)
class SimOptions:
    intervals: int = 100_000
    warmup: int = DEFAULT_WARMUP
    replications: int = 4
    seed: int = 42


@dataclass(frozen=True)
class SweepRow:
    n: int
    w: int
    r: int
    rate: float
    shift: float
    exact_age: float
    approx_age: float | None = None
    sim_age: float | None = None
    sim_std_error: float | None = None
    is_optimum_exact: bool = False
    is_optimum_approx: bool = False

    def as_record(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("rate")
        d["c"] = d.pop("shift")
        return {k: d[k] for k in COLUMNS}

    @classmethod
    def from_record(cls, rec: dict) -> "SweepRow":
        kw = dict(rec)
        kw["rate"] = kw.pop("lambda")
        kw["shift"] = kw.pop("c")
        return cls(**kw)


def default_w_grid(n: int) -> list[int]:
    if n <= 200:
        return list(range(1, n + 1))
    return sorted({int(v) for v in np.linspace(1, n, 200).round()})


def _argmin(values: Sequence[float | None]) -> int | None:
    best, best_i = math.inf, None
    for i, v in enumerate(values):
        # strict < keeps the smaller w on ties
        if v is not None and v < best:
            best, best_i = v, i
    return best_i


def is_unimodal(values: Sequence[float]) -> bool:
    """True when first differences change sign at most once, from down to up."""
    diffs = np.sign(np.diff(values))
    diffs = diffs[diffs != 0]
    return bool(np.sum(diffs[1:] != diffs[:-1]) <= 1 and (len(diffs) == 0 or diffs[-1] >= diffs[0]))


def sweep_write_quorum(
    n: int,
    r: int,
    d: ShiftedExponential,
    w_values: Iterable[int] | None = None,
    sim: SimOptions | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    ws = sorted(set(default_w_grid(n) if w_values is None else w_values))
    if not ws:
        raise ValueError("empty w grid")
    cfgs = [QuorumConfig(n, w, r) for w in ws]

    exact = [exact_average_age(cfg, d).total_age for cfg in cfgs]
    approx = [approx_average_age(cfg, d) if cfg.w < n else None for cfg in cfgs]

    sims = [None] * len(cfgs)
    if sim is not None:
        def one(cfg):
            return replicate(cfg, d, sim.intervals, sim.replications, sim.seed, sim.warmup)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                sims = list(ex.map(one, cfgs))
        else:
            sims = [one(cfg) for cfg in cfgs]

    i_exact, i_approx = _argmin(exact), _argmin(approx)
    if not is_unimodal(exact):
        log.warning("exact age curve is not unimodal for n=%d r=%d lambda=%g c=%g", n, r, d.rate, d.shift)

    rows = []
    for i, cfg in enumerate(cfgs):
        s = sims[i]
        rows.append(SweepRow(
            n=n, w=cfg.w, r=r, rate=d.rate, shift=d.shift,
            exact_age=exact[i],
            approx_age=approx[i],
            sim_age=None if s is None else s.mean_age,
            sim_std_error=None if s is None or math.isnan(s.std_error) else s.std_error,
            is_optimum_exact=i == i_exact,
            is_optimum_approx=i == i_approx,
        ))
    return rows


def sweep_grid(
    n: int,
    rs: Sequence[int],
    rates: Sequence[float],
    shift: float,
    w_values: Iterable[int] | None = None,
    sim: SimOptions | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Sweeps for every (r, rate), ordered by (r, rate, w)."""
    w_values = None if w_values is None else list(w_values)
    rows = []
    for r in sorted(rs):
        for rate in sorted(rates):
            rows += sweep_write_quorum(n, r, ShiftedExponential(rate, shift), w_values, sim, workers)
    return rows


# --- serialization ---------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(col: str, s: str):
    if col in _INT_COLS:
        return int(s)
    if col in _BOOL_COLS:
        return s == "true"
    if s == "" and col in _OPTIONAL_COLS:
        return None
    return float(s)


def render_table(rows: Sequence[SweepRow], fmt: str = "json") -> str:
    if not rows:
        raise ValueError("no rows to emit")
    fmt = fmt.lower()
    records = [r.as_record() for r in rows]
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(COLUMNS)
        for rec in records:
            wr.writerow([_fmt(rec[c]) for c in COLUMNS])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r} (expected csv or json)")


def parse_table(text: str, fmt: str = "json") -> list[SweepRow]:
    fmt = fmt.lower()
    if fmt == "json":
        return [SweepRow.from_record(rec) for rec in json.loads(text)]
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [SweepRow.from_record({c: _parse(c, rec[c]) for c in COLUMNS}) for rec in reader]
    raise ValueError(f"unknown format {fmt!r} (expected csv or json)")


def write_atomic(text: str, destination: str | os.PathLike) -> None:
    """Write via a temp file in the same directory, then rename over ``destination``."""
    dest = os.fspath(destination)
    folder = os.path.dirname(os.path.abspath(dest))
    try:
        fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(dest))
    except OSError as e:
        raise OSError(f"cannot write {dest}: {e.strerror or e}") from e
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, dest)
    except OSError as e:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write {dest}: {e.strerror or e}") from e


def emit_table(rows: Sequence[SweepRow], fmt: str = "json", destination=None) -> None:
    """Write rows as CSV or JSON to ``destination`` (a path) or stdout when None."""
    text = render_table(rows, fmt)
    if destination is None or destination == "-":
        sys.stdout.write(text)
    else:
        write_atomic(text, destination)

