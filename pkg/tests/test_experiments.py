import csv
import io
import json
import os

import pytest

from quorum_age.experiments import (
    COLUMNS,
    SimOptions,
    SweepRow,
    default_w_grid,
    emit_table,
    is_unimodal,
    parse_table,
    render_table,
    sweep_grid,
    sweep_write_quorum,
)
from quorum_age.model import ShiftedExponential


def argmin_w(rows):
    (row,) = [r for r in rows if r.is_optimum_exact]
    return row.w


def test_sweep_optimum_r1():
    rows = sweep_write_quorum(100, 1, ShiftedExponential(0.5, 1))
    assert [r.w for r in rows] == list(range(1, 101))
    assert 58 <= argmin_w(rows) <= 63
    assert sum(r.is_optimum_approx for r in rows) == 1


def test_sweep_optimum_shrinks_with_r():
    d = ShiftedExponential(0.5, 1)
    assert argmin_w(sweep_write_quorum(100, 20, d)) < argmin_w(sweep_write_quorum(100, 5, d))


def test_sweep_optimum_grows_with_rate():
    w_slow = argmin_w(sweep_write_quorum(100, 1, ShiftedExponential(0.5, 1)))
    w_fast = argmin_w(sweep_write_quorum(100, 1, ShiftedExponential(2, 1)))
    assert w_fast > w_slow


def test_approx_absent_only_at_full_quorum():
    rows = sweep_write_quorum(10, 2, ShiftedExponential(1, 1))
    for r in rows:
        assert (r.approx_age is None) == (r.w == 10)


def test_tie_breaks_to_smaller_w():
    # r = n makes every w give the same age
    rows = sweep_write_quorum(4, 4, ShiftedExponential(1, 1), w_values=[1])
    assert rows[0].is_optimum_exact
    d = ShiftedExponential(1, 0)
    rows = sweep_write_quorum(1, 1, d)
    assert rows[0].is_optimum_exact and not rows[0].is_optimum_approx


def test_default_grid():
    assert default_w_grid(5) == [1, 2, 3, 4, 5]
    g = default_w_grid(1000)
    assert g[0] == 1 and g[-1] == 1000 and 190 <= len(g) <= 200


def test_unimodal_helper():
    assert is_unimodal([3, 2, 1, 2, 3])
    assert is_unimodal([1, 2, 3])
    assert is_unimodal([3, 2, 1])
    assert not is_unimodal([1, 3, 2, 4])
    assert not is_unimodal([1, 2, 1])


def test_default_grid_curves_are_unimodal():
    for r in (1, 5, 20):
        for lam in (0.5, 1, 2):
            rows = sweep_write_quorum(100, r, ShiftedExponential(lam, 1))
            assert is_unimodal([row.exact_age for row in rows])


def test_sweep_grid_ordering():
    rows = sweep_grid(8, [5, 1], [2.0, 0.5], 1.0, w_values=[3, 1, 2])
    keys = [(r.r, r.rate, r.w) for r in rows]
    assert keys == sorted(keys)
    assert len(rows) == 12
    assert sum(r.is_optimum_exact for r in rows) == 4


def test_sweep_with_simulation():
    sim = SimOptions(intervals=20_000, warmup=500, replications=3, seed=1)
    rows = sweep_write_quorum(10, 2, ShiftedExponential(1, 1), w_values=[2, 5], sim=sim)
    for r in rows:
        assert r.sim_age is not None and r.sim_std_error > 0
        assert abs(r.sim_age - r.exact_age) <= max(0.01 * r.exact_age, 4 * r.sim_std_error)
    again = sweep_write_quorum(10, 2, ShiftedExponential(1, 1), w_values=[2, 5], sim=sim, workers=2)
    assert again == rows


def test_sweep_rejects_bad_w():
    with pytest.raises(ValueError):
        sweep_write_quorum(10, 2, ShiftedExponential(1, 1), w_values=[0, 3])


# --- tables ------------------------------------------------------------------


def one_row(**kw):
    base = dict(n=100, w=60, r=1, rate=0.5, shift=1.0, exact_age=5.08596364994428, approx_age=5.1,
                sim_age=5.0839, sim_std_error=0.0013, is_optimum_exact=False, is_optimum_approx=True)
    base.update(kw)
    return SweepRow(**base)


def test_csv_one_row():
    text = render_table([one_row()], "csv")
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(COLUMNS)
    assert lines[0] == "n,w,r,lambda,c,exact_age,approx_age,sim_age,sim_std_error,is_optimum_exact,is_optimum_approx"


def test_csv_absent_values_are_empty():
    row = one_row(w=100, approx_age=None, sim_age=None, sim_std_error=None)
    rec = next(csv.DictReader(io.StringIO(render_table([row], "csv"))))
    assert rec["approx_age"] == "" and rec["sim_age"] == "" and rec["sim_std_error"] == ""


def test_numbers_keep_precision():
    rec = next(csv.DictReader(io.StringIO(render_table([one_row()], "csv"))))
    digits = rec["exact_age"].replace(".", "").lstrip("0")
    assert len(digits) >= 9


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip(fmt):
    rows = sweep_write_quorum(12, 3, ShiftedExponential(0.7, 0.4))
    rows.append(one_row(approx_age=None, sim_age=None, sim_std_error=None))
    assert parse_table(render_table(rows, fmt), fmt) == rows


def test_json_keys():
    data = json.loads(render_table([one_row()], "json"))
    assert list(data[0].keys()) == list(COLUMNS)
    assert data[0]["lambda"] == 0.5 and data[0]["c"] == 1.0


def test_emit_to_file_atomically(tmp_path):
    dest = tmp_path / "out.csv"
    dest.write_text("stale\n")
    emit_table([one_row()], "csv", dest)
    assert dest.read_text().startswith("n,w,r")
    assert os.listdir(tmp_path) == ["out.csv"]


def test_emit_stdout(capsys):
    emit_table([one_row()], "json")
    assert json.loads(capsys.readouterr().out)[0]["w"] == 60


def test_emit_errors(tmp_path):
    with pytest.raises(ValueError):
        render_table([], "csv")
    with pytest.raises(ValueError):
        render_table([one_row()], "xml")
    missing = tmp_path / "nope" / "out.csv"
    with pytest.raises(OSError, match="out.csv"):
        emit_table([one_row()], "csv", missing)


@pytest.mark.slow
def test_default_grid_simulation_agrees_with_exact():
    sim = SimOptions(intervals=100_000, warmup=1000, replications=4, seed=4242)
    bad = []
    for r in (1, 5, 20):
        for lam in (0.5, 1, 2):
            for row in sweep_write_quorum(100, r, ShiftedExponential(lam, 1), sim=sim):
                tol = max(0.01 * row.exact_age, 3 * row.sim_std_error)
                if abs(row.sim_age - row.exact_age) > tol:
                    bad.append((r, lam, row.w, row.exact_age, row.sim_age, row.sim_std_error))
    assert not bad
