import io
import math

import pytest

from mmewm.bench import Cell, run_cell, run_sweep, sweep_cells
from mmewm.errors import InvalidParameterError
from mmewm.metrics import read_csv, write_csv


def _csv(reports):
    buf = io.StringIO()
    write_csv(reports, buf)
    return buf.getvalue()


def test_infeasible_cells_are_flagged():
    r = run_cell(Cell("mme", "Z2", 1, "0.6", 2000.0, 25.0, 100))
    assert not r.feasible
    assert "outside feasible range" in r.note
    assert math.isnan(r.ber)
    r = run_cell(Cell("iqim", "A2", 1, "bound", 2000.0, 25.0, 100))
    assert not r.feasible


def test_alpha_axis_collapses_for_baselines():
    cells = sweep_cells(["mme", "iqim", "qim"], ["Z2"], [1], ["bound", "0.7", "0.8"], [2000], [25], 10)
    assert [c.scheme for c in cells] == ["mme"] * 3 + ["iqim", "qim"]
    with pytest.raises(InvalidParameterError):
        sweep_cells(["mme"], [], [1], ["bound"], [2000], [25], 10)


def test_iqim_reports_beta():
    r = run_cell(Cell("iqim", "Z2", 2, "bound", 2000.0, math.inf, 200))
    assert r.alpha == 0.75 and r.bound == "beta"
    assert r.ber == 0 and r.restore_rmse < 1e-9


def test_swr_decreases_with_rate():
    cells = sweep_cells(["mme"], ["Z1", "A2", "D4", "E8"], [1, 2], ["bound"], [2000], [math.inf], 4000, host="box")
    rows = run_sweep(cells)
    for lat in ("Z1", "A2", "D4", "E8"):
        r1, r2 = [r for r in rows if r.lattice == lat]
        assert r1.rate == 1 and r2.rate == 2
        assert r1.swr_db > r2.swr_db


def test_mme_gsnr_beats_iqim_across_alpha():
    alphas = ["0.65", "0.7", "0.8", "0.9", "0.95"]
    rows = run_sweep(sweep_cells(["mme", "iqim"], ["Z2"], [1], alphas, [2000], [25], 20000))
    iqim = next(r for r in rows if r.scheme == "iqim")
    for r in rows:
        if r.scheme == "mme":
            assert r.feasible
            assert r.gsnr_empirical > iqim.gsnr_empirical
            assert r.gsnr_theoretical > iqim.gsnr_theoretical


def test_workers_do_not_change_output():
    cells = sweep_cells(["mme", "qim"], ["Z2", "D4"], [1, 2], ["bound"], [1000], [20, 30], 300, host="tone")
    assert _csv(run_sweep(cells, workers=1)) == _csv(run_sweep(cells, workers=3))


def test_report_echoes_configuration():
    r = run_cell(Cell("mme", "D4", 1, "bound", 500.0, 30.0, 100, host="tone", seed=9))
    row = read_csv(_csv([r]))[0]
    assert row["lattice"] == "D4" and row["nesting"] == "2x2x2x2"
    assert float(row["alpha"]) == pytest.approx(1 - math.sqrt(2) / 4)
    assert row["seed"] == "9" and row["host"] == "tone"
