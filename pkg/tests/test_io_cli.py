import os

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from matrix_di import io
from matrix_di.cli import main
from matrix_di.core_types import ValidationError


def test_transform_rules():
    assert_allclose(io.apply_rule([1.0, 3.0, 6.0], "diff1"), [2.0, 3.0])
    assert_allclose(io.apply_rule([1.0, 3.0, 6.0], "diff2"), [1.0])
    assert_allclose(io.apply_rule([1.0, np.e, np.e**3], "log_diff1"), [1.0, 2.0])
    with pytest.raises(ValidationError, match="position 1"):
        io.apply_rule([1.0, 0.0], "log")


def test_panel_round_trip(tmp_path, rng):
    X = rng.standard_normal((107, 14, 10))
    rows = [f"r{i:02d}" for i in range(14)]
    cols = [f"c{j:02d}" for j in range(10)]
    path = tmp_path / "panel.csv"
    io.write_panel(path, X, range(107), rows, cols, {"seed": 0})
    panel = io.read_panel(str(path))
    assert_array_equal(panel.values, X)
    assert panel.row_ids == tuple(rows) and panel.col_ids == tuple(cols)
    assert panel.times == tuple(str(t) for t in range(107))


def test_missing_grid_cell_is_reported(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("time,row_id,col_id,value\n0,a,x,1\n0,a,y,2\n0,b,x,3\n")
    with pytest.raises(ValidationError, match=r"missing \(0,b,y\)"):
        io.read_panel(str(path))


def test_duplicate_and_header_errors(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("time,row_id,col_id,value\n0,a,x,1\n0,a,x,2\n")
    with pytest.raises(ValidationError, match=":3: duplicate"):
        io.read_panel(str(path))
    path.write_text("t,r,c,v\n")
    with pytest.raises(ValidationError, match="expected header"):
        io.read_panel(str(path))


def test_transform_truncates_to_common_length():
    panel = io.Panel(np.arange(1.0, 13.0).reshape(4, 3, 1), ("0", "1", "2", "3"), ("a", "b", "c"), ("x",))
    spec = io.TransformSpec("none", per_col={}, per_cell={("b", "x"): "diff2"})
    out = io.transform_panel(panel, np.arange(4.0), spec)
    assert out.series.values.shape == (2, 3, 1)
    assert out.times == ("2", "3")
    assert_allclose(out.target.values, [2.0, 3.0])


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


@pytest.fixture
def planted_dir(tmp_path, capsys):
    code, out, _ = _run(["simulate", "--fixture", "planted", "--out", tmp_path / "data"], capsys)
    assert code == 0 and out.startswith("ok ")
    return tmp_path / "data"


def test_simulate_writes_planted_panel(planted_dir):
    panel = io.read_panel(str(planted_dir / "panel.csv"))
    assert panel.values.shape == (107, 14, 10)
    assert io.read_config_line(str(planted_dir / "panel.csv"))["fixture"] == "planted"


def test_fit_then_forecast_reproduces_fitted_values(planted_dir, tmp_path, capsys):
    bundle = tmp_path / "model"
    code, out, err = _run(["fit", "--panel", planted_dir / "panel.csv", "--target", planted_dir / "target.csv",
                           "--k", 3, "--r", 2, "--alpha", -1, "--row-threshold", 0.2, "--out", bundle], capsys)
    assert code == 0, err
    assert "k=3" in out and "n_rows=10" in out and "n_cols=7" in out
    for name in ("R_hat.csv", "C_hat.csv", "alpha.csv", "beta.csv", "factors.csv", "fitted.csv", "scree.csv", "model.csv"):
        assert (bundle / name).exists()
    code, _, err = _run(["forecast", "--model", bundle, "--panel", planted_dir / "panel.csv",
                         "--out", tmp_path / "pred.csv"], capsys)
    assert code == 0, err
    _, fitted = io.read_csv(str(bundle / "fitted.csv"))
    _, pred = io.read_csv(str(tmp_path / "pred.csv"))
    a = np.array([float(r[1]) for r in fitted])
    b = np.array([float(r[1]) for r in pred])
    assert a.size == b.size == 107
    assert np.array_equal(a, b)


def test_centered_fit_forecast_round_trip(planted_dir, tmp_path, capsys):
    bundle = tmp_path / "model"
    code, _, err = _run(["fit", "--panel", planted_dir / "panel.csv", "--target", planted_dir / "target.csv",
                         "--k", 2, "--r", 2, "--center", "true", "--transform", "diff1", "--out", bundle], capsys)
    assert code == 0, err
    code, _, err = _run(["forecast", "--model", bundle, "--panel", planted_dir / "panel.csv",
                         "--out", tmp_path / "pred.csv"], capsys)
    assert code == 0, err
    a = np.array([float(r[1]) for r in io.read_csv(str(bundle / "fitted.csv"))[1]])
    b = np.array([float(r[1]) for r in io.read_csv(str(tmp_path / "pred.csv"))[1]])
    assert a.size == 106
    assert np.array_equal(a, b)


def test_fit_estimate_dims_on_strong_draw(tmp_path, capsys):
    data = tmp_path / "sim"
    code, _, _ = _run(["simulate", "--p", 20, "--q", 20, "--T", 800, "--noise-scale", 0.1, "--out", data], capsys)
    assert code == 0
    code, out, err = _run(["fit", "--panel", data / "panel.csv", "--target", data / "target.csv",
                           "--estimate-dims", "true", "--out", tmp_path / "m"], capsys)
    assert code == 0, err
    assert "k=3 r=2" in out


def test_conflicting_flags_give_error_line(planted_dir, tmp_path, capsys):
    code, out, err = _run(["fit", "--panel", planted_dir / "panel.csv", "--target", planted_dir / "target.csv",
                           "--k", 3, "--r", 2, "--estimate-dims", "true", "--out", tmp_path / "m"], capsys)
    assert code != 0 and out == ""
    assert err.startswith("error: type=UsageError message=")
    assert len(err.strip().splitlines()) == 1


def test_data_error_gives_error_line(tmp_path, capsys):
    code, _, err = _run(["fit", "--panel", tmp_path / "nope.csv", "--target", tmp_path / "t.csv",
                         "--k", 1, "--r", 1], capsys)
    assert code == 1 and err.startswith("error: type=")


def test_config_file_and_flag_precedence(planted_dir, tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# screening run\npanel = {planted_dir / 'panel.csv'}\ntarget = {planted_dir / 'target.csv'}\n"
                    f"row-threshold = 0.99\nout = {tmp_path / 'scr'}\n")
    code, _, err = _run(["screen", "--config", conf], capsys)
    assert code == 1 and "threshold" in err
    code, out, err = _run(["screen", "--config", conf, "--row-threshold", 0.2], capsys)
    assert code == 0, err
    assert "kept_rows=10" in out and "kept_cols=7" in out
    assert io.read_config_line(str(tmp_path / "scr" / "scree.csv"))["row_threshold"] == "0.2"
    conf.write_text("bogus = 1\n")
    code, _, err = _run(["screen", "--config", conf], capsys)
    assert code == 2 and "bogus" in err


def test_mc_table1_small(tmp_path, capsys):
    out_csv = tmp_path / "mc.csv"
    code, out, err = _run(["mc", "--table", 1, "--reps", 2, "--out", out_csv], capsys)
    assert code == 0, err
    header, rows = io.read_csv(str(out_csv))
    assert len(rows) == 54
    assert "mean" in header and "sd" in header
    assert io.read_config_line(str(out_csv))["reps"] == "2"


def test_eval_writes_rows(planted_dir, tmp_path, capsys):
    out_csv = tmp_path / "eval.csv"
    code, out, err = _run(["eval", "--panel", planted_dir / "panel.csv", "--target", planted_dir / "target.csv",
                           "--k", 3, "--r", 2, "--alpha=-1,0", "--row-threshold", 0.2,
                           "--benchmarks", "raw_bilinear,vec_ols,ar1", "--out", out_csv], capsys)
    assert code == 0, err
    header, rows = io.read_csv(str(out_csv))
    assert [r[0] for r in rows] == ["alpha_pca_lse", "alpha_pca_lse", "raw_bilinear", "vec_ols", "ar1"]
    assert header[5] == "fold_1" and len(header) == 17
    assert all(r[-1] != "" for r in rows[2:])
