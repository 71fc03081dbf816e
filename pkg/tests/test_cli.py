from __future__ import annotations

import csv
import json
import math

import pytest

from borromean2d import cli
from borromean2d.potentials import SquareWellBarrier, fig3_shape

SQUARE = SquareWellBarrier(1.0, 1.0, 1.0, 2.0).to_dict()


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_unknown_key_is_config_error(tmp_path):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"scan": {"grid": [0.1]}, "bogus": 1}))
    assert cli.main(["h-curve", "--config", str(cfgf), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("raw", [
    {"scan": {"grid": [0.2, 0.1]}},
    {"scan": {"grid": []}},
    {"scan": {"grid": {"min": 0, "max": 1, "count": 3, "spacing": "log"}}},
    {"solvers": {"twobody": {"method": "Magic"}}},
    {"solvers": {"svm": {"tol": -1}}},
    {"output": {"formats": ["xml"]}},
    {"potential": {"type": "SquareWellBarrier", "lambda_minus": 1, "lambda_plus": 1, "Rs": 2, "Rl": 1}},
])
def test_invalid_configs(raw):
    with pytest.raises(cli.ConfigError):
        cli.parse_config(raw)


def test_grid_expansion():
    assert cli.expand_grid({"min": 1, "max": 100, "count": 3, "spacing": "log"}) == pytest.approx([1, 10, 100])
    assert cli.expand_grid([0.1, 0.2]) == [0.1, 0.2]


def test_three_threshold_requires_seed(tmp_path):
    with pytest.raises(cli.ConfigError):
        cli.run("three-threshold", {"potential": SQUARE, "scan": {"grid": [0.5]}}, tmp_path)


def test_two_threshold_outputs_and_manifest(tmp_path):
    raw = {"potential": SQUARE, "scan": {"variable": "lambda_minus", "grid": [0.3, 1.0, 7.0]},
           "solvers": {"twobody": {"method": "AnalyticBarrier"}}, "output": {"formats": ["csv", "json"]}}
    code, man = cli.run("two-threshold", raw, tmp_path)
    assert code == cli.EXIT_OK
    rows = _rows(tmp_path / "two-threshold.csv")
    assert [float(r["lambda_minus"]) for r in rows] == [0.3, 1.0, 7.0]
    assert rows[2]["lambda_plus_cr"] == "inf"
    assert all(r["status"] == "ok" for r in rows)
    data = json.loads((tmp_path / "two-threshold.json").read_text())
    assert len(data) == 3 if isinstance(data, list) else True
    mf = json.loads((tmp_path / "two-threshold_manifest.json").read_text())
    assert mf["command"] == "two-threshold" and mf["exit_code"] == 0
    assert len(mf["points"]) == 3 and mf["config_digest"] == man.config_digest


def test_digest_ignores_output_but_tracks_numbers():
    a = cli.parse_config({"scan": {"grid": [0.1]}, "output": {"directory": "x"}})
    b = cli.parse_config({"scan": {"grid": [0.1]}, "output": {"directory": "y"}})
    c = cli.parse_config({"scan": {"grid": [0.2]}})
    assert a.digest("h-curve") == b.digest("h-curve")
    assert a.digest("h-curve") != c.digest("h-curve")
    assert a.digest("h-curve") != a.digest("fig1")


def test_parallel_matches_sequential(tmp_path):
    raw = {"scan": {"grid": [0.05, 0.2, 0.4, 0.6, 0.8]}}
    cli.run("h-curve", raw, tmp_path / "seq", jobs=1)
    cli.run("h-curve", raw, tmp_path / "par", jobs=3)
    seq = (tmp_path / "seq" / "h-curve.csv").read_text()
    par = (tmp_path / "par" / "h-curve.csv").read_text()
    assert seq == par


def test_h_curve_values(tmp_path):
    cli.run("h-curve", {"scan": {"grid": [0.5]}}, tmp_path)
    from borromean2d.twobody import h_of_s
    row = _rows(tmp_path / "h-curve.csv")[0]
    assert float(row["h"]) == pytest.approx(h_of_s(0.5), rel=1e-12)


def test_window_scan_and_fig2a(tmp_path):
    code, _ = cli.run("window-scan", {"scan": {"grid": [0.3]}}, tmp_path)
    assert code == 0
    rows = _rows(tmp_path / "window-scan.csv")
    assert {r["variant"] for r in rows} == {"BarrierOutside", "CoreInside", "CoreInsideWeighted",
                                           "CoreInsideReduced"}
    code, _ = cli.run("fig2a", {"scan": {"grid": [0.3, 0.5]}}, tmp_path)
    assert code == 0 and len(_rows(tmp_path / "fig2a.csv")) == 2


def test_failed_points_exit_code(tmp_path):
    # the closed-form route rejects a non-square shape at every point
    raw = {"potential": fig3_shape().to_dict(), "scan": {"grid": [0.05, 0.1]},
           "solvers": {"twobody": {"method": "AnalyticCore"}}}
    code, man = cli.run("two-threshold", raw, tmp_path)
    assert code == cli.EXIT_SOLVER
    assert all(p["status"].startswith("failed") for p in man.points)


def test_three_threshold_deterministic(tmp_path):
    raw = {"potential": SQUARE, "scan": {"grid": [0.3]},
           "solvers": {"svm": {"basis_budget": 12, "tol": 0.05, "trials": 8}}}
    cli.run("three-threshold", raw, tmp_path / "a", seed=4)
    cli.run("three-threshold", raw, tmp_path / "b", seed=4)
    a = (tmp_path / "a" / "three-threshold.csv").read_text()
    assert a == (tmp_path / "b" / "three-threshold.csv").read_text()
    row = _rows(tmp_path / "a" / "three-threshold.csv")[0]
    assert float(row["Lambda_plus_cr"]) >= float(row["lambda_plus_cr"]) or math.isinf(float(row["Lambda_plus_cr"]))
