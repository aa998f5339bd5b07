import csv
import json

import numpy as np
import pytest

from berbounds.bounds import BoundsConfig, estimate_all_bounds
from berbounds.cli import (
    blend_distances,
    main,
    run_blend_sweep,
    synthetic_blend_fixture,
)
from berbounds.data import DistanceData, load_labeled_csv
from berbounds.ensemble import solve_weights
from berbounds.mst import mst_statistics


def _write_labeled_csv(path, n=15, seed=0):
    rng = np.random.default_rng(seed)
    lines = ["x,y,label"]
    for row in rng.normal(size=(n, 2)):
        lines.append(f"{row[0]},{row[1]},a")
    for row in rng.normal(2.5, 1.0, size=(n, 2)):
        lines.append(f"{row[0]},{row[1]},b")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _write_distance_inputs(path_d, path_l, n=12, seed=1):
    rng = np.random.default_rng(seed)
    pts = np.concatenate([rng.normal(size=n), rng.normal(4.0, 1.0, size=n)])
    D = np.abs(pts[:, None] - pts[None, :])
    path_d.write_text(
        "\n".join(",".join(f"{v:.12g}" for v in row) for row in D) + "\n",
        encoding="utf-8",
    )
    path_l.write_text("\n".join(["1"] * n + ["2"] * n) + "\n", encoding="utf-8")
    return path_d, path_l


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_weights_command_matches_solver(tmp_path):
    out = tmp_path / "w.json"
    code = main(["weights", "--k-scales", "1,4", "--dim", "2", "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    direct = solve_weights((1.0, 4.0), 2)
    assert payload["weights"] == pytest.approx(list(direct.weights))
    assert payload["dim"] == 2
    assert payload["mode"] == "exact-null"
    assert payload["norm"] == pytest.approx(direct.norm)


def test_weights_command_reports_solver_errors(tmp_path, capsys):
    code = main(["weights", "--k-scales", "1,2", "--dim", "4"])
    assert code == 2
    assert "rank condition" in capsys.readouterr().err


def test_simulate_writes_sweep_and_manifest(tmp_path):
    out_dir = tmp_path / "sweep"
    args = [
        "simulate", "--dim", "1", "--deltas", "1,2", "--sample-sizes", "60",
        "--trials", "3", "--seed", "0", "--out-dir", str(out_dir),
    ]
    assert main(args) == 0
    rows = _read_csv(out_dir / "sweep_T60.csv")
    header, body = rows[0], rows[1:]
    assert header == [
        "delta", "bound_name", "estimator", "mean", "sd", "truth",
        "n_trials", "n_failed", "error",
    ]
    assert len(body) == 2 * 6
    for row in body:
        assert row[8] == ""
        assert int(row[7]) == 0
    truth_by_delta = {row[0]: row[5] for row in body}
    assert len(truth_by_delta) == 2
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["mode"] == "simulate"
    assert manifest["files"]["60"] == "sweep_T60.csv"
    assert manifest["csv_columns"] == header


def test_simulate_reruns_are_byte_identical(tmp_path):
    args = [
        "simulate", "--dim", "1", "--deltas", "1.5", "--sample-sizes", "50",
        "--trials", "2", "--seed", "9",
    ]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(d1)]) == 0
    assert main(args + ["--out-dir", str(d2)]) == 0
    assert (d1 / "sweep_T50.csv").read_bytes() == (d2 / "sweep_T50.csv").read_bytes()
    assert (d1 / "manifest.json").read_bytes() == (d2 / "manifest.json").read_bytes()


def test_simulate_fails_when_too_many_trials_break(tmp_path, capsys):
    out_dir = tmp_path / "bad"
    args = [
        "simulate", "--dim", "1", "--deltas", "1", "--sample-sizes", "60",
        "--trials", "2", "--out-dir", str(out_dir),
        "--k-scales", "0.3,0.32",
    ]
    assert main(args) == 1
    assert "failed" in capsys.readouterr().err
    rows = _read_csv(out_dir / "sweep_T60.csv")
    knn_rows = [r for r in rows[1:] if r[2] == "knn-ensemble"]
    assert all("duplicate neighbor counts" in r[8] for r in knn_rows)
    assert all(int(r[7]) == 2 for r in knn_rows)
    mst_rows = [r for r in rows[1:] if r[2] == "mst"]
    assert all(r[8] == "" for r in mst_rows)


def test_bounds_command_labeled_csv(tmp_path):
    data_csv = _write_labeled_csv(tmp_path / "toy.csv")
    out = tmp_path / "report.json"
    code = main(["bounds", "--data", str(data_csv), "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"prior1", "bounds", "diagnostics"}
    assert len(payload["bounds"]) == 6
    direct = estimate_all_bounds(load_labeled_csv(data_csv, "label"))
    direct_map = {
        (e.bound_name, e.estimator): e.estimate for e in direct.entries
    }
    for row in payload["bounds"]:
        assert row["estimate"] == pytest.approx(
            direct_map[(row["bound_name"], row["estimator"])], rel=1e-15
        )


def test_bounds_command_stdout_and_distance_input(tmp_path, capsys):
    d, l = _write_distance_inputs(tmp_path / "D.csv", tmp_path / "labels.txt")
    code = main([
        "bounds", "--distances", str(d), "--labels", str(l), "--intrinsic-dim", "1",
    ])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert all(row.get("error") is None for row in payload["bounds"])


def test_bounds_command_distance_input_without_dim_records_errors(tmp_path):
    d, l = _write_distance_inputs(tmp_path / "D.csv", tmp_path / "labels.txt")
    out = tmp_path / "report.json"
    assert main(["bounds", "--distances", str(d), "--labels", str(l), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    knn = [r for r in payload["bounds"] if r["estimator"] == "knn-ensemble"]
    mst = [r for r in payload["bounds"] if r["estimator"] == "mst"]
    assert all("intrinsic_dim" in r["error"] for r in knn)
    assert all(r.get("error") is None for r in mst)


def test_bounds_command_requires_exactly_one_input_style(tmp_path, capsys):
    data_csv = _write_labeled_csv(tmp_path / "toy.csv")
    d, l = _write_distance_inputs(tmp_path / "D.csv", tmp_path / "labels.txt")
    code = main([
        "bounds", "--data", str(data_csv), "--distances", str(d), "--labels", str(l),
    ])
    assert code == 2
    assert "not both" in capsys.readouterr().err
    assert main(["bounds", "--distances", str(d)]) == 2


def test_mst_command_outputs(tmp_path):
    data_csv = _write_labeled_csv(tmp_path / "toy.csv", n=10)
    out_dir = tmp_path / "mst"
    assert main(["mst", "--data", str(data_csv), "--out-dir", str(out_dir)]) == 0
    rows = _read_csv(out_dir / "mst_edges.csv")
    assert rows[0] == ["i", "j", "weight", "label_i", "label_j", "cross"]
    assert len(rows) - 1 == 20 - 1
    summary = json.loads((out_dir / "mst_summary.json").read_text())
    stats = mst_statistics(load_labeled_csv(data_csv, "label"))
    assert summary["cross_count"] == stats.result.cross_count
    assert summary["divergence"] == pytest.approx(stats.value)
    assert summary["n1"] == 10 and summary["n2"] == 10
    cross_rows = sum(int(r[5]) for r in rows[1:])
    assert cross_rows == stats.result.cross_count


def test_missing_file_is_a_clean_error(tmp_path, capsys):
    assert main(["bounds", "--data", str(tmp_path / "nope.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_blend_default_fixture_sweep(tmp_path):
    out_dir = tmp_path / "blend"
    args = [
        "blend", "--r-grid", "0,0.5,1", "--bootstrap", "0",
        "--out-dir", str(out_dir), "--seed", "0",
    ]
    assert main(args) == 0
    rows = _read_csv(out_dir / "blend_sweep.csv")
    assert rows[0] == ["r", "bound_name", "estimator", "estimate", "ci_lo", "ci_hi", "error"]
    assert len(rows) - 1 == 3 * 6
    by_key = {(r[0], r[1], r[2]): r for r in rows[1:]}
    low0 = float(by_key[("0", "hp_lower", "knn-ensemble")][3])
    low1 = float(by_key[("1", "hp_lower", "knn-ensemble")][3])
    assert low0 < low1
    manifest = json.loads((out_dir / "blend_manifest.json").read_text())
    assert manifest["synthetic_fixture"] is True
    assert manifest["r_grid"] == [0.0, 0.5, 1.0]

    # The r=0 endpoint is exactly the separated matrix's own report.
    _, separated = synthetic_blend_fixture()
    direct = estimate_all_bounds(separated, BoundsConfig())
    assert low0 == direct.entry("hp_lower", "knn-ensemble").estimate


def test_blend_sweep_bootstrap_cis_present(tmp_path):
    out_dir = tmp_path / "blend_ci"
    args = [
        "blend", "--r-grid", "0,1", "--bootstrap", "12", "--out-dir", str(out_dir),
        "--bootstrap-estimators", "knn-ensemble,mst",
    ]
    assert main(args) == 0
    rows = _read_csv(out_dir / "blend_sweep.csv")
    for row in rows[1:]:
        assert row[4] != "" and row[5] != ""
        assert float(row[4]) <= float(row[5]) + 1e-15


def test_blend_distances_validation():
    first, second = synthetic_blend_fixture()
    with pytest.raises(ValueError, match="lie in"):
        blend_distances(first, second, 1.5)
    keep = np.r_[0:5, 20:25]
    small = DistanceData(first.distances[np.ix_(keep, keep)], first.labels[keep])
    with pytest.raises(ValueError, match="shapes"):
        blend_distances(first, small, 0.5)
    relabeled = DistanceData(
        second.distances, second.labels[::-1], second.intrinsic_dim
    )
    with pytest.raises(ValueError, match="labels"):
        blend_distances(first, relabeled, 0.5)
    undimmed = DistanceData(second.distances, second.labels, None)
    with pytest.raises(ValueError, match="intrinsic_dim"):
        blend_distances(first, undimmed, 0.5)


def test_blend_endpoints_return_exact_copies():
    first, second = synthetic_blend_fixture()
    assert np.array_equal(blend_distances(first, second, 1.0).distances, first.distances)
    assert np.array_equal(blend_distances(first, second, 0.0).distances, second.distances)


def test_synthetic_fixture_shape():
    first, second = synthetic_blend_fixture()
    assert first.intrinsic_dim == 1 and second.intrinsic_dim == 1
    assert np.array_equal(first.labels, second.labels)
    assert first.n == 40
    # The first matrix interleaves the classes; the second separates them.
    assert mst_statistics(first).result.cross_count > mst_statistics(second).result.cross_count
    assert mst_statistics(second).result.cross_count == 1


def test_run_blend_sweep_requires_grid():
    first, second = synthetic_blend_fixture()
    with pytest.raises(ValueError, match="empty"):
        run_blend_sweep(first, second, (), BoundsConfig())


def test_config_file_defaults_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 1, "deltas": "1.5", "dim": 1}))
    out_dir = tmp_path / "from_config"
    args = [
        "--config", str(cfg), "simulate", "--sample-sizes", "40",
        "--out-dir", str(out_dir), "--seed", "3",
    ]
    assert main(args) == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["trials"] == 1
    assert manifest["deltas"] == [1.5]
    assert manifest["dim"] == 1

    out_dir2 = tmp_path / "flag_wins"
    assert main(args[:-4] + ["--out-dir", str(out_dir2), "--seed", "3", "--trials", "2"]) == 0
    manifest2 = json.loads((out_dir2 / "manifest.json").read_text())
    assert manifest2["trials"] == 2


def test_config_file_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trialz": 3}))
    with pytest.raises(SystemExit) as err:
        main(["--config", str(cfg), "simulate"])
    assert err.value.code == 2
    assert "unknown config keys: trialz" in capsys.readouterr().err
