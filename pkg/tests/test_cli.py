import csv
import json

import numpy as np
import pytest

from tengraph import cli
from tengraph.metrics import METRIC_FIELDS
from tengraph.sampling import GraphSpec, ScenarioConfig, gen_scenario
from tengraph.tgt_io import read_tensor, write_tensor

SIM_CFG = {
    "scenario": "one",
    "graph": {"kind": "chain", "dims": [4, 4]},
    "n": 20,
    "K": [1, 2],
    "n_k": 30,
    "reps": 2,
    "seed": 11,
}


def _write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def _read_rows(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"scenario": "one",\n  "n": }\n', encoding="utf-8")
    with pytest.raises(SystemExit) as exc:
        cli._load_config(path)
    assert f"{path}:2:8" in str(exc.value)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(SystemExit, match="cannot read config"):
        cli._load_config(tmp_path / "nope.json")


def test_simulate_row_accounting(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    assert cli.cmd_simulate(SIM_CFG, out) == 0
    header, rows = _read_rows(out / "results.csv")
    assert header == ["scenario", "graph", "rep", "seed", "method", "K"] + list(
        METRIC_FIELDS
    )
    # 2 sweep values x 2 reps x 3 methods
    assert len(rows) == 12
    for row in rows:
        assert row[0] == "one" and row[1] == "chain"
        assert int(row[3]) == 11 + int(row[2])
        assert row[4] in ("tlasso", "proposed", "proposed.v")
    assert sorted({int(r[5]) for r in rows}) == [1, 2]
    assert not (out / "failures.json").exists()


def test_simulate_rerun_is_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        out.mkdir()
        cli.cmd_simulate(SIM_CFG, out)
        outs.append(out)
    for fname in ("results.csv", "summary.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_simulate_workers_match_serial(tmp_path):
    serial, parallel = tmp_path / "s", tmp_path / "p"
    serial.mkdir()
    parallel.mkdir()
    cli.cmd_simulate(SIM_CFG, serial, workers=1)
    cli.cmd_simulate(SIM_CFG, parallel, workers=2)
    assert (serial / "results.csv").read_bytes() == (parallel / "results.csv").read_bytes()
    assert (serial / "summary.csv").read_bytes() == (parallel / "summary.csv").read_bytes()


def test_simulate_summary_means(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    cli.cmd_simulate(SIM_CFG, out)
    _, rows = _read_rows(out / "results.csv")
    s_header, s_rows = _read_rows(out / "summary.csv")
    assert s_header[:4] == ["scenario", "graph", "method", "K"]
    assert len(s_rows) == 6  # 2 sweep values x 3 methods
    for srow in s_rows:
        method, val = srow[2], srow[3]
        picked = [r for r in rows if r[4] == method and r[5] == val]
        assert len(picked) == 2
        for j, field in enumerate(METRIC_FIELDS):
            want = np.mean([float(r[6 + j]) for r in picked])
            assert float(srow[4 + j]) == pytest.approx(want, abs=1e-12)


def test_simulate_seed_override(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    cli.cmd_simulate(SIM_CFG, out, seed=99)
    _, rows = _read_rows(out / "results.csv")
    assert {int(r[3]) for r in rows} == {100, 101}


def test_simulate_scenario_two_oracle_na(tmp_path):
    cfg = {
        "scenario": "two",
        "graph": {"kind": "chain", "dims": [4, 4]},
        "n": 20,
        "K": 2,
        "card_A": [0, 1],
        "n_k": 30,
        "reps": 2,
        "seed": 5,
    }
    out = tmp_path / "out"
    out.mkdir()
    assert cli.cmd_simulate(cfg, out) == 0
    header, rows = _read_rows(out / "results.csv")
    assert header[5] == "card_A"
    assert len(rows) == 16  # 2 sweep values x 2 reps x 4 methods
    oracle0 = [r for r in rows if r[4] == "oracle" and r[5] == "0"]
    assert len(oracle0) == 2
    for row in oracle0:
        assert row[6:] == ["n/a"] * len(METRIC_FIELDS)
    oracle1 = [r for r in rows if r[4] == "oracle" and r[5] == "1"]
    assert all(cell != "n/a" for row in oracle1 for cell in row[6:])
    _, s_rows = _read_rows(out / "summary.csv")
    s_oracle0 = [r for r in s_rows if r[2] == "oracle" and r[3] == "0"]
    assert s_oracle0[0][4:] == ["n/a"] * len(METRIC_FIELDS)


def test_simulate_records_failures(tmp_path, monkeypatch):
    real_rep = cli._simulate_rep

    def boom(task):
        if task["rep"] == 2:
            raise RuntimeError("synthetic failure")
        return real_rep(task)

    monkeypatch.setattr(cli, "_simulate_rep", boom)
    cfg = dict(SIM_CFG, K=1)
    out = tmp_path / "out"
    out.mkdir()
    assert cli.cmd_simulate(cfg, out) == 1
    _, rows = _read_rows(out / "results.csv")
    assert len(rows) == 3  # only rep 1 contributed
    with open(out / "failures.json", encoding="utf-8") as fh:
        failures = json.load(fh)["failures"]
    assert failures == [
        {"rep": 2, "K": 1, "seed": 13, "error": "synthetic failure"}
    ]


def _stage_tensors(tmp_path, seed=21, K=2):
    cfg = ScenarioConfig(
        "one", GraphSpec("chain", (5, 4)), n=30, K=K, n_k=40, seed=seed
    )
    sc = gen_scenario(cfg)
    tpath = tmp_path / "target.tgt"
    write_tensor(tpath, sc.target.samples)
    apaths = []
    for i, dom in enumerate(sc.auxiliaries):
        p = tmp_path / f"aux{i}.tgt"
        write_tensor(p, dom.samples)
        apaths.append(str(p))
    return str(tpath), apaths


def test_estimate_outputs(tmp_path):
    tpath, apaths = _stage_tensors(tmp_path)
    cfg_path = _write_cfg(
        tmp_path, {"target": tpath, "auxiliaries": apaths, "seed": 3}
    )
    out = tmp_path / "fit"
    rc = cli.main(["estimate", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 0

    with open(out / "fit.json", encoding="utf-8") as fh:
        fit = json.load(fh)
    assert fit["weights"]["scheme"] == "naive"
    assert sum(fit["weights"]["alpha"]) == pytest.approx(1.0, abs=1e-12)
    assert len(fit["lambda1"]) == 2 and len(fit["lambda2"]) == 2
    assert all(x >= 0 for x in fit["psi_min"])

    for m, p in enumerate((5, 4)):
        om = read_tensor(out / f"omega_sym_mode{m}.tgt")
        assert om.shape == (p, p)
        assert np.allclose(om, om.T)
        _, edges = _read_rows(out / f"edges_mode{m}.csv")
        for i, j, value in edges:
            assert int(i) != int(j)
            assert float(value) == om[int(i), int(j)]
        want = sum(
            1 for i in range(p) for j in range(p) if i != j and om[i, j] != 0
        )
        assert len(edges) == want


def test_estimate_single_auxiliary_weight(tmp_path):
    tpath, apaths = _stage_tensors(tmp_path, seed=22, K=1)
    cfg_path = _write_cfg(tmp_path, {"target": tpath, "auxiliaries": apaths})
    out = tmp_path / "fit"
    assert cli.main(["estimate", "--config", str(cfg_path), "--out", str(out)]) == 0
    with open(out / "fit.json", encoding="utf-8") as fh:
        fit = json.load(fh)
    assert fit["weights"]["alpha"] == [1.0]


def test_estimate_missing_input(tmp_path):
    cfg_path = _write_cfg(
        tmp_path, {"target": str(tmp_path / "absent.tgt"), "auxiliaries": []}
    )
    with pytest.raises(SystemExit, match="cannot load input tensors"):
        cli.main(["estimate", "--config", str(cfg_path), "--out", str(tmp_path / "o")])


def test_eval_csv_layout(tmp_path):
    tpath, apaths = _stage_tensors(tmp_path, seed=23)
    cfg_path = _write_cfg(
        tmp_path,
        {"target": tpath, "auxiliaries": apaths, "folds": 5, "mode": 0},
    )
    out = tmp_path / "cv"
    assert cli.main(["eval", "--config", str(cfg_path), "--out", str(out)]) == 0
    header, rows = _read_rows(out / "cv.csv")
    assert header == ["fold", "method", "pe", "rel_to_tlasso"]
    assert len(rows) == 5 * 3 + 3
    fold_rows = [r for r in rows if r[0] != "avg"]
    assert all(r[3] == "" for r in fold_rows)
    avg = {r[1]: r for r in rows if r[0] == "avg"}
    assert float(avg["tlasso"][3]) == 1.0
    for method in ("tlasso", "proposed", "proposed.v"):
        folds = [float(r[2]) for r in fold_rows if r[1] == method]
        assert len(folds) == 5
        assert float(avg[method][2]) == pytest.approx(np.mean(folds), abs=1e-12)

    rerun = tmp_path / "cv2"
    cli.main(["eval", "--config", str(cfg_path), "--out", str(rerun)])
    assert (out / "cv.csv").read_bytes() == (rerun / "cv.csv").read_bytes()


def test_main_simulate_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(
        cli, "_simulate_rep", lambda task: (_ for _ in ()).throw(RuntimeError("x"))
    )
    cfg_path = _write_cfg(tmp_path, dict(SIM_CFG, K=1, reps=1))
    out = tmp_path / "out"
    rc = cli.main(["simulate", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 1
    assert (out / "failures.json").exists()


def test_main_rejects_bad_scenario(tmp_path):
    cfg_path = _write_cfg(tmp_path, dict(SIM_CFG, scenario="three"))
    with pytest.raises(SystemExit, match="scenario"):
        cli.main(["simulate", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
