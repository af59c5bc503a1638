import csv
import json
import subprocess
import sys
from dataclasses import replace

import pytest

from xcir.cli import exponent_table, main
from xcir.errors import NonAffineModelError
from xcir.model import (GenericTransport, JumpSchedule, config_to_dict, linear_transport,
                        load_config)


def small_config(tmp_path, n_paths=4000, seed=None, extra=None, name="cfg.json"):
    raw = config_to_dict(load_config("fig3"))
    raw["mc"]["n_paths"] = n_paths
    if seed is None:
        raw["mc"].pop("seed", None)
    else:
        raw["mc"]["seed"] = seed
    raw["horizon"] = 30.0
    raw["grid"] = {"dt": 1.0}
    raw["schedule"] = [e for e in raw["schedule"] if e["time"] <= 28.0]
    if extra:
        raw["schedule"].append(extra)
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_wide(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "fig2", "--out", str(out), "--paths", "2"]) == 0
    rows = read_csv(out / "path_0001.csv")
    assert rows[0] == ["t", "x"] and len(rows) == 1002
    jumps = read_csv(out / "jumps_0000.csv")
    assert jumps[0] == ["n", "s_n", "x_pre", "xi", "x_post"] and len(jumps) == 14
    run = json.loads((out / "run.json").read_text())
    assert run["seed"] == 20251015
    assert "jumps=13" in capsys.readouterr().out


def test_simulate_long_format(tmp_path):
    out = tmp_path / "long"
    assert main(["simulate", "fig3", "--out", str(out), "--paths", "3", "--long-format"]) == 0
    rows = read_csv(out / "paths.csv")
    assert rows[0] == ["path_id", "t", "x"]
    assert {r[0] for r in rows[1:]} == {"0", "1", "2"}
    assert read_csv(out / "jumps.csv")[0] == ["path_id", "n", "s_n", "x_pre", "xi", "x_post"]


def test_simulate_rejects_nonpositive_paths(tmp_path, capsys):
    assert main(["simulate", "fig2", "--out", str(tmp_path), "--paths", "0"]) == 2
    assert "n_paths must be positive" in capsys.readouterr().err


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = small_config(tmp_path)
    monkeypatch.setenv("XCIR_SEED", "77")
    main(["simulate", cfg, "--out", str(tmp_path / "a")])
    assert json.loads((tmp_path / "a" / "run.json").read_text())["seed"] == 77
    main(["simulate", cfg, "--out", str(tmp_path / "b"), "--seed", "5"])
    assert json.loads((tmp_path / "b" / "run.json").read_text())["seed"] == 5
    seeded = small_config(tmp_path, seed=9, name="seeded.json")
    main(["simulate", seeded, "--out", str(tmp_path / "c")])
    assert json.loads((tmp_path / "c" / "run.json").read_text())["seed"] == 9
    monkeypatch.delenv("XCIR_SEED")
    main(["simulate", cfg, "--out", str(tmp_path / "d")])
    assert json.loads((tmp_path / "d" / "run.json").read_text())["seed"] == 0


def test_exponents_table(tmp_path, capsys):
    out = tmp_path / "exp.json"
    assert main(["exponents", "fig2", "--u", "-1", "2i", "--trace", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 2 and len(doc["rows"][0]["trace"]) == 13
    assert doc["rows"][0]["cf_x0"]["im"] == 0.0
    assert "jump  13" in capsys.readouterr().out


def test_unknown_model_type_is_config_error(tmp_path, capsys):
    raw = json.loads(open(small_config(tmp_path)).read())
    raw["schedule"][-1]["model"] = {"type": "generic"}
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(raw))
    assert main(["exponents", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err


def test_exponent_table_non_affine_cites_jump(tmp_path):
    config = load_config(small_config(tmp_path))
    models = list(config.schedule.models)
    models[-1] = GenericTransport(lambda x, z: z)
    config = replace(config, schedule=JumpSchedule(config.schedule.times, tuple(models)))
    with pytest.raises(NonAffineModelError) as info:
        exponent_table(config, 0.0, config.horizon, (-1.0,))
    assert info.value.jump_index == len(models)


def test_check_jumps_rejects_adversarial(tmp_path, capsys):
    good = small_config(tmp_path)
    assert main(["check-jumps", good, "--span"]) == 0
    spec = linear_transport(0.0, -2.0).to_dict()
    bad = small_config(tmp_path, extra={"time": 29.0, "model": spec})
    out = tmp_path / "jumps.json"
    assert main(["check-jumps", bad, "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["jumps"][-1]["passed"] is False
    assert "FAIL" in capsys.readouterr().out


def test_validate_small(tmp_path):
    cfg = small_config(tmp_path, n_paths=5000, seed=3)
    out = tmp_path / "val"
    assert main(["validate", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] and report["seed"] == 3
    names = {c["check"] for c in report["checks"]}
    assert {"compare_affine", "compensator", "dual_ks", "stationary_sweep",
            "stationary_limit", "jump_admissibility"} <= names
    assert (out / "report.txt").exists()


def test_validate_fails_on_inadmissible(tmp_path):
    spec = linear_transport(0.0, -2.0).to_dict()
    cfg = small_config(tmp_path, n_paths=2000, seed=1, extra={"time": 29.0, "model": spec})
    out = tmp_path / "val"
    assert main(["validate", cfg, "--out", str(out)]) == 1
    assert (out / "report.json").exists()


def test_covariance_command(tmp_path, capsys):
    cfg = small_config(tmp_path, n_paths=3000, seed=2)
    out = tmp_path / "cov.json"
    assert main(["covariance", cfg, "--n", "1", "--m", "2", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert {"mc", "se", "analytic", "z"} <= doc.keys()


def test_missing_file(tmp_path):
    assert main(["simulate", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 3


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "xcir", "exponents", "fig3", "--u", "-1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "phi" in res.stdout
