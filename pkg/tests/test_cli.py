import csv
import io
import json

import numpy as np
import pytest

from pricelab.cli import ConfigError, main, parse_horizons
from pricelab.hard_instances import two_regular_25_base
from pricelab.market import monopoly_price


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    head = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return {h: data[:, j] for j, h in enumerate(head)}


def without_timestamp(path):
    doc = json.loads(path.read_text())
    doc["metadata"].pop("timestamp")
    return doc


def test_parse_horizons():
    assert parse_horizons("4096..65536x2") == [4096, 8192, 16384, 32768, 65536]
    assert parse_horizons("64,128,256") == [64, 128, 256]
    assert parse_horizons("100") == [100]
    assert len(parse_horizons("4096..1048576x2")) == 9
    for bad in ("64..32x2", "1..8x1", "a,b"):
        with pytest.raises(ConfigError):
            parse_horizons(bad)


def test_validate_family_passes(capsys, tmp_path):
    out = tmp_path / "report.json"
    code, _, err = run(capsys, "validate", "--family", "two-regular-25", "--eps", "1e-4", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["passed"] is True
    assert doc["result"]["family_tag"] == "two-regular-25"
    assert set(doc["metadata"]) == {"command", "seed", "timestamp", "version"}
    assert "pass" in err


def test_validate_mhr_family(capsys):
    code, out, _ = run(capsys, "validate", "--family", "three-mhr-3", "--eps", "0.02")
    assert code == 0
    assert json.loads(out)["result"]["property"] == "MHR"


def test_validate_corrupted_spec(capsys, tmp_path, counterexample):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(counterexample.to_dict()))
    code, out, err = run(capsys, "validate", "--spec", str(path))
    assert code == 1
    report = json.loads(out)["result"]["reports"][0]
    assert report["passed"] is False
    assert report["argmin"] == pytest.approx(0.5, abs=1e-3)
    assert "FAIL" in err and "x=0.5" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["validate", "--family", "two-regular-25"],
        ["validate", "--family", "two-regular-25", "--eps", "-1"],
        ["validate", "--family", "two-regular-25", "--eps", "0.5"],
        ["validate", "--spec", "/nonexistent/file.json"],
        ["inspect", "--instance", "nope"],
        ["inspect", "--family", "three-regular-3", "--eps", "0.05", "--member", "99"],
        ["run", "regret", "--instance", "two-regular-base", "--horizons", "64,128"],
        ["run", "regret", "--instance", "two-regular-base", "--learner", "constant"],
        ["run", "findbest", "--instance", "two-regular-base", "--T", "0"],
        ["run", "identify", "--family", "three-regular-3", "--eps", "0.05", "--trials", "0"],
        ["run", "episode", "--instance", "two-regular-base", "--jobs", "0"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_inspect_member_difference_peak(capsys):
    code, out, _ = run(capsys, "inspect", "--family", "two-regular-25", "--eps", "1e-4", "--member", "1", "--points", "2001")
    assert code == 0
    cols = read_csv(out)
    assert {"x", "F_1", "F_2", "product_F", "r", "dF_1", "dF_2", "d_product_F", "dr"} <= set(cols)
    j = int(np.argmax(cols["dF_2"]))
    assert cols["x"][j] == pytest.approx(0.47, abs=1e-9)
    assert cols["dF_2"][j] == pytest.approx(1e-4, rel=1e-9)
    assert np.all(cols["dF_1"] == 0.0)


def test_inspect_base_has_zero_differences(capsys):
    code, out, _ = run(capsys, "inspect", "--family", "three-regular-3", "--eps", "0.05", "--member", "0")
    cols = read_csv(out)
    for k in cols:
        if k.startswith("d"):
            assert np.all(cols[k] == 0.0), k


def test_inspect_revenue_column_matches_monopoly(capsys, tmp_path):
    path = tmp_path / "curve.csv"
    code, _, _ = run(capsys, "inspect", "--instance", "two-regular-base", "--points", "20001", "--out", str(path))
    assert code == 0
    cols = read_csv(path.read_text())
    _, r_star = monopoly_price(two_regular_25_base())
    assert cols["r"].max() == pytest.approx(r_star, abs=1e-6)


def test_export_family_round_trips(capsys, tmp_path):
    code, _, _ = run(capsys, "export-family", "--family", "three-regular-3", "--eps", "0.05", "--out", str(tmp_path))
    assert code == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())["result"]
    files = sorted(p.name for p in tmp_path.glob("member_*.json"))
    assert len(files) == manifest["K"] == 2
    code, _, _ = run(capsys, "validate", "--spec", str(tmp_path / files[0]))
    assert code == 0
    code, out, _ = run(capsys, "inspect", "--spec", str(tmp_path / "base.json"), "--points", "11")
    assert code == 0 and len(read_csv(out)["x"]) >= 11


def test_run_regret(capsys, tmp_path):
    out = tmp_path / "fit.json"
    code, _, err = run(
        capsys, "run", "regret", "--instance", "two-regular-base", "--learner", "vanilla", "--core", "ucb",
        "--horizons", "64..256x2", "--seeds", "3", "--out", str(out),
    )
    assert code == 0
    res = json.loads(out.read_text())["result"]
    assert res["horizons"] == [64, 128, 256]
    assert len(res["seeds"]) == 3 and all(len(s) == 3 for s in res["seeds"])
    assert "slope" in err


def test_run_findbest(capsys):
    code, out, _ = run(capsys, "run", "findbest", "--arms", "10", "--T", "2000", "--core", "ucb", "--instance", "two-regular-base")
    assert code == 0
    res = json.loads(out)["result"]
    assert 0 <= res["arm"] < 10
    assert sum(res["mean_pull_counts"]) == 2000
    assert res["best_arm"] == 3  # price 0.4 ties every higher price on the flat part; the first wins


def test_run_identify(capsys):
    code, out, err = run(
        capsys, "run", "identify", "--family", "three-regular-3", "--eps", "0.05", "--budget", "2000", "--trials", "5",
        "--strategy", "uniform", "--arms", "20",
    )
    assert code == 0
    res = json.loads(out)["result"]
    assert res["trials"] == 5 and len(res["success_rate"]) == 2
    assert "violations" in err


def test_run_episode(capsys, tmp_path):
    path = tmp_path / "log.csv"
    code, out, _ = run(capsys, "run", "episode", "--instance", "two-regular-base", "--learner", "ucb", "--K", "8", "--T", "500", "--out", str(path))
    assert code == 0
    summary = json.loads(out)
    assert summary["T"] == 500
    rows = path.read_text().strip().splitlines()
    assert len(rows) == 501


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "regret", "--instance", "two-regular-base", "--horizons", "64,128,256", "--seeds", "2"],
        ["run", "findbest", "--instance", "two-mhr-base", "--T", "500", "--trials", "3"],
        ["run", "identify", "--family", "three-regular-3", "--eps", "0.05", "--budget", "500", "--trials", "3"],
        ["validate", "--family", "two-regular-3", "--eps", "0.05"],
    ],
)
def test_reruns_are_byte_identical(capsys, tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(capsys, *argv, "--seed", "7", "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--seed", "7", "--out", str(b), "--jobs", "2")[0] == 0
    assert without_timestamp(a) == without_timestamp(b)
    ta = json.dumps(without_timestamp(a), sort_keys=True)
    assert ta == json.dumps(without_timestamp(b), sort_keys=True)
