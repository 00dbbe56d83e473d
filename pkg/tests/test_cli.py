import configparser
import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from paucopt.cli import (TRACE_COLUMNS, build_dataset, compare, load_config, main,
                         parse_config, resolve_range)
from paucopt.dataset import SyntheticSpec, generate_synthetic, write_binary_libsvm
from paucopt.prox_solver import ConfigError
from paucopt.ranked_range import dc_objective

PAUC_CONFIG = """\
[experiment]
task = pauc
solver = {solver}
seeds = 0, 1
out = {out}

[dataset]
synthetic = yes
n_pos = 20
n_neg = 100
seed = 1

[range]
alpha = 0.1
beta = 0.5

[solver]
K = 6
C = 10
J = 5
{extra}
"""

SORR_CONFIG = """\
[experiment]
task = sorr
solver = agd_sbcd
seeds = 0
out = out

[dataset]
synthetic = yes
n = 200
d = 3
seed = 0

[range]
m = 10
n = 60

[solver]
K = 20
C = 20
J = 10
strict = no
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def _pauc_config(tmp_path, name="agd.ini", solver="agd_sbcd", out="out", extra="strict = no"):
    return _write(tmp_path, name, PAUC_CONFIG.format(solver=solver, out=out, extra=extra))


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_k_rows_per_seed(tmp_path, capsys):
    cfg = _pauc_config(tmp_path)
    assert main(["run", str(cfg)]) == 0
    assert "wrote 2 seed(s)" in capsys.readouterr().out
    for seed in (0, 1):
        rows = _read_csv(tmp_path / "out" / f"seed_{seed}" / "trace.csv")
        assert tuple(rows[0]) == TRACE_COLUMNS
        assert [int(r[0]) for r in rows[1:]] == list(range(6))
        roc = _read_csv(tmp_path / "out" / f"seed_{seed}" / "roc.csv")
        assert roc[0] == ["fpr", "tpr", "threshold"]
        assert roc[1][:2] == ["0.0", "0.0"] and roc[-1][:2] == ["1.0", "1.0"]
        metrics = json.loads((tmp_path / "out" / f"seed_{seed}" / "metrics.json").read_text())
        assert metrics["outer_iterations"] == 6 and metrics["seed"] == seed
        assert metrics["version"].startswith("0.1.0")
        assert metrics["certificate"]["xi_norm"] >= 0
        assert 0 <= metrics["theoretical"]["k"] < 6


@pytest.mark.parametrize("solver", ["agd_sbcd", "dca", "prox_dca"])
def test_reruns_are_byte_identical(tmp_path, solver):
    extra = "strict = no" if solver == "agd_sbcd" else "L_prox = 0.01"
    cfg = _pauc_config(tmp_path, solver=solver, extra=extra)
    names = ("trace.csv", "roc.csv", "metrics.json")
    assert main(["run", str(cfg)]) == 0
    first = {n: (tmp_path / "out" / "seed_1" / n).read_bytes() for n in names}
    assert main(["run", str(cfg)]) == 0
    for n in names:
        assert (tmp_path / "out" / "seed_1" / n).read_bytes() == first[n]


def test_loss_column_recomputable_from_saved_model(tmp_path):
    cfg_path = _pauc_config(tmp_path)
    assert main(["run", str(cfg_path)]) == 0
    cfg = load_config(cfg_path)
    data = build_dataset(cfg)
    r = resolve_range(cfg, data)
    metrics = json.loads((tmp_path / "out" / "seed_0" / "metrics.json").read_text())
    rows = _read_csv(tmp_path / "out" / "seed_0" / "trace.csv")
    w = np.array(metrics["final"]["model"])
    assert dc_objective(w, data, r, normalized=True) == pytest.approx(float(rows[-1][2]),
                                                                       abs=1e-9)
    best = metrics["best"]
    assert dc_objective(np.array(best["model"]), data, r, normalized=True) == \
        pytest.approx(float(rows[best["k"] + 1][2]), abs=1e-9)


def test_config_echo_reruns_identically(tmp_path):
    data_path = tmp_path / "train.svm"
    write_binary_libsvm(data_path, generate_synthetic(SyntheticSpec(n_pos=15, n_neg=60, seed=2)))
    text = PAUC_CONFIG.format(solver="dca", out="first", extra="").replace(
        "synthetic = yes\nn_pos = 20\nn_neg = 100\nseed = 1", "libsvm = train.svm")
    assert main(["run", str(_write(tmp_path, "a.ini", text))]) == 0
    echo = json.loads((tmp_path / "first" / "seed_0" / "metrics.json").read_text())["config"]
    echo["experiment"]["out"] = str(tmp_path / "second")
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(echo)
    sub = tmp_path / "elsewhere"
    sub.mkdir()
    with open(sub / "echo.ini", "w") as fh:
        cp.write(fh)
    assert main(["run", str(sub / "echo.ini")]) == 0
    for seed in (0, 1):
        for n in ("trace.csv", "roc.csv"):
            assert (tmp_path / "first" / f"seed_{seed}" / n).read_bytes() == \
                (tmp_path / "second" / f"seed_{seed}" / n).read_bytes()


def test_sorr_run_reduces_loss(tmp_path):
    assert main(["run", str(_write(tmp_path, "sorr.ini", SORR_CONFIG))]) == 0
    metrics = json.loads((tmp_path / "out" / "seed_0" / "metrics.json").read_text())
    assert metrics["final"]["normalized_loss"] < metrics["initial"]["normalized_loss"]
    # pAUC is undefined for SoRR and is stored as null, keeping the JSON standard
    assert metrics["final"]["train_pauc"] is None
    rows = _read_csv(tmp_path / "out" / "seed_0" / "trace.csv")
    assert len(rows) == 21 and rows[1][3] == "nan"


def test_compare_two_solvers(tmp_path, capsys):
    a = _pauc_config(tmp_path, "a.ini", extra="strict = no\nI = 2")
    b = _pauc_config(tmp_path, "b.ini", solver="dca", extra="I = 2")
    out = tmp_path / "cmp"
    assert main(["compare", str(a), str(b), "--out", str(out)]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[0].split()[0] == "solver"
    assert [line.split()[0] for line in table[1:3]] == ["agd_sbcd", "dca"]
    rows = _read_csv(out / "compare.csv")
    assert tuple(rows[0]) == ("solver", "seed") + TRACE_COLUMNS
    assert len(rows) == 1 + 2 * 2 * 6
    assert (out / "agd_sbcd" / "seed_0" / "trace.csv").exists()
    assert (out / "dca" / "seed_1" / "metrics.json").exists()

    # one epoch-equivalent = N+ N- / (I J) inner iterations for both solvers
    T = 10 * (np.arange(6) + 1) ** 2
    per_pass = 2 * 5 / (20 * 100)
    expected = {"agd_sbcd": np.cumsum(2 * T * per_pass), "dca": np.cumsum(1.0 + T * per_pass)}
    for solver in expected:
        for seed in ("0", "1"):
            ep = [float(r[3]) for r in rows[1:] if r[0] == solver and r[1] == seed]
            assert np.allclose(ep, expected[solver], rtol=0, atol=1e-12)


def test_sorr_epoch_accounting(tmp_path):
    assert main(["run", str(_write(tmp_path, "sorr.ini", SORR_CONFIG))]) == 0
    rows = _read_csv(tmp_path / "out" / "seed_0" / "trace.csv")
    T = 20 * (np.arange(20) + 1) ** 2
    # one epoch-equivalent = N / J inner iterations, two solves per outer step
    assert np.allclose([float(r[1]) for r in rows[1:]], np.cumsum(2 * T * 10 / 200), atol=1e-12)


def test_compare_rejects_mismatched_datasets(tmp_path, capsys):
    a = _pauc_config(tmp_path, "a.ini")
    b = _write(tmp_path, "b.ini", PAUC_CONFIG.format(solver="dca", out="o", extra="")
               .replace("n_neg = 100", "n_neg = 90"))
    assert main(["compare", str(a), str(b), "--out", str(tmp_path / "c")]) == 2
    assert "share" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        compare([load_config(a)], tmp_path / "c")


def test_missing_dataset_section_exit_2(tmp_path, capsys):
    text = "[experiment]\ntask = pauc\n[range]\nm = 1\nn = 5\n"
    assert main(["run", str(_write(tmp_path, "bad.ini", text))]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "missing [dataset]" in err[0]


def test_missing_files_exit_codes(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.ini")]) == 2
    text = PAUC_CONFIG.format(solver="dca", out="o", extra="").replace(
        "synthetic = yes\nn_pos = 20\nn_neg = 100\nseed = 1", "libsvm = absent.svm")
    assert main(["run", str(_write(tmp_path, "a.ini", text))]) == 3


def test_bad_data_exit_3(tmp_path, capsys):
    (tmp_path / "bad.svm").write_text("+1 1:0.5 2:1.0\n-1 1:zero\n")
    text = PAUC_CONFIG.format(solver="dca", out="o", extra="").replace(
        "synthetic = yes\nn_pos = 20\nn_neg = 100\nseed = 1", "libsvm = bad.svm")
    assert main(["run", str(_write(tmp_path, "a.ini", text))]) == 3
    err = capsys.readouterr().err
    assert "bad.svm:2" in err and len(err.strip().splitlines()) == 1


def test_divergence_exit_4(tmp_path, capsys):
    text = SORR_CONFIG.replace("strict = no", "strict = no\ngamma = 1e300")
    assert main(["run", str(_write(tmp_path, "div.ini", text))]) == 4
    assert "outer iteration" in capsys.readouterr().err


@pytest.mark.parametrize("bad", [
    ("solver = agd_sbcd", "solver = sgd"),
    ("K = 6", "K = 6.5"),
    ("K = 6", "K = 6\nwarmup = 3"),
    ("beta = 0.5", "beta = 0.5\nm = 3"),
    ("[range]", "[extras]\nx = 1\n[range]"),
    ("synthetic = yes", "synthetic = yes\nlibsvm = x.svm"),
    ("J = 5", "J = 500"),
])
def test_config_errors_exit_2(tmp_path, bad):
    text = PAUC_CONFIG.format(solver="agd_sbcd", out="o", extra="strict = no").replace(*bad)
    assert main(["run", str(_write(tmp_path, "bad.ini", text))]) == 2


def test_overrides(tmp_path):
    cfg = _pauc_config(tmp_path)
    out = tmp_path / "elsewhere"
    assert main(["run", str(cfg), "--seed", "7", "--epochs", "0.5", "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["seed_7"]
    rows = _read_csv(out / "seed_7" / "trace.csv")
    epochs = [float(r[1]) for r in rows[1:]]
    assert epochs[-1] >= 0.5 and all(e < 0.5 for e in epochs[:-1])
    metrics = json.loads((out / "seed_7" / "metrics.json").read_text())
    assert metrics["config"]["experiment"]["epochs"] == "0.5"
    assert main(["run", str(cfg), "--epochs", "-1"]) == 2


def test_wall_time_column(tmp_path):
    cfg = _pauc_config(tmp_path, extra="strict = no\n[output]\nwall_time = yes")
    assert main(["run", str(cfg)]) == 0
    rows = _read_csv(tmp_path / "out" / "seed_0" / "trace.csv")
    assert all(float(r[5]) >= 0 for r in rows[1:])
    metrics = json.loads((tmp_path / "out" / "seed_0" / "metrics.json").read_text())
    assert metrics["wall_ms_total"] >= 0


def test_parse_config_range_forms():
    text = PAUC_CONFIG.format(solver="agd_sbcd", out="o", extra="")
    cfg = parse_config(text.replace("alpha = 0.1\nbeta = 0.5", "m = 10\nn = 50"))
    assert cfg.range == {"m": 10, "n": 50}
    data = build_dataset(cfg)
    r = resolve_range(cfg, data)
    assert (r.m, r.n) == (10, 50)
    cfg = parse_config(text)
    r = resolve_range(cfg, build_dataset(cfg))
    assert (r.m, r.n) == (10, 50)
    with pytest.raises(ConfigError):
        parse_config(SORR_CONFIG.replace("m = 10\nn = 60", "alpha = 0.1\nbeta = 0.2"))


def test_module_entry_point(tmp_path):
    cfg = _pauc_config(tmp_path, solver="dca", extra="")
    proc = subprocess.run([sys.executable, "-m", "paucopt.cli", "run", str(cfg), "--seed", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "median final train pAUC" in proc.stdout
