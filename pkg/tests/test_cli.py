import csv

import numpy as np
import pytest

from sgmvcg.cli import main, parse_args, read_config
from sgmvcg.data import load_libsvm
from sgmvcg.optimize import TRACE_COLUMNS


def read_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.reader(lines))


def test_synth_then_train(tmp_path, capsys):
    data = tmp_path / "toy.libsvm"
    assert main(["synth", "--n", "120", "--d", "4", "--seed", "2", "--output", str(data),
                 "--w-true", str(tmp_path / "w.txt")]) == 0
    ds = load_libsvm(data)
    assert (ds.n, ds.d) == (120, 4)
    assert len((tmp_path / "w.txt").read_text().split()) == 4
    trace = tmp_path / "t.csv"
    rc = main(["train", "--data", str(data), "--algorithm", "alg2", "--gamma", "one",
               "--outer", "2", "--inner", "5", "--option", "2", "--trace", str(trace),
               "--coef", str(tmp_path / "coef.txt"), "--scale", "maxmin"])
    assert rc == 0
    rows = read_rows(trace)
    assert tuple(rows[0]) == TRACE_COLUMNS and len(rows) == 12
    assert "CGVR" in capsys.readouterr().out


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nalgorithm = alg2\nlambda=0.25\nbatch-size = 8\niters=7\n")
    args = parse_args(["train", "--config", str(cfg), "--iters", "3"])
    assert args.algorithm == "alg2" and args.lam == 0.25 and args.batch_size == 8
    assert args.iters == 3


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense line\n")
    with pytest.raises(ValueError, match="1"):
        read_config(bad)
    unknown = tmp_path / "unknown.cfg"
    unknown.write_text("colour = red\n")
    with pytest.raises(SystemExit):
        parse_args(["train", "--config", str(unknown)])
    choice = tmp_path / "choice.cfg"
    choice.write_text("gamma = half\n")
    with pytest.raises(SystemExit):
        parse_args(["train", "--config", str(choice)])


def test_variance_command(tmp_path):
    assert main(["variance-exp", "--n", "300", "--d", "4", "--checkpoints", "3",
                 "--batches", "5", "--out-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "variance.csv")
    assert rows[0] == ["k", "var_gamma_star", "var_gamma_one"]
    assert (tmp_path / "variance.svg").exists()


def test_compare_command(tmp_path, capsys):
    data = tmp_path / "toy.libsvm"
    main(["synth", "--n", "150", "--d", "3", "--output", str(data)])
    rc = main(["compare", "--data", str(data), "--seeds", "2", "--iters", "10", "--inner", "5",
               "--out-dir", str(tmp_path / "rep"), "--threads", "2"])
    assert rc == 0
    rows = read_rows(tmp_path / "rep" / "toy_curves.csv")
    assert rows[0] == ["iter", "SCGA", "Algorithm1", "CGVR", "Algorithm2"]
    summary = read_rows(tmp_path / "rep" / "summary.csv")
    assert len(summary) == 1 + 4 * 2
    assert "runtime ratio" in capsys.readouterr().out


def test_bad_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.libsvm"
    bad.write_text("1 2:1 1:1\n")
    assert main(["train", "--data", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_compare_needs_data(tmp_path):
    with pytest.raises(SystemExit):
        main(["compare", "--out-dir", str(tmp_path)])
