import json

import numpy as np
import pytest

from hdphmm_lt.cli import main
from hdphmm_lt.dataio import read_matrix_csv


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert main(["simulate", "hdp-hmm", "--out", str(out), "--steps", "80", "--seed", "2"]) == 0
    return out


def write_config(path, data_dir, **extra):
    layout = json.loads((data_dir / "dataset.json").read_text())
    layout = {k: ([str(data_dir / f) for f in v] if isinstance(v, list) else str(data_dir / v))
            for k, v in layout.items()}
    cfg = {"variant": "lt", "hyper": {"J": 5}, "iterations": 12, "burn_in": 4, "thin": 2,
           "chains": 2, "data": layout, **extra}
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_cocktail(tmp_path):
    out = tmp_path / "cocktail"
    assert main(["simulate", "cocktail", "--out", str(out), "--speakers", "6", "--groups", "2",
                 "--steps", "100", "--channels", "8"]) == 0
    assert read_matrix_csv(out / "observations.csv").shape == (100, 8)
    assert read_matrix_csv(out / "truth.csv").shape == (100, 6)
    assert read_matrix_csv(out / "W.csv").shape == (7, 8)


def test_simulate_symbols(tmp_path):
    out = tmp_path / "sym"
    assert main(["simulate", "hdp-hmm", "--out", str(out), "--emission", "categorical",
                 "--sequences", "3", "--steps", "30"]) == 0
    assert len((out / "symbols.txt").read_text().splitlines()) == 3


def test_fit_and_evaluate(tmp_path, dataset, capsys):
    cfg = write_config(tmp_path / "cfg.json", dataset)
    out = tmp_path / "fit"
    assert main(["fit", "--config", str(cfg), "--out", str(out), "--seed", "1"]) == 0
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0].startswith("chain,iteration,log_joint,lambda")
    assert len(trace) == 1 + 2 * 6
    metrics = json.loads((out / "metrics.json").read_text())
    assert len(metrics["per_chain"]) == 2 and 0 <= metrics["averaged_matrix_f1"] <= 1
    assert (out / "checkpoint.bin").exists()

    assert main(["evaluate", "--pred", str(out / "state_matrix_mean.csv"),
                 "--truth", str(dataset / "truth_0.csv"), "--out", str(tmp_path / "ev")]) == 0
    ev = json.loads((tmp_path / "ev" / "metrics.json").read_text())
    assert np.isclose(ev["f1"], metrics["averaged_matrix_f1"])


def test_fit_is_deterministic_and_resumable(tmp_path, dataset):
    cfg = write_config(tmp_path / "cfg.json", dataset)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["fit", "--config", str(cfg), "--out", str(a)])
    main(["fit", "--config", str(cfg), "--out", str(b)])
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    main(["fit", "--config", str(cfg), "--out", str(c), "--iters", "6"])
    main(["fit", "--config", str(cfg), "--out", str(c), "--resume", str(c / "checkpoint.bin")])
    assert (a / "trace.csv").read_bytes() == (c / "trace.csv").read_bytes()
    assert (a / "state_matrix_mean.csv").read_bytes() == (c / "state_matrix_mean.csv").read_bytes()


def test_validate_oracles(tmp_path):
    assert main(["validate", "--suite", "oracles", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "validation.json").read_text())
    assert report["oracles"]["passed"]
    assert "PASS" in (tmp_path / "validation.txt").read_text()


def test_errors_exit_with_code_two(tmp_path, dataset, capsys):
    assert main(["fit", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"variant": "lt"}))
    assert main(["fit", "--config", str(bad), "--out", str(tmp_path)]) == 2
    cfg = write_config(tmp_path / "cfg.json", dataset, variant="hsmm")
    assert main(["fit", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["validate", "--suite", "geweke", "--samples", "0"]) == 2
    assert "error" in capsys.readouterr().err.lower()
