import json
import subprocess
import sys

import pytest

from tripssqp.cli import main
from tripssqp.harness import ResultTable


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text("problems: [quad_box, circle_linear]\nnoise_levels: [1.0e-2]\n"
                    "runs_per_instance: 2\nbudget_limit: 15\n"
                    "methods: [[adaptive, Id], [fixed, Id]]\n")
    return str(path)


def test_solve_writes_json_trace(tmp_path, tiny_config, capsys):
    out = tmp_path / "trace.json"
    assert main(["solve", "--problem", "quad_box", "--config", tiny_config, "--out",
                 str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["problem"] == "quad_box"
    assert len(doc["iterations"]["k"]) == 15
    assert "status=budget-exhausted" in capsys.readouterr().out


def test_solve_writes_csv_trace(tmp_path, tiny_config):
    out = tmp_path / "trace.csv"
    assert main(["solve", "--problem", "circle_linear", "--config", tiny_config, "--out",
                 str(out)]) == 0
    assert out.read_text().startswith("# tripssqp trace schema v1\n")


def test_bench_profile_summary(tmp_path, tiny_config):
    outdir = tmp_path / "bench"
    assert main(["bench", "--config", tiny_config, "--out", str(outdir)]) == 0
    names = {p.name for p in outdir.iterdir()}
    assert {"results.csv", "summary.csv", "config.json", "profile_noise0.01.csv"} <= names
    table = ResultTable.from_csv(str(outdir / "results.csv"))
    assert len(table) == 2 * 2 * 2
    prof = tmp_path / "prof.csv"
    assert main(["profile", "--in", str(outdir / "results.csv"), "--out", str(prof),
                 "--points", "4", "--min-budget", "1", "--max-budget", "1000"]) == 0
    lines = prof.read_text().splitlines()
    assert lines[1] == "budget,adaptive-Id,fixed-Id" and len(lines) == 6
    summ = tmp_path / "summary.csv"
    assert main(["summary", "--in", str(outdir / "results.csv"), "--out", str(summ)]) == 0
    assert "adaptive-Id" in summ.read_text()


def test_profile_needs_noise_for_mixed_tables(tmp_path):
    src = tmp_path / "r.csv"
    src.write_text("problem,method,noise,seed,final_rel_kkt,iterations,budget_used,status,"
                   "budget_to_converge\na,m,0.1,0,1e-5,3,10.0,converged,10.0\n"
                   "a,m,1.0,0,1e-5,3,10.0,converged,10.0\n")
    assert main(["profile", "--in", str(src), "--out", str(tmp_path / "p.csv")]) == 2
    assert main(["profile", "--in", str(src), "--out", str(tmp_path / "p.csv"),
                 "--noise", "1.0"]) == 0


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("noise_level: [1]\n")
    assert main(["bench", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["summary", "--in", str(tmp_path / "missing.csv"), "--out", "x"]) == 2


def test_dataset_errors_exit_3(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("a,label\n1,1\n2,1\n")
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"experiment: logistic\nlogistic:\n  dataset: csv\n  csv_path: {data}\n")
    assert main(["solve", "--problem", "logistic", "--config", str(cfg)]) == 3


def test_failed_runs_exit_4(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("problems: [quad_box]\nnoise_levels: [0.0]\nruns_per_instance: 1\n"
                   "budget_limit: 50\nmethods: [[fixed, Id]]\n"
                   "solver:\n  fs_threshold: negated\n")
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tripssqp", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    assert "bench" in res.stdout


def test_solve_seed_changes_the_run(tmp_path, tiny_config):
    docs = []
    for seed in ("1", "1", "2"):
        out = tmp_path / f"t{len(docs)}.json"
        main(["solve", "--problem", "quad_box", "--config", tiny_config, "--seed", seed,
              "--out", str(out)])
        docs.append(json.loads(out.read_text())["iterations"])
    assert docs[0] == docs[1]
    assert docs[0] != docs[2]


def test_bench_output_dir_from_config(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(f"problems: [quad_box]\nruns_per_instance: 1\nbudget_limit: 5\n"
                   f"output_dir: {tmp_path / 'from_cfg'}\n")
    assert main(["bench", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg" / "results.csv").exists()
    assert main(["bench"]) == 2
