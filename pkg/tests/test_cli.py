import hashlib
import json

import pytest

from spgcl.cli import run

SMALL = {"embed": 16, "batch": 64, "epochs": 3, "k_neg": 20}


def payload(path):
    env = json.loads(path.read_text())
    del env["timing"]
    return env


def synth(tmp_path, n=120, seed=0, extra=()):
    assert run(["--out-dir", str(tmp_path), "synth", "--n", str(n), "--mean-degree", "8",
                "--features", "8", "--seed", str(seed), *extra]) == 0


def write_config(tmp_path, **kw):
    (tmp_path / "cfg.json").write_text(json.dumps({**SMALL, **kw}))


INPUTS = ["--graph", "graph.tsv", "--features", "features.csv", "--labels", "labels.txt"]


def test_verify_lemma1(tmp_path):
    assert run(["--out-dir", str(tmp_path), "verify", "--suite", "lemma1", "--seed", "7"]) == 0
    res = payload(tmp_path / "verify_report.json")["results"]
    assert res["max_residual"] <= 1e-8 and res["passed"]


def test_missing_graph_is_io_error(tmp_path, capsys):
    code = run(["--out-dir", str(tmp_path), "spectral", "--graph", "nope.tsv", "--aug-kind", "edge_drop"])
    assert code == 2 and capsys.readouterr().err.startswith("E_IO")


def test_pipeline_reports_accuracy(tmp_path):
    synth(tmp_path)
    write_config(tmp_path)
    base = ["--out-dir", str(tmp_path)]
    assert run(base + ["train", *INPUTS, "--config", "cfg.json"]) == 0
    assert (tmp_path / "checkpoint.bin").exists()
    lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
    assert len(lines) == 3 and all("loss" in json.loads(ln) for ln in lines)
    assert run(base + ["eval", *INPUTS, "--repeats", "2", "--epochs", "100"]) == 0
    res = payload(tmp_path / "result.json")["results"]
    assert 0.0 <= res["accuracy"] <= 1.0


def test_error_prefixes_are_distinct(tmp_path, capsys):
    base = ["--out-dir", str(tmp_path)]
    (tmp_path / "bad.tsv").write_text("0\tx\n")
    (tmp_path / "feat.csv").write_text("1,2\n3,4\n")
    (tmp_path / "g.tsv").write_text("0\t5\n")
    (tmp_path / "y.txt").write_text("0\n1\n")
    (tmp_path / "cfg.json").write_text(json.dumps({"bogus": 1}))
    cases = [
        (["spectral", "--bogus-flag"], 2, "E_USAGE"),
        (["spectral", "--graph", "bad.tsv", "--aug-kind", "edge_drop"], 1, "E_PARSE"),
        (["train", "--graph", "g.tsv", "--features", "feat.csv"], 1, "E_SHAPE"),
        (["train", "--graph", "g.tsv", "--features", "feat.csv", "--config", "cfg.json"], 1, "E_CONFIG"),
        (["spectral", "--graph", "missing.tsv", "--aug-kind", "edge_drop"], 2, "E_IO"),
    ]
    seen = set()
    for argv, code, prefix in cases:
        assert run(base + argv) == code, argv
        err = capsys.readouterr().err
        assert err.startswith(prefix), (argv, err)
        seen.add(err.split(":")[0])
    assert len(seen) == len(cases)


def test_env_seed_overrides_flag(tmp_path, monkeypatch):
    synth(tmp_path / "a", seed=5)
    monkeypatch.setenv("SPGCL_SEED", "5")
    synth(tmp_path / "b", seed=99)
    a, b = payload(tmp_path / "a/synth_report.json"), payload(tmp_path / "b/synth_report.json")
    assert a == b and a["config"]["seed"] == 5
    assert (tmp_path / "a/graph.tsv").read_bytes() == (tmp_path / "b/graph.tsv").read_bytes()


def test_env_seed_overrides_config_file(tmp_path, monkeypatch):
    synth(tmp_path)
    write_config(tmp_path, seed=3)
    monkeypatch.setenv("SPGCL_SEED", "11")
    assert run(["--out-dir", str(tmp_path), "train", *INPUTS, "--config", "cfg.json"]) == 0
    assert payload(tmp_path / "train_report.json")["config"]["seed"] == 11


def test_bad_env_seed_is_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SPGCL_SEED", "abc")
    assert run(["--out-dir", str(tmp_path), "verify", "--suite", "lemma1"]) == 1
    assert capsys.readouterr().err.startswith("E_CONFIG")


def test_eval_leaves_checkpoint_untouched(tmp_path):
    synth(tmp_path)
    write_config(tmp_path)
    base = ["--out-dir", str(tmp_path)]
    assert run(base + ["train", *INPUTS, "--config", "cfg.json"]) == 0
    before = hashlib.sha256((tmp_path / "checkpoint.bin").read_bytes()).hexdigest()
    assert run(base + ["eval", *INPUTS, "--repeats", "1", "--epochs", "50"]) == 0
    assert hashlib.sha256((tmp_path / "checkpoint.bin").read_bytes()).hexdigest() == before


def test_single_value_ablation_equals_train_then_eval(tmp_path):
    synth(tmp_path)
    write_config(tmp_path, seed=4)
    base = ["--out-dir", str(tmp_path)]
    assert run(base + ["ablate", *INPUTS, "--config", "cfg.json", "--param", "k_pos", "--values", "5",
                       "--repeats", "1", "--epochs", "100"]) == 0
    entry = payload(tmp_path / "ablate_report.json")["results"]["entries"][0]
    assert run(base + ["train", *INPUTS, "--config", "cfg.json"]) == 0
    assert run(base + ["eval", *INPUTS, "--repeats", "1", "--epochs", "100", "--seed", "4"]) == 0
    assert entry["accuracies"] == [payload(tmp_path / "result.json")["results"]["accuracy"]]


def test_hops_sweep_has_one_entry_per_value(tmp_path):
    synth(tmp_path)
    write_config(tmp_path, epochs=1)
    assert run(["--out-dir", str(tmp_path), "ablate", *INPUTS, "--config", "cfg.json", "--param", "T",
                "--values", "1,2,3", "--repeats", "1", "--epochs", "50"]) == 0
    res = payload(tmp_path / "ablate_report.json")["results"]
    assert [e["value"] for e in res["entries"]] == [1, 2, 3]


@pytest.mark.slow
def test_positive_count_sweep_is_insensitive(tmp_path):
    synth(tmp_path, n=400, extra=["--separation", "2.5", "--homophily", "0.2"])
    write_config(tmp_path, embed=32, batch=128, epochs=15, k_neg=50)
    assert run(["--out-dir", str(tmp_path), "ablate", *INPUTS, "--config", "cfg.json", "--param", "k_pos",
                "--values", "2,4,6,8,10,12,14,16,18", "--repeats", "3", "--epochs", "300"]) == 0
    res = payload(tmp_path / "ablate_report.json")["results"]
    print(res["spread"], [e["accuracy_mean"] for e in res["entries"]])
    assert res["spread"] <= 0.05
