"""Command-line surface: subcommands, exit codes, artifact formats."""

import json

import numpy as np
import pytest

from linkgp import load_split_manifest
from linkgp.cli import main
from linkgp.reports import COVARIANCE_HEADER, DIRICHLET_HEADER


def write_workspace(tmp_path, n=20, p=0.25, dim=3, seed=0):
    """Edge and feature files for a seeded random graph with >= 10 edges."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    assert len(edges) >= 10
    epath = tmp_path / "edges.txt"
    epath.write_text(
        "".join(f"n{i} n{j}\n" for i, j in edges), encoding="utf-8"
    )
    fpath = tmp_path / "features.txt"
    rows = rng.standard_normal((n, dim))
    fpath.write_text(
        "".join(
            f"n{i} " + " ".join(repr(float(v)) for v in row) + "\n"
            for i, row in enumerate(rows)
        ),
        encoding="utf-8",
    )
    return str(epath), str(fpath)


def run_pipeline(tmp_path, seed=0, max_epochs=1):
    """split + short train, returning every artifact path."""
    edges, features = write_workspace(tmp_path, seed=seed)
    split = str(tmp_path / "split.json")
    ckpt = str(tmp_path / "model.json")
    assert main(["split", "--edges", edges, "--out", split,
                 "--seed", str(seed)]) == 0
    assert main(["train", "--edges", edges, "--features", features,
                 "--checkpoint", ckpt, "--split", split,
                 "--seed", str(seed), "--max-epochs", str(max_epochs),
                 "--batch-size", "16", "--inducing-nodes", "5",
                 "--inducing-edges", "6"]) == 0
    return edges, features, split, ckpt


class TestStats:
    def test_single_line_summary(self, tmp_path, capsys):
        epath = tmp_path / "edges.txt"
        epath.write_text("".join(f"c l{i}\n" for i in range(4)))
        assert main(["stats", "--edges", str(epath)]) == 0
        assert capsys.readouterr().out == "5 nodes, 4 edges, avg degree 1.60\n"

    def test_formatting_at_benchmark_scale(self, tmp_path, capsys):
        pairs = ((i, j) for i in range(332) for j in range(i + 1, 332))
        lines = [f"v{i} v{j}" for (i, j), _ in zip(pairs, range(2126))]
        epath = tmp_path / "edges.txt"
        epath.write_text("\n".join(lines) + "\n")
        assert main(["stats", "--edges", str(epath)]) == 0
        out = capsys.readouterr().out
        assert out == "332 nodes, 2126 edges, avg degree 12.81\n"


class TestExitCodes:
    def test_usage_errors_exit_1(self, tmp_path):
        edges, features = write_workspace(tmp_path)
        assert main([]) == 1
        assert main(["no-such-command"]) == 1
        assert main(["train", "--edges", edges, "--features", features]) == 1
        assert main(["train", "--edges", edges, "--features", features,
                     "--checkpoint", str(tmp_path / "m.json"),
                     "--lambda-init", "a,b"]) == 1

    def test_predict_needs_pairs_or_split(self, tmp_path, capsys):
        edges, features, split, ckpt = run_pipeline(tmp_path)
        code = main(["predict", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt])
        capsys.readouterr()
        assert code == 1

    def test_data_errors_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("a a\n")
        assert main(["stats", "--edges", str(bad)]) == 2
        assert "data error" in capsys.readouterr().err
        assert main(["stats", "--edges", str(tmp_path / "missing.txt")]) == 2

    def test_numerical_failure_exit_3(self, capsys):
        assert main(["gradcheck", "--tol", "0"]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_gradcheck_passes_at_default_tolerance(self, capsys):
        assert main(["gradcheck", "--seed", "1"]) == 0
        out = capsys.readouterr().out
        assert "max relative error" in out


class TestSplitCommand:
    def test_writes_loadable_manifest(self, tmp_path, capsys):
        edges, _ = write_workspace(tmp_path)
        out = tmp_path / "split.json"
        assert main(["split", "--edges", edges, "--out", str(out),
                     "--seed", "3", "--test-fraction", "0.2"]) == 0
        doc = load_split_manifest(out)
        assert doc["seed"] == 3
        assert len(doc["test_positives"]) == len(doc["test_negatives"])
        capsys.readouterr()


class TestTrainCommand:
    def test_zero_epochs_writes_initialized_checkpoint(self, tmp_path, capsys):
        edges, features = write_workspace(tmp_path)
        ckpt = tmp_path / "model.json"
        assert main(["train", "--edges", edges, "--features", features,
                     "--checkpoint", str(ckpt), "--max-epochs", "0"]) == 0
        doc = json.loads(ckpt.read_text())
        assert doc["format_version"] == 1
        assert doc["final_elbo"] is None
        assert doc["convolution"]["weights"] == pytest.approx([0.5, 0.3])
        capsys.readouterr()

    def test_trains_without_split_on_all_edges(self, tmp_path, capsys):
        edges, features = write_workspace(tmp_path)
        ckpt = tmp_path / "model.json"
        assert main(["train", "--edges", edges, "--features", features,
                     "--checkpoint", str(ckpt), "--max-epochs", "1",
                     "--batch-size", "32", "--inducing-nodes", "5",
                     "--inducing-edges", "6"]) == 0
        assert "1 epochs" in capsys.readouterr().out

    def test_custom_initialization_flags_land_in_checkpoint(self, tmp_path,
                                                            capsys):
        edges, features = write_workspace(tmp_path)
        ckpt = tmp_path / "model.json"
        assert main(["train", "--edges", edges, "--features", features,
                     "--checkpoint", str(ckpt), "--max-epochs", "0",
                     "--K", "3", "--lambda-init", "0.9,0.8,0.7",
                     "--lengthscale-init", "2.0"]) == 0
        doc = json.loads(ckpt.read_text())
        assert doc["convolution"]["depth"] == 3
        assert doc["convolution"]["weights"] == pytest.approx([0.9, 0.8, 0.7])
        assert doc["kernel"]["lengthscales"] == pytest.approx([2.0] * 3)
        capsys.readouterr()


class TestPredictCommand:
    def test_scores_split_test_pairs_to_stdout(self, tmp_path, capsys):
        edges, features, split, ckpt = run_pipeline(tmp_path)
        capsys.readouterr()
        assert main(["predict", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt, "--split", split]) == 0
        lines = capsys.readouterr().out.splitlines()
        n_test = 2 * len(load_split_manifest(split)["test_positives"])
        assert lines[0] == "token_a,token_b,score"
        assert len(lines) == 1 + n_test
        for line in lines[1:]:
            a, b, s = line.split(",")
            assert a.startswith("n") and b.startswith("n")
            assert 0.0 <= float(s) <= 1.0

    def test_scores_explicit_pair_file(self, tmp_path, capsys):
        edges, features, split, ckpt = run_pipeline(tmp_path)
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("n0 n1\nn2 n7\n")
        out = tmp_path / "scores.csv"
        assert main(["predict", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt, "--split", split,
                     "--pairs", str(pairs), "--out", str(out)]) == 0
        capsys.readouterr()
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("n0,n1,")

    def test_score_mode_flag_changes_values(self, tmp_path, capsys):
        edges, features, split, ckpt = run_pipeline(tmp_path, max_epochs=2)
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("n0 n1\n")
        outs = []
        for mode in ("expected_probability", "mean_sigmoid"):
            out = tmp_path / f"{mode}.csv"
            assert main(["predict", "--edges", edges, "--features", features,
                         "--checkpoint", ckpt, "--split", split,
                         "--pairs", str(pairs), "--score-mode", mode,
                         "--out", str(out)]) == 0
            outs.append(float(out.read_text().splitlines()[1].split(",")[2]))
        capsys.readouterr()
        assert outs[0] != outs[1]


class TestEvaluateCommand:
    def test_json_report_keys_and_determinism(self, tmp_path, capsys):
        edges, features, split, ckpt = run_pipeline(tmp_path, seed=4)
        capsys.readouterr()
        out1, out2 = str(tmp_path / "e1.json"), str(tmp_path / "e2.json")
        assert main(["evaluate", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt, "--split", split,
                     "--out", out1]) == 0
        stdout = capsys.readouterr().out
        doc = json.loads(stdout)
        assert set(doc) == {"auc", "ap", "n_test", "elbo_final", "seed"}
        assert 0.0 <= doc["auc"] <= 1.0
        assert 0.0 < doc["ap"] <= 1.0
        assert doc["seed"] == 4
        assert json.loads(open(out1).read()) == doc
        assert main(["evaluate", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt, "--split", split,
                     "--out", out2]) == 0
        capsys.readouterr()
        assert open(out1, "rb").read() == open(out2, "rb").read()

    def test_requires_split_flag(self, tmp_path):
        edges, features, split, ckpt = run_pipeline(tmp_path)
        assert main(["evaluate", "--edges", edges, "--features", features,
                     "--checkpoint", ckpt]) == 1


class TestAnalyzeCommands:
    def test_covariance_report(self, tmp_path, capsys):
        edges, features = write_workspace(tmp_path)
        out = tmp_path / "profile.csv"
        assert main(["analyze-covariance", "--edges", edges,
                     "--features", features, "--out", str(out),
                     "--k-max", "2"]) == 0
        capsys.readouterr()
        lines = out.read_text().splitlines()
        assert lines[0] == COVARIANCE_HEADER
        assert len(lines) == 1 + 3 * 5  # K in 0..2, d in 1..5

    def test_covariance_unknown_center_exits_2(self, tmp_path, capsys):
        edges, features = write_workspace(tmp_path)
        assert main(["analyze-covariance", "--edges", edges,
                     "--features", features, "--out",
                     str(tmp_path / "p.csv"), "--center", "ghost"]) == 2
        capsys.readouterr()

    def test_dirichlet_report_deterministic(self, tmp_path, capsys):
        edges, features = write_workspace(tmp_path)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            assert main(["analyze-dirichlet", "--edges", edges,
                         "--features", features, "--out", str(out),
                         "--k-max", "2", "--samples", "100",
                         "--seed", "5"]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == DIRICHLET_HEADER


class TestEndToEndDeterminism:
    def test_identical_seeds_identical_artifacts(self, tmp_path, capsys):
        runs = []
        for name in ("one", "two"):
            base = tmp_path / name
            base.mkdir()
            runs.append(run_pipeline(base, seed=9, max_epochs=2))
        capsys.readouterr()
        (_, _, split1, ckpt1), (_, _, split2, ckpt2) = runs
        assert open(split1, "rb").read() == open(split2, "rb").read()
        assert open(ckpt1, "rb").read() == open(ckpt2, "rb").read()
