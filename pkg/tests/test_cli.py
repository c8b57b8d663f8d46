import json

import numpy as np
import pandas as pd
import pytest

from vqtk.cli import main
from vqtk.core.formats import read_codebook, write_codebook, write_feature_map, write_token_grid
from vqtk.core.types import Codebook, FeatureMap, TokenGrid
from vqtk.quant.fsq import fsq_implied_codebook, parse_levels


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def report(capsys, *argv):
    code, out, err = run(capsys, "--json", *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def codebook_file(tmp_path, capsys, feature_dir):
    path = tmp_path / "b.cbok"
    report(capsys, "--seed", 1, "build-codebook", "--method", "cluster", "--k", 16, "-i", feature_dir, "-o", path)
    return path


def test_build_codebook_writes_file_and_manifest(tmp_path, capsys, codebook_file):
    assert read_codebook(codebook_file).size == 16
    manifest = json.loads((tmp_path / "b.cbok.manifest.json").read_text())
    assert manifest["command"] == "build-codebook"
    assert manifest["seed"] == 1
    assert manifest["params"]["method"] == "cluster"
    assert manifest["results"]["size"] == 16
    assert manifest["results"]["inertia_trace"]


@pytest.mark.parametrize("method", ["vq-ema", "random"])
def test_other_codebook_methods(tmp_path, capsys, feature_dir, method):
    out = report(capsys, "build-codebook", "--method", method, "--k", 8, "--epochs", 2,
                 "-i", feature_dir, "-o", tmp_path / "b.cbok")
    assert (out["method"], out["size"], out["dim"]) == (method, 8, 8)


def test_missing_input_is_an_io_error(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    code, _, err = run(capsys, "build-codebook", "--k", 4, "-i", missing, "-o", tmp_path / "b.cbok")
    assert code == 5
    assert str(missing) in err


def test_usage_errors_exit_2(tmp_path, capsys, feature_dir):
    assert run(capsys, "build-codebook", "--k", 0, "-i", feature_dir, "-o", tmp_path / "b.cbok")[0] == 2
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "eval")[0] == 2
    assert run(capsys, "--threads", 0, "eval", "usage", "-t", tmp_path, "--vocab", 4)[0] == 2


def test_codebook_build_is_deterministic_across_threads(tmp_path, capsys, feature_dir):
    for name, threads in (("a.cbok", 1), ("b.cbok", 4)):
        report(capsys, "--seed", 7, "--threads", threads, "build-codebook", "--k", 12,
               "-i", feature_dir, "-o", tmp_path / name)
    assert (tmp_path / "a.cbok").read_bytes() == (tmp_path / "b.cbok").read_bytes()


def test_tokenize_detokenize_tokenize_is_idempotent(tmp_path, capsys, feature_dir, codebook_file):
    report(capsys, "tokenize", "--codebook", codebook_file, "-i", feature_dir, "-o", tmp_path / "t1")
    report(capsys, "detokenize", "--codebook", codebook_file, "-t", tmp_path / "t1", "-o", tmp_path / "d1")
    report(capsys, "tokenize", "--codebook", codebook_file, "-i", tmp_path / "d1", "-o", tmp_path / "t2")

    first = sorted(p.name for p in (tmp_path / "t1").glob("*.tokg"))
    assert first == sorted(p.name for p in (tmp_path / "t2").glob("*.tokg"))
    for name in first:
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t2" / name).read_bytes()
    assert (tmp_path / "t1" / "manifest.json").is_file()


def test_fsq_round_trip_on_the_prebounded_path(tmp_path, capsys, feature_dir):
    report(capsys, "tokenize", "--levels", "4,4,3,3,3,3,2,2", "-i", feature_dir, "-o", tmp_path / "t1")
    report(capsys, "detokenize", "--levels", "4,4,3,3,3,3,2,2", "-t", tmp_path / "t1", "-o", tmp_path / "d1")
    report(capsys, "tokenize", "--levels", "4,4,3,3,3,3,2,2", "--prebounded",
           "-i", tmp_path / "d1", "-o", tmp_path / "t2")
    for path in (tmp_path / "t1").glob("*.tokg"):
        assert path.read_bytes() == (tmp_path / "t2" / path.name).read_bytes()


def test_fsq_on_dense_inputs_uses_every_code(tmp_path, capsys):
    levels = parse_levels("8,8,5,5,5")
    grid = fsq_implied_codebook(levels).vectors.reshape(80, 100, 5)
    write_feature_map(FeatureMap.from_array(grid), tmp_path / "dense.fmap")
    out = report(capsys, "tokenize", "--levels", "8,8,5,5,5", "--prebounded",
                 "-i", tmp_path / "dense.fmap", "-o", tmp_path / "toks")
    assert out["usage_percent"] == 100.0
    assert out["vocab_size"] == 8000


def test_codebook_dim_mismatch_exits_3(tmp_path, capsys, feature_dir):
    write_codebook(Codebook.from_array(np.zeros((4, 3), dtype=np.float32)), tmp_path / "small.cbok")
    code, _, _ = run(capsys, "tokenize", "--codebook", tmp_path / "small.cbok", "-i", feature_dir, "-o", tmp_path / "t")
    assert code == 3


@pytest.fixture
def all_codes_dir(tmp_path):
    out = tmp_path / "toks"
    out.mkdir()
    codes = np.arange(8192).reshape(64, 128)
    write_token_grid(TokenGrid.from_array(codes), out / "a.tokg")
    write_token_grid(TokenGrid.from_array(codes[::-1]), out / "b.tokg")
    return out


def test_eval_usage_and_uniform_perplexity(capsys, all_codes_dir):
    usage = report(capsys, "eval", "usage", "-t", all_codes_dir, "--vocab", 8192)
    assert usage["usage_percent"] == 100.0
    ppl = report(capsys, "eval", "ppl", "--model", "uniform", "--vocab", 8192, "-t", all_codes_dir)
    assert ppl["perplexity"] == 8192.0


def test_eval_plain_report_format(capsys, all_codes_dir):
    code, out, _ = run(capsys, "eval", "usage", "-t", all_codes_dir, "--vocab", 8192)
    assert code == 0
    assert "usage_percent=100.0" in out.splitlines()


def test_eval_frechet_of_a_file_with_itself(tmp_path, capsys, feature_dir):
    out = report(capsys, "eval", "frechet", "-a", feature_dir, "-b", feature_dir)
    assert out["frechet_distance"] == pytest.approx(0.0, abs=1e-6)
    assert out["count_a"] == 16 * 64


def test_eval_rfid_and_vq_loss(tmp_path, capsys, feature_dir, codebook_file):
    rfid = report(capsys, "eval", "rfid", "-i", feature_dir, "--codebook", codebook_file)
    assert rfid["frechet_distance"] >= 0.0
    loss = report(capsys, "eval", "vq-loss", "-i", feature_dir, "--codebook", codebook_file,
                  "--beta", 0.5, "--recon-loss", 1.0)
    assert loss["total"] == pytest.approx(1.5 * loss["codebook_term"])
    assert loss["composed_total"] == pytest.approx(loss["total"] + 1.0)


def test_eval_kd_and_is(tmp_path, capsys, feature_dir):
    out = report(capsys, "eval", "kd", "-r", feature_dir, "-t", feature_dir, "--cosine-mode", "flat")
    assert out["kd_loss"] == pytest.approx(-1.0)

    pd.DataFrame(np.eye(3)).to_csv(tmp_path / "p.csv", header=False, index=False)
    score = report(capsys, "--report", tmp_path / "is.csv", "eval", "is", "--probs", tmp_path / "p.csv")
    assert score["inception_score"] == pytest.approx(3.0)
    assert pd.read_csv(tmp_path / "is.csv")["inception_score"].iloc[0] == pytest.approx(3.0)
    assert (tmp_path / "is.csv.manifest.json").is_file()


def test_bad_probabilities_exit_3(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("0.5,0.6\n")
    assert run(capsys, "eval", "is", "--probs", tmp_path / "p.csv")[0] == 3


def test_ngram_fit_sample_score(tmp_path, capsys):
    toks = tmp_path / "toks"
    toks.mkdir()
    for i in range(3):
        write_token_grid(TokenGrid.from_array((np.arange(16) % 4).reshape(4, 4)), toks / f"g{i}.tokg")
    model = tmp_path / "m.ngrm"

    report(capsys, "ngram", "fit", "-t", toks, "--vocab", 4, "--alpha", 1e-8, "-o", model)
    score = report(capsys, "ngram", "score", "--model", model, "-t", toks)
    assert score["perplexity"] <= 1.001

    for out in ("s1", "s2"):
        report(capsys, "--seed", 3, "ngram", "sample", "--model", model, "--height", 2, "--width", 3,
               "--count", 2, "-o", tmp_path / out)
    for name in ("sample_0000.tokg", "sample_0001.tokg"):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()

    assert run(capsys, "ngram", "score", "--model", model, "-t", toks, "--vocab", 5)[0] == 3
    assert run(capsys, "eval", "ppl", "--model", model, "-t", toks, "--vocab", 5)[0] == 3


def test_sweep_command(tmp_path, capsys):
    out = report(capsys, "sweep", "--sizes", "8,4", "--maps", 4, "--max-iters", 3, "-o", tmp_path / "s.csv")
    assert out["cells"] == 2
    frame = pd.read_csv(tmp_path / "s.csv")
    assert frame["size"].tolist() == [4, 8]
    assert (tmp_path / "s.csv.manifest.json").is_file()


def test_empty_sweep_grid_exits_2(tmp_path, capsys):
    assert run(capsys, "sweep", "--sizes", "", "--maps", 2, "-o", tmp_path / "s.csv")[0] == 2


def test_demo_command(tmp_path, capsys):
    out = report(capsys, "demo", "--seeds", 2, "--maps", 8, "--generated", 4, "-o", tmp_path / "demo")
    assert out["total"] == 2
    frame = pd.read_csv(tmp_path / "demo" / "demo.csv")
    assert frame["seed"].tolist() == [0, 1]
    assert (tmp_path / "demo" / "manifest.json").is_file()


def test_project_codebook(tmp_path, capsys, codebook_file):
    out = report(capsys, "project-codebook", "--codebook", codebook_file, "-o", tmp_path / "p.csv")
    assert out["codes"] == 16
    assert len(pd.read_csv(tmp_path / "p.csv")) == 16


def test_config_file_sets_defaults_and_flags_win(tmp_path, capsys, feature_dir):
    config = tmp_path / "run.env"
    config.write_text("k=5\nseed=2\nmax-iters=7\n")

    report(capsys, "--config", config, "build-codebook", "-i", feature_dir, "-o", tmp_path / "a.cbok")
    assert read_codebook(tmp_path / "a.cbok").size == 5
    manifest = json.loads((tmp_path / "a.cbok.manifest.json").read_text())
    assert manifest["seed"] == 2
    assert manifest["params"]["max_iters"] == 7
    assert manifest["config_values"] == {"k": "5", "seed": "2", "max_iters": "7"}

    report(capsys, "--config", config, "build-codebook", "--k", 3, "-i", feature_dir, "-o", tmp_path / "b.cbok")
    assert read_codebook(tmp_path / "b.cbok").size == 3


def test_missing_config_file_exits_5(tmp_path, capsys, feature_dir):
    code, _, _ = run(capsys, "--config", tmp_path / "none.env", "build-codebook", "--k", 2,
                     "-i", feature_dir, "-o", tmp_path / "a.cbok")
    assert code == 5


def test_global_flags_after_the_command(tmp_path, capsys, feature_dir):
    path = tmp_path / "b.cbok"
    code, out, err = run(capsys, "build-codebook", "--method", "cluster", "--k", 16, "--seed", 1,
                         "-i", feature_dir, "-o", path, "--json", "--threads", 2)
    assert code == 0, err
    assert json.loads(out)["size"] == 16
    manifest = json.loads((tmp_path / "b.cbok.manifest.json").read_text())
    assert (manifest["seed"], manifest["threads"]) == (1, 2)


def test_flag_after_the_command_beats_the_one_before(tmp_path, capsys, feature_dir):
    report(capsys, "--seed", 4, "build-codebook", "--k", 4, "--seed", 9,
           "-i", feature_dir, "-o", tmp_path / "b.cbok")
    assert json.loads((tmp_path / "b.cbok.manifest.json").read_text())["seed"] == 9


def test_config_file_after_the_command_and_top_level_flag_wins(tmp_path, capsys, feature_dir):
    config = tmp_path / "run.env"
    config.write_text("seed=2\n")
    report(capsys, "--seed", 6, "build-codebook", "--k", 4, "--config", config,
           "-i", feature_dir, "-o", tmp_path / "b.cbok")
    manifest = json.loads((tmp_path / "b.cbok.manifest.json").read_text())
    assert manifest["seed"] == 6
    assert manifest["config_file"] == str(config)


def test_repeated_runs_survive_a_replaced_stderr(tmp_path, capsys, feature_dir):
    for _ in range(3):
        assert run(capsys, "eval", "frechet", "-a", feature_dir, "-b", feature_dir)[0] == 0
