# Copyright 2026 The repkd Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the repkd command-line tool."""

import filecmp
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("REPKD_CLI", "repkd")


def run(*args, check=None):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if check is not None:
        assert proc.returncode == check, proc.stdout + proc.stderr
    return proc


def tree(path):
    return sorted(p.relative_to(path) for p in Path(path).rglob("*"))


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    run("synth", "--out", root / "corpus", "--train", 30, "--dev", 6, "--seed", 3, check=0)
    run("mockteacher", "--manifest", root / "corpus" / "train.tsv", "--out",
        root / "reps" / "mock.trep", "--layers", 12, "--dim", 24, check=0)
    return root


def train_args(work, out, *extra):
    return ["train",
            "--data.train", work / "corpus" / "train.tsv",
            "--data.dev", work / "corpus" / "dev.tsv",
            "--data.out", out,
            "--model.encoder_dim", 12, "--model.prediction_dim", 12,
            "--model.joint_dim", 12, "--model.embed_dim", 6,
            "--train.epochs", 2,
            "--kd.models", "mock", "--kd.reps_dir", work / "reps",
            *extra]


def metrics(path):
    lines = Path(path).read_text().splitlines()
    assert lines[0] == "epoch\tasr_loss\tkd_loss\tcombined\tdev_wer"
    return [dict(zip(lines[0].split("\t"), map(float, l.split("\t")))) for l in lines[1:]]


def test_synth_is_reproducible_and_refuses_overwrite(tmp_path):
    run("synth", "--out", tmp_path / "a", "--train", 12, "--dev", 3, check=0)
    run("synth", "--out", tmp_path / "b", "--train", 12, "--dev", 3, check=0)
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    for rel in tree(tmp_path / "a"):
        if (tmp_path / "a" / rel).is_file():
            assert filecmp.cmp(tmp_path / "a" / rel, tmp_path / "b" / rel, shallow=False)

    refused = run("synth", "--out", tmp_path / "a", "--train", 12, check=2)
    assert "--force" in refused.stderr
    run("synth", "--out", tmp_path / "a", "--train", 5, "--dev", 3, "--force", check=0)
    assert len((tmp_path / "a" / "train.tsv").read_text().splitlines()) == 5
    assert len(list((tmp_path / "a" / "frames").iterdir())) == 8


def test_synth_usage_errors(tmp_path):
    run("synth", check=2)
    run("synth", "--out", tmp_path / "x", "--vocab-size", 1, check=2)
    run(check=2)
    run("frobnicate", check=2)


def test_synth_default_size(tmp_path):
    out = run("synth", "--out", tmp_path / "d", check=0).stdout
    assert "500 utterances" in out
    assert len((tmp_path / "d" / "train.tsv").read_text().splitlines()) == 500
    assert len((tmp_path / "d" / "vocab.txt").read_text().splitlines()) == 20


def test_mockteacher_header_and_determinism(work, tmp_path):
    args = ["mockteacher", "--manifest", work / "corpus" / "train.tsv", "--layers", 12,
            "--dim", 768, "--lookahead", 1, "--variants", 4]
    run(*args, "--out", tmp_path / "a.trep", check=0)
    run(*args, "--out", tmp_path / "b.trep", check=0)
    assert filecmp.cmp(tmp_path / "a.trep", tmp_path / "b.trep", shallow=False)
    out = run("inspect", tmp_path / "a.trep", check=0).stdout
    assert "TREP v1 teacher=mock L=12 D=768 variants=4 utts=30" in out
    run(*args, "--out", tmp_path / "a.trep", check=2)
    run(*args, "--out", tmp_path / "a.trep", "--force", check=0)


def test_mockteacher_missing_manifest(tmp_path):
    run("mockteacher", "--manifest", tmp_path / "none.tsv", "--out", tmp_path / "x.trep",
        check=2)


def test_mockteacher_without_context_repeats_vectors(work, tmp_path):
    run("mockteacher", "--manifest", work / "corpus" / "train.tsv", "--out",
        tmp_path / "w0.trep", "--lookahead", 0, "--layers", 1, "--dim", 16, check=0)
    for line in (work / "corpus" / "train.tsv").read_text().splitlines():
        uid, tokens = line.split("\t")[:2]
        tokens = tokens.split()
        if len(set(tokens)) < len(tokens):
            break
    else:
        pytest.skip("no utterance with a repeated token")
    out = run("inspect", tmp_path / "w0.trep", "--utt", uid, "--layer", 1, check=0).stdout
    norms = [l.split("norm=")[1] for l in out.splitlines() if "norm=" in l]
    assert len(norms) == len(tokens)
    by_token = {}
    for tok, norm in zip(tokens, norms):
        by_token.setdefault(tok, set()).add(norm)
    assert all(len(v) == 1 for v in by_token.values())


def test_iterations_one_then_two(work, tmp_path):
    out = tmp_path / "run"
    run(*train_args(work, out), "--iter", 1, check=0)
    assert (out / "alignments.alnq").exists()
    assert (out / "iter1" / "model.tkdm").exists()
    summary = run("inspect", out / "alignments.alnq", check=0).stdout.splitlines()
    assert summary[0] == "ALNQ v1 utts=30"
    assert all(l.endswith("rows sum to 1.000") for l in summary[1:])

    run(*train_args(work, out), "--iter", 2, "--kd.strategy", "uniform", "--kd.layers_k", 2,
        check=0)
    rows = metrics(out / "iter2" / "metrics.tsv")
    assert len(rows) == 2
    assert all(r["kd_loss"] > 0 for r in rows)
    assert all(r["asr_loss"] > 0 for r in rows)

    # Evaluating the final model reproduces the logged dev WER.
    report = tmp_path / "report.tsv"
    ev = run("eval", "--model", out / "iter2" / "model.tkdm", "--data.dev",
             work / "corpus" / "dev.tsv", "--model.encoder_dim", 12,
             "--model.prediction_dim", 12, "--model.joint_dim", 12, "--model.embed_dim", 6,
             "--report", report, check=0)
    wer = float(ev.stdout.split()[1])
    assert wer == pytest.approx(rows[-1]["dev_wer"], abs=5e-5)
    lines = report.read_text().splitlines()
    assert lines[0] == "id\treference\thypothesis\tedits\treference_words"
    assert len(lines) == 7
    edits = sum(int(l.split("\t")[3]) for l in lines[1:])
    words = sum(int(l.split("\t")[4]) for l in lines[1:])
    assert wer == pytest.approx(edits / words, abs=5e-5)

    # A checkpoint evaluated with other model dimensions is incompatible.
    run("eval", "--model", out / "iter2" / "model.tkdm", "--data.dev",
        work / "corpus" / "dev.tsv", check=3)


def test_lambda_zero_logs_zero_kd(work, tmp_path):
    out = tmp_path / "run"
    run(*train_args(work, out), "--kd.lambda", 0, check=0)
    text = (out / "iter2" / "metrics.tsv").read_text().splitlines()[1:]
    assert all(l.split("\t")[2] == "0.000000" for l in text)


def test_layers_k_beyond_teacher_depth(work, tmp_path):
    proc = run(*train_args(work, tmp_path / "run"), "--kd.strategy", "uniform",
               "--kd.layers_k", 13, check=2)
    assert "layers_k" in proc.stderr


def test_missing_artifacts(work, tmp_path):
    out = tmp_path / "run"
    run(*train_args(work, out), "--iter", 2, check=3)
    run(*train_args(work, out), "--iter", 1, check=0)
    missing = run(*train_args(work, out), "--iter", 2, "--kd.models", "absent", check=3)
    assert str(work / "reps" / "absent.trep") in missing.stderr
    run(*train_args(work, out), "--data.train", tmp_path / "nope.tsv", check=3)


def test_unknown_keys_and_bad_values(work, tmp_path):
    run(*train_args(work, tmp_path / "r"), "--set", "kd.nonsense=1", check=2)
    run(*train_args(work, tmp_path / "r"), "--kd.lambda", "-1", check=2)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("train.epochs = 2\nkd.strategy = sideways\n")
    proc = run(*train_args(work, tmp_path / "r"), "--config", cfg, check=2)
    assert "run.cfg:2" in proc.stderr


def test_config_file_and_resolved_dump(work, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\ntrain.epochs = 5\nkd.lambda = 0\n")
    out = tmp_path / "run"
    proc = run(*train_args(work, out), "--config", cfg, "--iter", 1, check=0)
    # Command-line flags override the file.
    assert "train.epochs = 2" in proc.stderr
    assert "kd.lambda = 0" in proc.stderr
    assert len(metrics(out / "iter1" / "metrics.tsv")) == 2


def test_eval_empty_dataset(work, tmp_path):
    out = tmp_path / "run"
    run(*train_args(work, out), "--iter", 1, check=0)
    empty = tmp_path / "empty.tsv"
    empty.write_text("")
    run("eval", "--model", out / "iter1" / "model.tkdm", "--eval.manifest", empty,
        "--model.encoder_dim", 12, "--model.prediction_dim", 12, "--model.joint_dim", 12,
        "--model.embed_dim", 6, check=2)


def test_inspect_errors(work, tmp_path):
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"JUNKdata")
    proc = run("inspect", junk, check=2)
    assert "JUNK" in proc.stderr

    good = (work / "reps" / "mock.trep").read_bytes()
    cut = tmp_path / "cut.trep"
    cut.write_bytes(good[: len(good) // 2])
    proc = run("inspect", cut, check=3)
    assert "truncated" in proc.stderr or "offset" in proc.stderr
    run("inspect", tmp_path / "absent.trep", check=3)

    frames = next((work / "corpus" / "frames").iterdir())
    assert run("inspect", frames, check=0).stdout.startswith("FRMS T=")
