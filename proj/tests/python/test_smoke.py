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

import math
import struct

import numpy as np
import pytest

import repkd


def pack_str(s):
    raw = s.encode()
    return struct.pack("<H", len(raw)) + raw


def pack_trep(teacher, layers, dim, utterances):
    variants = next(iter(utterances.values())).shape[0]
    out = b"TREP" + struct.pack("<I", 1) + pack_str(teacher)
    out += struct.pack("<IIIQ", layers, dim, variants, len(utterances))
    for uid, a in utterances.items():
        out += pack_str(uid) + struct.pack("<I", a.shape[2])
        out += struct.pack(f"<{a.size}f", *a.astype(np.float32).ravel())
    return out


def random_grid(rng, t, n, classes):
    x = rng.normal(size=(t, n + 1, classes))
    return x - np.log(np.exp(x).sum(axis=2, keepdims=True))


def test_trep_written_with_struct(tmp_path):
    rng = np.random.default_rng(0)
    utts = {"u1": rng.normal(size=(2, 3, 4, 5)), "utt-two": rng.normal(size=(2, 3, 1, 5))}
    path = tmp_path / "t.trep"
    path.write_bytes(pack_trep("lm", 3, 5, utts))

    got = repkd.read_trep(str(path))
    assert (got["teacher_id"], got["layers"], got["dim"], got["variants"]) == ("lm", 3, 5, 2)
    assert list(got["utterances"]) == ["u1", "utt-two"]
    for uid, a in utts.items():
        np.testing.assert_array_equal(got["utterances"][uid], a.astype(np.float32))

    # Writing it back gives the same bytes.
    again = tmp_path / "again.trep"
    repkd.write_trep(str(again), "lm", [(k, v.astype(np.float32)) for k, v in utts.items()])
    assert again.read_bytes() == path.read_bytes()


def test_trep_corruption_raises(tmp_path):
    good = pack_trep("lm", 1, 2, {"a": np.ones((1, 1, 2, 2))})
    bad = tmp_path / "bad.trep"
    bad.write_bytes(good[:-3])
    with pytest.raises(repkd.FormatError):
        repkd.read_trep(str(bad))
    bad.write_bytes(b"TREX" + good[4:])
    with pytest.raises(ValueError):
        repkd.read_trep(str(bad))
    with pytest.raises(FileNotFoundError):
        repkd.read_trep(str(tmp_path / "absent.trep"))


def test_lattice_matches_enumeration():
    rng = np.random.default_rng(1)
    for t, tokens in [(1, []), (3, [0]), (4, [1, 0, 1]), (5, [2, 2])]:
        lp = random_grid(rng, t, len(tokens), 4)
        nll = repkd.transducer_nll(lp, tokens)
        assert nll == pytest.approx(repkd.enumerated_nll(lp, tokens), abs=1e-9)
        q = repkd.alignment_posterior(lp, tokens)
        np.testing.assert_allclose(q, repkd.enumerated_posterior(lp, tokens), atol=1e-9)
        np.testing.assert_allclose(q.sum(axis=1), 1.0, atol=1e-12)


def test_lattice_gradient_by_differences():
    rng = np.random.default_rng(2)
    lp = random_grid(rng, 3, 2, 3)
    tokens = [1, 0]
    nll, grad = repkd.transducer_grad(lp, tokens)
    assert nll == pytest.approx(repkd.transducer_nll(lp, tokens))
    h = 1e-6
    for idx in [(0, 0, 2), (1, 1, 0), (2, 2, 2), (1, 2, 1)]:
        up, down = lp.copy(), lp.copy()
        up[idx] += h
        down[idx] -= h
        fd = (repkd.transducer_nll(up, tokens) - repkd.transducer_nll(down, tokens)) / (2 * h)
        assert grad[idx] == pytest.approx(fd, abs=1e-6)


def test_select_layers():
    assert repkd.select_layers("first", 3, 12) == [1, 2, 3]
    assert repkd.select_layers("last", 2, 12) == [11, 12]
    assert repkd.select_layers("uniform", 4, 12) == [3, 6, 9, 12]
    a = repkd.select_layers("random", 4, 12, seed=5, epoch=2)
    assert a == repkd.select_layers("random", 4, 12, seed=5, epoch=2)
    assert a == sorted(set(a)) and len(a) == 4
    with pytest.raises(repkd.InvalidConfig):
        repkd.select_layers("uniform", 13, 12)


def test_word_error_rate():
    assert repkd.word_error_rate("a b c".split(), "a b c".split()) == 0.0
    assert repkd.word_error_rate("a b c d".split(), "a x c".split()) == pytest.approx(0.5)


def test_kd_loss_zero_at_fit():
    phibar = np.array([[1.0, 0.0], [0.0, 1.0]])
    psi = np.array([[0.5], [2.0]])
    weight = np.eye(2, 3)
    targets = phibar.astype(np.float32)
    assert repkd.kd_loss(phibar, psi, targets, weight, np.zeros(2)) == pytest.approx(0.0)
    assert repkd.kd_loss(phibar, psi, targets, weight, np.ones(2), "l2") == pytest.approx(4.0)


def test_tiny_training_run(tmp_path):
    corpus = tmp_path / "corpus"
    h1 = repkd.generate_synth_corpus(str(corpus), seed=2, train=12, dev=3)
    assert h1 == repkd.generate_synth_corpus(str(tmp_path / "again"), seed=2, train=12, dev=3)
    repkd.generate_mock_teacher([str(corpus / "train.tsv")], str(tmp_path / "reps" / "mock.trep"),
                                layers=4, dim=8)
    cfg = {
        "data.train": str(corpus / "train.tsv"),
        "data.dev": str(corpus / "dev.tsv"),
        "data.out": str(tmp_path / "run"),
        "model.encoder_dim": "8",
        "model.prediction_dim": "8",
        "model.joint_dim": "8",
        "model.embed_dim": "4",
        "train.epochs": "2",
        "train.threads": "1",
        "kd.models": "mock",
        "kd.reps_dir": str(tmp_path / "reps"),
        "kd.strategy": "uniform",
        "kd.layers_k": "2",
    }
    history = repkd.train(cfg)
    assert [h["epoch"] for h in history] == [1, 2]
    assert all(h["kd_loss"] > 0 and math.isfinite(h["combined"]) for h in history)
    wer = repkd.evaluate(cfg, str(tmp_path / "run" / "iter2" / "model.tkdm"),
                         str(corpus / "dev.tsv"))
    assert wer == pytest.approx(history[-1]["dev_wer"], abs=1e-12)

    q = repkd.read_alnq(str(tmp_path / "run" / "alignments.alnq"))
    assert len(q) == 12
    for arr in q.values():
        np.testing.assert_allclose(arr.sum(axis=1), 1.0, atol=1e-5)

    with pytest.raises(repkd.InvalidConfig):
        repkd.train({**cfg, "kd.layers_k": "9"})
