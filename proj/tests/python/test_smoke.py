# SPDX-License-Identifier: Apache-2.0
import json
import math
import os
import subprocess

import numpy as np
import pytest

import tarn


def tiny_config(out_dir):
    return {
        "seed": 5,
        "model": {"d_in": 6, "visual_hidden": 3, "relation_hidden": 3, "nn_hidden": 3},
        "episode": {"way": 3},
        "train": {"lr": 0.01, "episodes": 20, "val_every": 10, "val_episodes": 5, "test_episodes": 10},
        "data": {"synthetic": {"n_classes": 10, "examples_per_class": 4, "d_in": 6}},
        "split": {"train_fraction": 0.4, "val_fraction": 0.3},
        "output_dir": str(out_dir),
    }


def softmax_cols(x):
    e = np.exp(x - x.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


def test_attention_matches_numpy():
    rng = np.random.default_rng(0)
    S, Q = rng.normal(size=(4, 5)), rng.normal(size=(3, 5))
    W, b = rng.normal(size=(5, 5)), rng.normal(size=5)
    A, H = tarn.attention(S, Q, W, b)
    expect_A = softmax_cols((S @ W + b) @ Q.T)
    np.testing.assert_allclose(A, expect_A, atol=1e-12)
    np.testing.assert_allclose(H, expect_A.T @ S, atol=1e-12)
    np.testing.assert_allclose(A.sum(axis=0), 1.0, atol=1e-12)


def test_compare_measures():
    rng = np.random.default_rng(1)
    q, h = rng.normal(size=(2, 4)), rng.normal(size=(2, 4))
    np.testing.assert_allclose(tarn.compare("Mult", q, h), q * h, atol=1e-14)
    np.testing.assert_allclose(tarn.compare("Subt", q, h), (q - h) ** 2, atol=1e-14)
    W, b = rng.normal(size=(8, 3)), rng.normal(size=3)
    nn = np.maximum(np.concatenate([q, h], axis=1) @ W + b, 0.0)
    np.testing.assert_allclose(tarn.compare("NN", q, h, W, b), nn, atol=1e-13)
    euc = tarn.compare("EucCos", q, h)
    np.testing.assert_allclose(euc[:, 0], np.linalg.norm(q - h, axis=1), atol=1e-13)
    cos = (q * h).sum(1) / (np.linalg.norm(q, axis=1) * np.linalg.norm(h, axis=1))
    np.testing.assert_allclose(euc[:, 1], cos, atol=1e-13)


def test_loss_anchors_and_prediction():
    assert tarn.episode_loss(np.zeros((3, 2)), 1) == pytest.approx(math.log(2), abs=1e-12)
    logit = lambda p: math.log(p / (1 - p))
    raw = np.array([[logit(0.9)], [logit(0.1)]])
    assert tarn.episode_loss(raw, 0) == pytest.approx(-math.log(0.9), abs=1e-12)
    pred, probs = tarn.predict(np.array([[0.0, 2.0], [1.0, 1.0], [3.0, -1.0]]))
    assert pred == 0  # ties go to the lowest index
    assert sum(probs) == pytest.approx(1.0)


def test_synth_train_eval_roundtrip(tmp_path):
    spec = {"name": "toy", "n_classes": 4, "examples_per_class": 2, "d_in": 3}
    summary = tarn.synth(spec, tmp_path / "data")
    assert summary["videos"] == 8
    ds = tarn.load_dataset(summary["tsf"])
    assert ds["feature_size"] == 3 and len(ds["videos"]) == 8
    assert ds["videos"][0]["features"].shape[1] == 3

    cfg = tiny_config(tmp_path / "run")
    assert tarn.train(cfg)["train_episodes"] == 20
    result = tarn.eval(cfg, tmp_path / "run" / "checkpoint.tck")
    assert 0.0 <= result["accuracy"] <= 1.0
    with pytest.raises(tarn.TarnError):
        tarn.train({"data": {"path": "/nonexistent.tsf"}})


def test_gradcheck_and_fault(tmp_path):
    cfg = tiny_config(tmp_path / "run")
    ok, _ = tarn.gradcheck(cfg)
    assert ok
    ok, summary = tarn.gradcheck(cfg, "attention.W")
    assert not ok and summary["worst"] > 1e-4


@pytest.mark.skipif("TARN_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_synth(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"name": "cli", "n_classes": 3, "examples_per_class": 2, "d_in": 2}))
    out = subprocess.run([os.environ["TARN_CLI"], "synth", "--spec", str(spec), "--out", str(tmp_path)],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["videos"] == 6
