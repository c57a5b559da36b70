import json
import math

import numpy as np
import pytest

import vageo


def test_ground_encoding_values():
    m = vageo.ground_encoding(64, 64, 32, 32, sigma=25.0, normalize=False)
    assert m.shape == (64, 64)
    assert m[32, 32] == pytest.approx(0.02, abs=1e-12)
    assert m[32, 37] == pytest.approx(0.02 * math.exp(-1.0), abs=1e-12)
    assert np.unravel_index(np.argmax(m), m.shape) == (32, 32)
    assert vageo.ground_encoding(8, 8, 2, 3).max() == pytest.approx(1.0)


def test_drone_encoding_rings():
    m = vageo.drone_encoding(256, 256, 100, 40)
    assert m[100, 40] == pytest.approx(0.60)
    assert set(np.unique(m)) <= {0.60, 0.15, 0.10}
    assert len(vageo.RING_WEIGHT_ABLATION) == 8
    with pytest.raises(vageo.ConfigError):
        vageo.drone_encoding(16, 16, 1, 1, weights=(0.1, 0.6, 0.2, 0.1))


def test_click_out_of_bounds_raises():
    with pytest.raises(ValueError):
        vageo.ground_encoding(16, 16, 16, 0)


def test_csha_zero_parameters_scale_by_quarter():
    x = np.random.default_rng(0).normal(size=(2, 8, 5, 6))
    np.testing.assert_allclose(vageo.csha_identity(x), 0.25 * x, atol=1e-12)
    out, channel, spatial = vageo.csha_forward(
        x, np.zeros((8, 2)), np.zeros((2, 8)), np.zeros((1, 2, 3, 3))
    )
    np.testing.assert_allclose(out, 0.25 * x, atol=1e-12)
    assert channel.shape == (2, 8)
    assert spatial.shape == (2, 1, 5, 6)
    with pytest.raises(vageo.ShapeError):
        vageo.csha_forward(x, np.zeros((4, 2)), np.zeros((2, 8)), np.zeros((1, 2, 3, 3)))


def test_metrics():
    a = (5.0, 5.0, 10.0, 10.0)
    assert vageo.iou(a, a) == 1.0
    assert vageo.iou(a, (10.0, 5.0, 10.0, 10.0)) == pytest.approx(1 / 3)
    preds = [a, (10.0, 5.0, 10.0, 10.0), (50.0, 50.0, 4.0, 4.0)]
    assert vageo.accuracy_at(preds, [a] * 3, 0.25) == pytest.approx(2 / 3)
    report = vageo.summarize(preds, [a] * 3)
    assert report["acc_at_50"] == pytest.approx(1 / 3)
    assert len(report["ious"]) == 3


def test_patch_retrieval_and_schedule():
    scores = [0.0] * 64
    scores[9] = 1.0
    assert vageo.patch_retrieval(scores, (192.0, 192.0, 128.0, 128.0))
    assert not vageo.patch_retrieval(scores, (960.0, 960.0, 128.0, 128.0))
    assert [vageo.lr_schedule(e) for e in (0, 10, 20)] == [0.0001, 0.00005, 0.000025]


def test_encode_decode_round_trip():
    gt = (70.0, 33.0, 20.0, 12.0)
    t = vageo.encode_box(gt, 16, 8, 8, (16.0, 16.0))
    logits = np.zeros((1, 8, 8, 5))
    cell = logits[0, t["row"], t["col"]]
    cell[:] = [math.log(t["tx"] / (1 - t["tx"])), math.log(t["ty"] / (1 - t["ty"])), t["tw"], t["th"], 4.0]
    [(box, conf)] = vageo.decode_grid(logits, 16, (16.0, 16.0))
    np.testing.assert_allclose(box, gt, atol=1e-9)
    assert conf > 0.9


def test_synth_train_evaluate(tmp_path):
    manifest = vageo.synth_generate(tmp_path / "data", 3, seed=2, view="ground",
                                    reference_size=(64, 64), query_size=(32, 64))
    samples = vageo.load_manifest(manifest)
    assert len(samples) == 3
    assert samples[0]["view"] == "ground"
    overrides = json.dumps({"input": {"query": [32, 64], "reference": [64, 64]},
                            "backbone": {"stage_channels": [4, 8]},
                            "csha": {"reduction": 2, "kernel": 3}})
    result = vageo.train_evaluate(manifest, "toy", overrides, max_steps=2, checkpoint=tmp_path / "m.vgck")
    assert len(result["losses"]) == 2
    assert all(math.isfinite(v) for v in result["losses"])
    assert 0.0 <= result["acc_at_50"] <= result["acc_at_25"] <= 1.0
    assert (tmp_path / "m.vgck").exists()
    assert json.loads(result["config"])["view"] == "ground"
    with pytest.raises(vageo.ConfigError):
        vageo.config("toy", "drone", '{"nope": 1}')


def test_cli_in_process(tmp_path, monkeypatch):
    monkeypatch.setenv("VAGEO_OUTPUT_ROOT", str(tmp_path))
    assert vageo.cli(["synth", "--n", "2", "--out", "d", "--reference-size", "64", "64",
                      "--query-size", "32", "32"]) == 0
    assert (tmp_path / "d" / "manifest.jsonl").exists()
    assert vageo.cli(["synth", "--n", "0"]) == 1
