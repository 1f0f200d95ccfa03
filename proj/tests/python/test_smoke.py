import json
import math

import numpy as np
import pytest

import falldet


def pairwise_variance(x):
    x = np.asarray(x, dtype=float)
    return ((x[:, None] - x[None, :]) ** 2).sum() / (2 * len(x) ** 2)


def test_windowing_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(0, 2000))
        w = int(rng.integers(2, 300))
        s = int(rng.integers(1, w + 1))
        starts = list(range(0, n - w + 1, s)) if n >= w else []
        assert falldet.window_count(n, w, s) == len(starts)
        assert falldet.window_starts(n, w, s) == starts
    assert falldet.window_seconds(256) == 1.28


def test_label_rule():
    assert falldet.label_window(["BKG"] * 230 + ["FALL"] * 26) == "FALL"
    assert falldet.label_window(["BKG"] * 231 + ["FALL"] * 25) == "BKG"
    assert falldet.label_window(["BKG"] * 125 + ["ALERT"] * 131) == "ALERT"
    assert falldet.label_window(["BKG"] * 128 + ["ALERT"] * 128) == "BKG"


def test_indicators_against_numpy():
    rng = np.random.default_rng(1)
    for _ in range(50):
        s = rng.normal(0, 80, size=(int(rng.integers(2, 200)), 3)) + [0, -256, 0]
        vx, vy, vz = (pairwise_variance(s[:, k]) for k in range(3))
        assert falldet.c8(s) == pytest.approx(math.sqrt(vx + vz), rel=1e-9)
        assert falldet.c9(s) == pytest.approx(math.sqrt(vx + vy + vz), rel=1e-9)
    with pytest.raises(ValueError):
        falldet.c9(np.zeros((4, 2)))


def test_calibration_and_weights():
    res = falldet.calibrate_thresholds([1, 2, 10, 11, 50, 60], ["BKG", "BKG", "ALERT", "ALERT", "FALL", "FALL"])
    assert res["correct"] == 6
    assert res["alert"] <= res["fall"]
    assert falldet.loss_weights(500, 50, 10) == (1.0, 10.0, 50.0)
    with pytest.raises(falldet.FalldetError):
        falldet.loss_weights(10, 0, 1)
    assert falldet.counts_to_g(256) == 1.0


def test_pipeline_through_the_cli(tmp_path):
    common = ["--data", str(tmp_path / "data"), "--annotations", str(tmp_path / "ann"),
              "--out", str(tmp_path / "out"), "-w", "32", "--train-fraction", "0.5"]
    code, _, err = falldet.run_cli(common + ["synth", "--subjects", "2", "--activities", "D01,F01"])
    assert code == 0, err
    code, _, err = falldet.run_cli(common + ["--epochs", "2", "train"])
    assert code == 0, err
    metrics = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert len(metrics["loss_history"]) == 2

    rid, samples = falldet.load_recording(tmp_path / "data" / "F01_SA01_R01.txt")
    assert rid == "F01_SA01_R01"
    assert samples.shape[1] == 3

    model = falldet.Model(tmp_path / "out" / "model.json")
    assert (model.width, model.stride) == (32, 16)
    p = model.predict(samples[:32])
    assert sum(p) == pytest.approx(1.0)
    assert model.classify(samples[:32]) in {"BKG", "ALERT", "FALL"}

    det = falldet.OnlineDetector(model)
    online = det.replay(samples)
    assert len(online) == falldet.window_count(len(samples), 32, 16)
    offline = [(s, model.classify(samples[s:s + 32])) for s in falldet.window_starts(len(samples), 32, 16)]
    assert online == offline

    code, out, _ = falldet.run_cli(common + ["replay", str(tmp_path / "data" / "F01_SA01_R01.txt"), "--backend", "model"])
    assert code == 0
    events = [json.loads(line) for line in out.splitlines()]
    assert [(e["start"], e["class"]) for e in events] == online


def test_streaming_push():
    det = falldet.OnlineDetector(4, 2, 1.0, 2.0)
    emitted = [i for i in range(1, 11) if det.push(0.0, 0.0, float(i % 3)) is not None]
    assert emitted == [4, 6, 8, 10]
    with pytest.raises(ValueError):
        det.push(float("nan"), 0.0, 0.0)
