import json

import numpy as np
import pytest

import rttloc

FAST = {
    "seed": 11,
    "train": {"learning_rate": 0.2, "max_epochs": 60},
    "experiment": {"scans_per_point": 20, "test_per_point": 2},
}


@pytest.fixture(scope="module")
def data():
    return rttloc.simulate(FAST)


@pytest.fixture(scope="module")
def registry(data):
    return rttloc.train(data, FAST)


def test_ftm():
    assert rttloc.compute_rtt(0, 40, 60, 100) == 80
    assert rttloc.rtt_to_distance(200) == 30.0
    assert rttloc.distance_to_rtt(30.0) == 200.0
    with pytest.raises(ValueError):
        rttloc.compute_rtt(10, 0, 5, 9)


def test_config():
    cfg = rttloc.default_config("testbed2")
    assert cfg["testbed"]["width"] == 17.3
    assert cfg["train"]["dropout_rate"] == pytest.approx(0.1)
    with pytest.raises(ValueError):
        rttloc.simulate({"train": {"dropuot_rate": 0.2}})
    with pytest.raises(ValueError):
        rttloc.default_config("testbed3")


def test_simulate(data):
    assert data["rtt"].shape == (14 * 20, 63)
    assert data["detected"].shape == data["rtt"].shape
    assert data["position"].shape == (14 * 20, 2)
    assert sorted(set(data["ref_id"].tolist())) == list(range(14))
    again = rttloc.simulate(FAST)
    assert np.array_equal(again["rtt"], data["rtt"])
    held_out = rttloc.simulate(FAST, stream=1)
    assert not np.array_equal(held_out["rtt"], data["rtt"])


def test_train_and_persist(registry, tmp_path):
    assert len(registry) == 14
    assert registry.input_dim == 63
    assert registry.ids == list(range(14))
    text = registry.to_json()
    assert rttloc.Registry.from_json(text) == registry
    assert json.loads(text)["K"] == 63
    registry.save(str(tmp_path / "store.json"))
    assert rttloc.Registry.load(str(tmp_path / "store.json")) == registry


def test_localize(registry, data):
    rows = data["ref_id"] == 5
    scans = data["rtt"][rows][:5]
    est = registry.localize(scans, data["detected"][rows][:5])
    assert est["detections"]
    top = max(est["detections"], key=lambda d: d["score"])
    assert top["ref_point_id"] == 5
    assert sum(est["posterior"]) == pytest.approx(1.0, abs=1e-9)
    capped = registry.localize(scans, tau=0.0, n_expected=2)
    assert len(capped["detections"]) == 2
    errs = registry.reconstruction_errors(scans[:1])
    assert len(errs) == 1 and len(errs[0]) == 14
    with pytest.raises(ValueError):
        registry.localize(scans[:, :10])


def test_run_experiment():
    report = rttloc.run_experiment(FAST)
    assert report["instances"] == 14 * 2
    assert len(report["errors"]) == 28
    assert report == rttloc.run_experiment(FAST)
