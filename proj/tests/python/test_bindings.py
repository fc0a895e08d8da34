import json

import numpy as np
import pytest

import neolus


def test_metrics_match_scipy_style_oracle():
    rng = np.random.default_rng(3)
    x = rng.integers(0, 4, 12).astype(float)
    y = rng.normal(size=12)
    rx = np.argsort(np.argsort(x)) + 1.0
    for v in np.unique(x):
        rx[x == v] = rx[x == v].mean()
    ry = np.argsort(np.argsort(y)) + 1.0
    assert neolus.spearman(x, y) == pytest.approx(np.corrcoef(rx, ry)[0, 1], abs=1e-12)
    assert neolus.mape([110.0, 90.0], [100.0, 100.0]) == pytest.approx(0.1)


def test_pooling_and_frame_policy():
    f = np.array([[[1, 3, 5], [3, 5, 7]]], dtype=float)
    assert neolus.position_preserving_pool(f).tolist() == [[2, 4, 6]]
    assert neolus.global_average_pool(f).tolist() == [4]
    assert neolus.select_frame_indices(100, 6) == [0, 20, 40, 59, 79, 99]


def test_phantom_split_and_errors(tmp_path):
    frame = neolus.generate_frame(0.0, 7)
    assert frame.shape == (512, 461) and frame.dtype == np.uint8
    spec = {"n_patients": 6, "videos_per_session": 1, "frames_per_video": 2, "image_size": [64, 64], "seed": 1}
    assert "patients" in neolus.generate_dataset(json.dumps(spec), str(tmp_path))
    split = neolus.make_split(tmp_path / "manifest.csv", 1, "holdout:0.5/0.25/0.25")
    assert len(split["assignments"]) == 6
    with pytest.raises(neolus.Error, match="kind=argument_error"):
        neolus.generate_frame(2.0, 1)
    with pytest.raises(neolus.Error, match="kind=argument_error"):
        neolus.clip_and_normalize_sf(-1.0)
