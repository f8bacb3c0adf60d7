import json

import numpy as np
import pytest

from dpforest.data import ContinuousFeature, Dataset, FeatureSchema
from dpforest.evaluation import (
    accuracy,
    auc,
    collect_diagnostics,
    cross_validate,
    f1,
    least_frequent_label,
    report_to_dict,
    summarize_leaf_diagnostics,
)
from dpforest.forest import TrainConfig, build_forest
from dpforest.synth import generate

from conftest import pairwise_auc_oracle


def test_accuracy():
    assert accuracy(["a", "b", "a"], ["a", "b", "b"]) == pytest.approx(2 / 3)
    assert accuracy(["a"], ["a"]) == 1.0
    with pytest.raises(ValueError):
        accuracy(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_least_frequent_label():
    assert least_frequent_label(["a", "a", "b"]) == "b"
    # a tie goes to the earliest label in the supplied order
    assert least_frequent_label(["a", "b"], order=("b", "a")) == "b"
    assert least_frequent_label(["a", "b"], order=("a", "b")) == "a"
    with pytest.raises(ValueError):
        least_frequent_label([])
    with pytest.raises(ValueError):
        least_frequent_label(["a", "b"], order=("a",))


def test_auc_hand_cases():
    # pairwise: (0.9 vs 0.8) + (0.9 vs 0.1) + (0.8 vs 0.8 tie) + (0.8 vs 0.1)
    got = auc([0.9, 0.8, 0.8, 0.1], ["p", "n", "p", "n"], "p")
    assert got == pytest.approx(0.875)
    assert auc([0.9, 0.8, 0.2, 0.1], ["p", "p", "n", "n"], "p") == 1.0
    assert auc([0.1, 0.2, 0.8, 0.9], ["p", "p", "n", "n"], "p") == 0.0
    assert auc([0.5, 0.5, 0.5, 0.5], ["p", "p", "n", "n"], "p") == 0.5


def test_auc_matches_pairwise_definition():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(5, 50))
        # coarse score grid so ties actually occur
        scores = rng.integers(0, 6, size=n) / 5.0
        truth = ["p" if rng.random() < 0.4 else "n" for _ in range(n)]
        if "p" not in truth or "n" not in truth:
            continue
        got = auc(scores.tolist(), truth, "p")
        want = pairwise_auc_oracle(scores.tolist(), truth, "p")
        assert got == pytest.approx(want, abs=1e-12)


def test_auc_validation():
    with pytest.raises(ValueError):
        auc([0.1, 0.2], ["p", "p"], "p")
    with pytest.raises(ValueError):
        auc([0.1, 0.2, 0.3], ["a", "b", "c"], "a")
    with pytest.raises(ValueError):
        auc([0.1, 0.2], ["a", "b"], "zzz")
    with pytest.raises(ValueError):
        auc([0.1], ["a", "b"], "a")


def test_f1_hand_cases():
    # tp=2 fp=1 fn=2: precision 2/3, recall 1/2, f1 = 4/7
    predictions = ["p", "p", "p", "n", "n", "n", "n"]
    truth = ["p", "p", "n", "p", "p", "n", "n"]
    assert f1(predictions, truth, "p") == pytest.approx(4 / 7)
    assert f1(["n", "n"], ["n", "n"], "p") == 0.0
    assert f1(["p", "p"], ["p", "p"], "p") == 1.0


def _forest_diagnostics(seed, sensitivity_mode, data, tau=4, depth=3, epsilon=0.5):
    config = TrainConfig(
        epsilon=epsilon,
        tau=tau,
        depth_override=depth,
        sensitivity_mode=sensitivity_mode,
        seed=seed,
    )
    model = build_forest(data, config, collect_diagnostics=True)
    return collect_diagnostics(model)


def test_global_sensitivity_flips_more_than_smooth():
    data = generate(3, 0, 240, np.random.default_rng(1))
    smooth, global_ = [], []
    for seed in range(30):
        smooth.append(_forest_diagnostics(seed, "smooth", data).flip_fraction)
        global_.append(_forest_diagnostics(seed, "global", data).flip_fraction)
    assert np.mean(global_) >= np.mean(smooth)


def test_empty_leaf_fraction_grows_with_forest_size():
    data = generate(3, 0, 600, np.random.default_rng(2))
    small, large = [], []
    for seed in range(30):
        small.append(
            _forest_diagnostics(seed, "smooth", data, tau=2, depth=6).empty_leaf_fraction_mean
        )
        large.append(
            _forest_diagnostics(seed, "smooth", data, tau=30, depth=6).empty_leaf_fraction_mean
        )
    assert np.mean(large) > np.mean(small)


def test_summarize_excludes_empty_leaves_from_flip_and_sensitivity():
    from dpforest.mechanism import QueryDiagnostics

    occupied = QueryDiagnostics(
        record_count=5, gap=2, smooth_sensitivity=0.2,
        preferred_labels=("a",), flipped=True,
    )
    empty = QueryDiagnostics(
        record_count=0, gap=0, smooth_sensitivity=1.0,
        preferred_labels=(), flipped=False,
    )
    report = summarize_leaf_diagnostics([[occupied, empty], [empty, empty]])
    assert report.empty_leaf_fraction_mean == pytest.approx(0.75)
    assert report.flip_fraction == 1.0
    assert report.mean_smooth_sensitivity == pytest.approx(0.2)


def test_cross_validate_shapes_and_determinism():
    data = generate(3, 0, 300, np.random.default_rng(5))
    config = TrainConfig(epsilon=1.0, tau=5, depth_override=4, seed=9)
    metrics, diagnostics = cross_validate(data, config, folds=3, repeats=2)
    assert len(metrics.accuracy.samples) == 6
    assert metrics.auc is not None and len(metrics.auc.samples) == 6
    assert metrics.f1 is not None and len(metrics.f1.samples) == 6
    assert 0.0 <= metrics.accuracy.mean <= 1.0
    assert 0.0 <= diagnostics.empty_leaf_fraction_mean <= 1.0
    assert 0.0 <= diagnostics.flip_fraction <= 1.0

    again, _ = cross_validate(data, config, folds=3, repeats=2)
    assert again == metrics


def test_cross_validate_multiclass_reports_accuracy_only():
    schema = FeatureSchema(
        features=(ContinuousFeature("f", -10.0, 10.0),),
        class_labels=("a", "b", "c"),
    )
    rng = np.random.default_rng(0)
    n = 90
    data = Dataset(
        schema,
        {"f": rng.uniform(-10, 10, size=n)},
        rng.integers(0, 3, size=n),
    )
    config = TrainConfig(epsilon=1.0, tau=2, depth_override=2, seed=1)
    metrics, _ = cross_validate(data, config, folds=3, repeats=1)
    assert metrics.auc is None
    assert metrics.f1 is None
    assert len(metrics.accuracy.samples) == 3


def test_cross_validate_validation():
    data = generate(3, 0, 50, np.random.default_rng(5))
    config = TrainConfig(epsilon=1.0, tau=2, depth_override=2, seed=0)
    with pytest.raises(ValueError):
        cross_validate(data, config, folds=1, repeats=1)
    with pytest.raises(ValueError):
        cross_validate(data, config, folds=51, repeats=1)
    with pytest.raises(ValueError):
        cross_validate(data, config, folds=2, repeats=0)


def test_report_to_dict_is_json_ready():
    data = generate(3, 0, 200, np.random.default_rng(6))
    config = TrainConfig(epsilon=1.0, tau=4, depth_override=3, seed=2)
    metrics, diagnostics = cross_validate(data, config, folds=2, repeats=1)
    document = report_to_dict(config, 2, 1, metrics, diagnostics)
    parsed = json.loads(json.dumps(document))
    assert parsed["folds"] == 2
    assert parsed["repeats"] == 1
    assert parsed["config"]["epsilon"] == 1.0
    assert len(parsed["metrics"]["accuracy"]["samples"]) == 2
    assert "empty_leaf_fraction" in parsed["diagnostics"]
    assert "flip_fraction" in parsed["diagnostics"]
    assert "mean_smooth_sensitivity" in parsed["diagnostics"]


def test_collect_diagnostics_requires_the_flag():
    data = generate(3, 0, 100, np.random.default_rng(7))
    model = build_forest(data, TrainConfig(epsilon=1.0, tau=2, seed=0))
    with pytest.raises(ValueError):
        collect_diagnostics(model)
