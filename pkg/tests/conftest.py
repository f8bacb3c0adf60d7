"""Shared fixtures and independent oracles for the test suite."""

import mpmath as mp
import numpy as np
import pytest

from dpforest.data import ContinuousFeature, Dataset, DiscreteFeature, FeatureSchema


def mechanism_probs_oracle(scores, epsilon, sensitivity):
    """Selection probabilities straight from the definition.

    Computed in 80-digit arithmetic with no shifting or log tricks, so it
    is an independent check on the stable implementation.
    """
    with mp.workdps(80):
        eps = mp.mpf(epsilon)
        sens = mp.mpf(sensitivity)
        weights = {
            label: mp.exp(eps * mp.mpf(score) / (2 * sens))
            for label, score in scores.items()
        }
        total = mp.fsum(weights.values())
        return {label: float(w / total) for label, w in weights.items()}


def pairwise_auc_oracle(scores, truth, positive):
    """AUC as the literal pairwise comparison probability."""
    pos = [s for s, t in zip(scores, truth) if t == positive]
    neg = [s for s, t in zip(scores, truth) if t != positive]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


@pytest.fixture
def mixed_schema():
    return FeatureSchema(
        features=(
            ContinuousFeature("age", 0.0, 100.0),
            DiscreteFeature("color", ("red", "green", "blue")),
            ContinuousFeature("weight", -5.0, 5.0),
        ),
        class_labels=("no", "yes"),
    )


@pytest.fixture
def mixed_dataset(mixed_schema):
    rng = np.random.default_rng(42)
    n = 60
    columns = {
        "age": rng.uniform(0.0, 100.0, size=n),
        "color": rng.integers(0, 3, size=n),
        "weight": rng.uniform(-5.0, 5.0, size=n),
    }
    labels = rng.integers(0, 2, size=n)
    return Dataset(mixed_schema, columns, labels)


class CountingDataset(Dataset):
    """Dataset that tallies every record-content access."""

    def __init__(self, schema, columns, label_codes=None):
        super().__init__(schema, columns, label_codes)
        self.reads = 0

    def column(self, name):
        self.reads += 1
        return super().column(name)

    def record(self, index):
        self.reads += 1
        return super().record(index)

    @property
    def label_codes(self):
        self.reads += 1
        return super().label_codes
