import numpy as np
import pytest

from dpforest.synth import PRESETS, generate, generate_preset, get_preset


def test_preset_table():
    sizes = {name: (p.informative, p.random) for name, p in PRESETS.items()}
    assert sizes == {
        "SynthA": (5, 0),
        "SynthB": (10, 0),
        "SynthC": (15, 0),
        "SynthD": (10, 5),
        "SynthE": (5, 10),
        "SynthF": (5, 5),
        "SynthG": (10, 10),
    }


def test_get_preset_is_case_insensitive():
    assert get_preset("synthf") is PRESETS["SynthF"]
    with pytest.raises(ValueError):
        get_preset("SynthZ")


def test_generate_shapes_and_balance():
    data = generate_preset("SynthD", 500, np.random.default_rng(0))
    assert len(data) == 500
    schema = data.schema
    assert schema.num_continuous == 15
    assert schema.num_discrete == 0
    assert schema.class_labels == ("c0", "c1")
    counts = data.label_counts()
    assert counts == {"c0": 250, "c1": 250}


def test_bounds_pad_the_observed_range():
    data = generate(3, 1, 400, np.random.default_rng(1))
    for feat in data.schema.features:
        column = data.column(feat.name)
        observed = column.max() - column.min()
        assert feat.lower < column.min()
        assert feat.upper > column.max()
        assert feat.lower == pytest.approx(column.min() - 0.05 * observed)
        assert feat.upper == pytest.approx(column.max() + 0.05 * observed)


def test_generation_is_seeded():
    a = generate(4, 2, 100, np.random.default_rng(7))
    b = generate(4, 2, 100, np.random.default_rng(7))
    for name in a.schema.feature_names:
        assert np.array_equal(a.column(name), b.column(name))
    assert np.array_equal(a.label_codes, b.label_codes)
    c = generate(4, 2, 100, np.random.default_rng(8))
    assert not np.array_equal(a.column("f0"), c.column("f0"))


def test_classes_are_separated_on_informative_features_only():
    data = generate(4, 4, 4000, np.random.default_rng(3))
    labels = data.label_codes
    # class means should differ along the mixed informative block but not
    # along the pure-noise block
    informative_shift = 0.0
    noise_shift = 0.0
    for i in range(4):
        column = data.column(f"f{i}")
        informative_shift += abs(column[labels == 0].mean() - column[labels == 1].mean())
    for i in range(4, 8):
        column = data.column(f"f{i}")
        noise_shift += abs(column[labels == 0].mean() - column[labels == 1].mean())
    assert informative_shift > 1.0
    assert noise_shift < 0.5


def test_rows_are_shuffled():
    data = generate(3, 0, 200, np.random.default_rng(2))
    first_half = data.label_codes[:100]
    assert 0 < first_half.sum() < 100  # both classes appear early


def test_generate_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        generate(0, 3, 100, rng)
    with pytest.raises(ValueError):
        generate(3, -1, 100, rng)
    with pytest.raises(ValueError):
        generate(3, 0, 101, rng)
    with pytest.raises(ValueError):
        generate(3, 0, 0, rng)
