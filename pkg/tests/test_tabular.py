import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_data
from rebalance.errors import ClassTooSmall, NotBinary, RebalanceError
from rebalance.tabular import (
    NOMINAL, ORIGINAL, SYNTHETIC, Dataset, SyntheticRecord, fit_standardizer, inverse_transform,
    load_csv, save_csv, stratified_split, transform,
)

WBC = "data/wbc.csv"


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_wbc_counts():
    data = load_csv(WBC, "diagnosis", exclude_columns=["id"])
    assert data.n_rows == 569
    assert data.n_features == 30
    assert data.class_counts() == {0: 357, 1: 212}
    assert data.label_names == ("B", "M")
    assert (data.row_provenance == ORIGINAL).all()


def test_two_row_file(tmp_path):
    p = write(tmp_path / "t.csv", "a,b,label\n1,2,x\n3,4,y\n")
    data = load_csv(p, "label")
    assert data.class_counts() == {0: 1, 1: 1}
    # count tie goes to the lexicographically smaller label
    assert data.label_names == ("y", "x")


def test_three_labels_rejected(tmp_path):
    p = write(tmp_path / "t.csv", "a,label\n1,x\n2,y\n3,z\n")
    with pytest.raises(NotBinary):
        load_csv(p, "label")


def test_non_numeric_cell(tmp_path):
    p = write(tmp_path / "t.csv", "a,label\n1,x\noops,y\n")
    with pytest.raises(RebalanceError):
        load_csv(p, "label")


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_csv(tmp_path / "nope.csv", "label")


def test_minority_coded_one(tmp_path):
    p = write(tmp_path / "t.csv", "a,label\n1,common\n2,common\n3,rare\n")
    data = load_csv(p, "label")
    assert data.labels.tolist() == [0, 0, 1]


def test_nominal_codes_and_round_trip(tmp_path):
    p = write(tmp_path / "t.csv", "c,a,label\nred,0.1,p\nblue,0.2,n\nred,0.30000000000000004,n\n")
    data = load_csv(p, "label", nominal_columns=["c"])
    assert data.column_kinds[0] == NOMINAL
    assert data.features[:, 0].tolist() == [1.0, 0.0, 1.0]
    out = tmp_path / "out.csv"
    save_csv(data, out)
    sidecar = json.loads((tmp_path / "out.csv.categories.json").read_text())
    assert sidecar
    again = load_csv(out, "label", nominal_columns=["c"])
    np.testing.assert_array_equal(again.features, data.features)
    np.testing.assert_array_equal(again.labels, data.labels)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=4, max_size=20))
def test_csv_round_trip_bit_exact(tmp_path_factory, values):
    x = np.array(values)[:, None]
    y = np.arange(len(values)) % 2
    data = make_data(x, y)
    path = tmp_path_factory.mktemp("rt") / "d.csv"
    save_csv(data, path)
    again = load_csv(path, "label")
    if again.label_names != data.label_names:
        # label text "0"/"1" are tied, so coding can flip
        again_y = 1 - again.labels
    else:
        again_y = again.labels
    assert again.features.tobytes() == data.features.tobytes()
    np.testing.assert_array_equal(again_y, y)


def test_wbc_split_sizes():
    data = load_csv(WBC, "diagnosis", exclude_columns=["id"])
    s = stratified_split(data, (0.8, 0.1, 0.1), seed=3)
    assert (len(s.train), len(s.validation), len(s.holdout)) == (455, 57, 57)
    for part in (s.train, s.validation, s.holdout):
        frac = data.labels[part].mean()
        assert abs(frac - 212 / 569) < 0.02


def test_small_split_exact():
    data = make_data(np.arange(10.0), [0, 1] * 5)
    s = stratified_split(data, (0.8, 0.1, 0.1), seed=0)
    assert (len(s.train), len(s.validation), len(s.holdout)) == (8, 1, 1)
    assert data.class_counts(s.train) == {0: 4, 1: 4}


def test_split_deterministic_and_seed_sensitive():
    data = make_data(np.arange(100.0), [0] * 70 + [1] * 30)
    assert stratified_split(data, seed=5) == stratified_split(data, seed=5)
    assert stratified_split(data, seed=5).holdout != stratified_split(data, seed=6).holdout


def test_split_class_too_small():
    data = make_data(np.arange(6.0), [0, 0, 0, 0, 1, 1])
    with pytest.raises(ClassTooSmall):
        stratified_split(data)


@settings(max_examples=60, deadline=None)
@given(n0=st.integers(3, 80), n1=st.integers(3, 80), seed=st.integers(0, 2**32))
def test_split_partition_and_stratification(n0, n1, seed):
    data = make_data(np.arange(n0 + n1, dtype=float), [0] * n0 + [1] * n1)
    s = stratified_split(data, (0.8, 0.1, 0.1), seed)
    parts = [set(s.train), set(s.validation), set(s.holdout)]
    assert set().union(*parts) == set(range(n0 + n1))
    assert sum(map(len, parts)) == n0 + n1
    for part, f in zip((s.train, s.validation, s.holdout), (0.8, 0.1, 0.1)):
        for c, n in ((0, n0), (1, n1)):
            got = int((data.labels[part] == c).sum())
            expect = f * len(part) * n / (n0 + n1) / f if len(part) else 0
            assert abs(got - expect) <= 1 + 1e-9
        assert len(s.validation) >= 1 or n0 + n1 < 10


def test_standardizer_hand_values():
    data = make_data([2.0, 4.0, 6.0], [0, 1, 0])
    std = fit_standardizer(data, [0, 1, 2])
    assert std.mean[0] == 4.0
    assert math.isclose(std.std[0], math.sqrt(8 / 3), rel_tol=1e-15)
    assert transform(std, data).features[1, 0] == 0.0


def test_standardizer_constant_and_nominal():
    data = make_data([[5.0, 1.0], [5.0, 2.0], [5.0, 0.0]], [0, 1, 0], nominal=(1,))
    out = transform(fit_standardizer(data, [0, 1, 2]), data)
    assert out.features[:, 0].tolist() == [0.0, 0.0, 0.0]
    assert out.features[:, 1].tobytes() == data.features[:, 1].tobytes()


def test_standardizer_fits_given_rows_only():
    data = make_data([0.0, 2.0, 100.0], [0, 1, 0])
    std = fit_standardizer(data, [0, 1])
    assert std.mean[0] == 1.0


def test_standardizer_empty_rows():
    with pytest.raises(RebalanceError):
        fit_standardizer(make_data([1.0, 2.0], [0, 1]), [])


def test_standardizer_moments_and_round_trip(rng):
    x = rng.normal(3, 7, size=(50, 4))
    data = make_data(x, (np.arange(50) % 3 == 0).astype(int))
    std = fit_standardizer(data, range(50))
    z = transform(std, data).features
    assert np.abs(z.mean(axis=0)).max() < 1e-9
    assert np.abs(z.std(axis=0) - 1).max() < 1e-9
    back = inverse_transform(std, transform(std, data)).features
    assert np.abs(back - x).max() < 1e-9


def test_dataset_is_immutable():
    data = make_data([1.0, 2.0], [0, 1])
    with pytest.raises(ValueError):
        data.features[0, 0] = 9


def test_dataset_rejects_bad_labels():
    with pytest.raises(NotBinary):
        make_data([1.0, 2.0], [0, 2])


def test_subset_remaps_synthesis():
    base = make_data([0.0, 1.0, 2.0], [0, 1, 1])
    rec = SyntheticRecord(3, "smote", 1, 2, 0.5)
    data = base.with_synthetic([[1.5]], [1], [rec])
    assert data.row_provenance.tolist() == [ORIGINAL] * 3 + [SYNTHETIC]
    sub = data.subset([3, 0])
    assert sub.synthesis[0].row_id == 0
    assert data.subset([0, 1]).synthesis == ()


def test_from_arrays_copies_input():
    y = np.array([0, 1])
    Dataset.from_arrays([[1.0], [2.0]], y)
    y[0] = 1
    assert y.flags.writeable
