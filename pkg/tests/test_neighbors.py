import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_data, random_data
from rebalance import neighbors as nb
from rebalance.errors import DistanceMismatch, NotEnoughNeighbors


def oracle_knn(x, rows, q, k, exclude=None, nominal=None, penalty=0.0):
    """Exhaustive scan, sorted by (distance, row)."""
    cand = []
    for r in rows:
        if r == exclude:
            continue
        diff = x[r] - q
        if nominal is not None:
            d2 = float((diff[~nominal] ** 2).sum()) + penalty**2 * float((diff[nominal] != 0).sum())
        else:
            d2 = float((diff**2).sum())
        cand.append((d2, int(r)))
    cand.sort()
    return [r for _, r in cand[:k]]


def test_class_filter_size():
    data = make_data([0.0, 1.0, 2.0], [0, 1, 1])
    index = nb.build_index(data, [0, 1, 2], class_filter=1)
    assert len(index) == 2


def test_euclidean_with_nominal_rejected():
    data = make_data([[0.0, 1], [1.0, 0]], [0, 1], nominal=(1,))
    with pytest.raises(DistanceMismatch):
        nb.build_index(data, [0, 1], nb.Euclidean())


def test_line_example():
    data = make_data([0.0, 1.0, 2.0, 10.0], [0, 0, 1, 1])
    index = nb.build_index(data, range(4))
    assert [r for r, _ in nb.knn(index, 0, 2)] == [1, 2]
    assert [d for _, d in nb.knn(index, 0, 2)] == [1.0, 2.0]


def test_tie_goes_to_lower_row():
    data = make_data([1.0, -1.0, 0.0], [0, 1, 0])
    index = nb.build_index(data, range(3))
    assert nb.knn(index, 2, 1)[0][0] == 0
    pair = nb.build_index(data, [0, 1])
    assert nb.knn(pair, np.array([0.0]), 1)[0][0] == 0


def test_k_too_large():
    data = make_data([0.0, 1.0, 2.0], [0, 1, 0])
    index = nb.build_index(data, range(3))
    with pytest.raises(NotEnoughNeighbors):
        nb.knn(index, 0, 3)
    assert len(nb.knn(index, np.array([5.0]), 3)) == 3


def test_200_points_against_scan(rng):
    data = random_data(rng, 200, d=3)
    index = nb.build_index(data, range(200))
    for q in range(0, 200, 7):
        got = [r for r, _ in nb.knn(index, q, 6)]
        assert got == oracle_knn(data.features, range(200), data.features[q], 6, exclude=q)


def test_500_points_k7_external_queries(rng):
    data = random_data(rng, 500, d=5)
    index = nb.build_index(data, range(500))
    for q in rng.normal(size=(50, 5)):
        got = [r for r, _ in nb.knn(index, q, 7)]
        assert got == oracle_knn(data.features, range(500), q, 7)


def test_heterogeneous_against_scan(rng):
    data = random_data(rng, 120, d=4, nominal=(1, 3))
    dist = nb.Heterogeneous(0.8)
    index = nb.build_index(data, range(120), dist)
    for q in range(0, 120, 11):
        got = [r for r, _ in nb.knn(index, q, 5)]
        assert got == oracle_knn(data.features, range(120), data.features[q], 5, q, data.nominal_mask, 0.8)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(5, 1000), d=st.integers(1, 4), k=st.integers(1, 4), seed=st.integers(0, 10**6),
       grid=st.booleans())
def test_exactness_property(n, d, k, seed, grid):
    rng = np.random.default_rng(seed)
    # integer grids force many distance ties
    x = rng.integers(0, 3, (n, d)).astype(float) if grid else rng.normal(size=(n, d))
    data = make_data(x, rng.integers(0, 2, n))
    rows = np.arange(n)
    index = nb.build_index(data, rows)
    queries = rng.choice(n, size=min(n, 5), replace=False)
    idx, dist = nb.member_neighbors(index, queries, k)
    for q, got, dd in zip(queries, idx, dist):
        assert got.tolist() == oracle_knn(x, rows, x[q], k, exclude=q)
        assert q not in got
        assert (np.diff(dd) >= 0).all()


def test_distance_symmetry(rng):
    data = random_data(rng, 40, d=3, nominal=(2,))
    for kind in (nb.Heterogeneous(1.3), nb.Heterogeneous(0.0)):
        index = nb.build_index(data, range(40), kind)
        for a, b in rng.integers(0, 40, (20, 2)):
            assert abs(nb.distance(index, a, b) - nb.distance(index, b, a)) <= 1e-12
    cont = random_data(rng, 40, d=3)
    index = nb.build_index(cont, range(40))
    assert nb.distance(index, 3, 9) == nb.distance(index, 9, 3)


def test_heterogeneous_penalty_rule():
    a = np.array([[0.0, 1.0, 2.0]])
    b = np.array([[3.0, 1.0, 5.0]])
    nominal = np.array([False, True, True])
    assert nb.squared_distances(a, b, nominal, 2.0)[0, 0] == 9.0 + 4.0


def test_default_penalty_is_median_std():
    x = np.array([[0.0, 0, 1], [2.0, 10, 0], [4.0, 20, 1]])
    data = make_data(x, [0, 1, 1], nominal=(2,))
    assert nb.median_continuous_std(data, [0, 1, 2]) == pytest.approx(np.median(x[:, :2].std(axis=0)))
