import numpy as np
import pytest

from oodkit.embed_store import EmbeddingSet
from oodkit.maha import (
    GaussianModel,
    fit_gaussian,
    load_gaussian,
    maha_per_class,
    save_gaussian,
    score_maha,
)


def _es(data, labels=None):
    return EmbeddingSet(
        data=np.asarray(data, dtype=np.float32),
        labels=None if labels is None else np.asarray(labels, dtype=np.uint32),
    )


def naive_fit(data, labels):
    """Double-loop recomputation of the per-class means and 1/N covariance."""
    data = np.asarray(data, dtype=np.float64)
    ids = sorted(set(int(v) for v in labels))
    means = {}
    for c in ids:
        rows = [data[i] for i in range(len(labels)) if labels[i] == c]
        means[c] = sum(rows) / len(rows)
    d = data.shape[1]
    cov = np.zeros((d, d))
    for i in range(len(labels)):
        dev = data[i] - means[int(labels[i])]
        cov += np.outer(dev, dev)
    return means, cov / len(labels)


def test_fit_hand_example():
    es = _es([[0, 0], [2, 0], [0, 2], [0, 4]], [0, 0, 1, 1])
    m = fit_gaussian(es, epsilon=0.0)
    assert np.allclose(m.means, [[1, 0], [0, 3]])
    assert np.allclose(m.chol @ m.chol.T, [[0.5, 0], [0, 0.5]])
    assert m.counts == [2, 2]


def test_one_sample_per_class_needs_ridge():
    es = _es([[1, 2], [3, 4]], [0, 1])
    m = fit_gaussian(es)  # zero covariance; default ridge kicks in
    assert m.epsilon > 0
    assert np.all(np.diag(m.chol) > 0)


def test_identical_rows_d1_with_explicit_epsilon():
    es = _es([[5.0], [5.0], [5.0]], [0, 0, 0])
    m = fit_gaussian(es, epsilon=1e-3)
    assert m.epsilon == 1e-3
    assert score_maha(m, _es([[5.0]]))[0] == 0.0


def test_score_identity_covariance():
    m = GaussianModel(
        means=np.zeros((1, 2)), chol=np.eye(2), epsilon=0.0, class_ids=[0], counts=[1]
    )
    assert score_maha(m, _es([[3, 4]]))[0] == pytest.approx(-12.5)


def test_score_zero_at_mean():
    es = _es([[0, 0], [2, 0], [0, 2], [0, 4]], [0, 0, 1, 1])
    m = fit_gaussian(es, epsilon=0.0)
    assert score_maha(m, _es([[1, 0]]))[0] == pytest.approx(0.0, abs=1e-12)


def test_nearest_class_wins_min():
    m = GaussianModel(
        means=np.array([[0.0, 0.0], [10.0, 0.0]]),
        chol=np.eye(2),
        epsilon=0.0,
        class_ids=[0, 1],
        counts=[1, 1],
    )
    assert score_maha(m, _es([[1, 0]]))[0] == pytest.approx(-0.5)


def test_per_class_consistency(rng):
    data = rng.normal(size=(30, 3)).astype(np.float32)
    labels = rng.integers(0, 2, size=30)
    m = fit_gaussian(_es(data, labels))
    q = _es(rng.normal(size=(5, 3)))
    per = maha_per_class(m, q)
    assert per.shape == (5, 2)
    assert np.allclose(score_maha(m, q), -per.min(axis=1))
    assert np.all(score_maha(m, q) <= 0)


def test_per_class_single_class_column(rng):
    data = rng.normal(size=(10, 2)).astype(np.float32)
    m = fit_gaussian(_es(data, np.zeros(10, dtype=int)))
    q = _es(rng.normal(size=(4, 2)))
    assert np.allclose(maha_per_class(m, q)[:, 0], -score_maha(m, q))


def test_fit_matches_naive_recomputation(rng):
    for _ in range(20):
        n = int(rng.integers(5, 60))
        d = int(rng.integers(1, 8))
        data = rng.normal(size=(n, d)).astype(np.float32)
        labels = rng.integers(0, 3, size=n)
        labels[:3] = [0, 1, 2]  # every class populated
        m = fit_gaussian(_es(data, labels), epsilon=0.0)
        means, cov = naive_fit(data, labels)
        for k, cid in enumerate(m.class_ids):
            assert np.allclose(m.means[k], means[cid], atol=1e-6)
        assert np.allclose(m.chol @ m.chol.T, cov, atol=1e-6)


def test_affine_invariance(rng):
    for _ in range(10):
        n, d = 80, 4
        data = rng.normal(size=(n, d))
        labels = rng.integers(0, 3, size=n)
        labels[:3] = [0, 1, 2]
        q = rng.normal(size=(10, d))
        a = rng.normal(size=(d, d)) + 2 * np.eye(d)
        base = score_maha(fit_gaussian(_es(data, labels), epsilon=0.0), _es(q))
        mapped = score_maha(
            fit_gaussian(_es(data @ a, labels), epsilon=0.0), _es(q @ a)
        )
        assert np.allclose(base, mapped, atol=1e-4)


def test_identity_covariance_equals_euclidean(rng):
    means = rng.normal(size=(3, 4))
    m = GaussianModel(
        means=means, chol=np.eye(4), epsilon=0.0, class_ids=[0, 1, 2], counts=[1] * 3
    )
    q = rng.normal(size=(20, 4))
    expected = -0.5 * np.min(
        ((q[:, None, :] - means[None]) ** 2).sum(axis=2), axis=1
    )
    assert np.allclose(score_maha(m, _es(q)), expected, atol=1e-6)


def test_dimension_mismatch():
    m = GaussianModel(
        means=np.zeros((1, 2)), chol=np.eye(2), epsilon=0.0, class_ids=[0], counts=[1]
    )
    with pytest.raises(ValueError, match="dim"):
        score_maha(m, _es([[1, 2, 3]]))


def test_fit_requires_labels():
    with pytest.raises(ValueError):
        fit_gaussian(_es([[1, 2], [3, 4]]))


def test_noncontiguous_class_ids():
    es = _es([[0.0], [1.0], [10.0], [11.0]], [3, 3, 7, 7])
    m = fit_gaussian(es)
    assert m.class_ids == [3, 7]


def test_serialization_round_trip(tmp_path, rng):
    data = rng.normal(size=(40, 5)).astype(np.float32)
    labels = rng.integers(0, 3, size=40)
    labels[:3] = [0, 1, 2]
    m = fit_gaussian(_es(data, labels))
    path = tmp_path / "m.oodgau"
    save_gaussian(m, path)
    back = load_gaussian(path)
    assert np.array_equal(back.means, m.means)
    assert np.array_equal(back.chol, m.chol)
    assert back.epsilon == m.epsilon
    assert back.class_ids == m.class_ids
    assert back.counts == m.counts
