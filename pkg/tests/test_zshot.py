import numpy as np
import pytest

from oodkit.embed_store import EmbeddingSet
from oodkit.zshot import CandidateLabels, score_zshot, similarity_logits


def _images(rows):
    return EmbeddingSet(data=np.asarray(rows, dtype=np.float32))


def test_raw_dot_product_logits():
    labels = CandidateLabels(
        in_text=np.array([[1.0, 0.0]]),
        in_names=["cat"],
        out_text=np.array([[0.0, 1.0]]),
        out_names=["dog"],
        normalize=False,
        temperature=1.0,
    )
    ls = similarity_logits(_images([[1.0, 0.0]]), labels)
    assert np.allclose(ls.logits, [[1.0, 0.0]])
    assert ls.in_indices == (0,)


def test_normalization_scale_invariance():
    labels = CandidateLabels(
        in_text=np.array([[1.0, 0.0]]),
        in_names=["a"],
        out_text=np.array([[0.0, 1.0]]),
        out_names=["b"],
    )
    a = similarity_logits(_images([[1.0, 0.0]]), labels).logits
    b = similarity_logits(_images([[2.0, 0.0]]), labels).logits
    assert np.allclose(a, b)


def test_orthogonal_image_uniform():
    labels = CandidateLabels(
        in_text=np.array([[1.0, 0.0, 0.0]]),
        in_names=["a"],
        out_text=np.array([[0.0, 1.0, 0.0]]),
        out_names=["b"],
        normalize=False,
        temperature=1.0,
    )
    scores = score_zshot(_images([[0.0, 0.0, 1.0]]), labels)
    assert scores[0] == pytest.approx(0.5)


def test_out_aligned_hand_softmax():
    # logits [0, 5]: p(in) = 1 / (1 + e^5)
    labels = CandidateLabels(
        in_text=np.array([[1.0, 0.0]]),
        in_names=["a"],
        out_text=np.array([[0.0, 5.0]]),
        out_names=["b"],
        normalize=False,
        temperature=1.0,
    )
    scores = score_zshot(_images([[0.0, 1.0]]), labels)
    assert scores[0] == pytest.approx(1.0 / (1.0 + np.exp(5.0)), abs=1e-6)


def test_all_zero_logits_k3_o1():
    labels = CandidateLabels(
        in_text=np.zeros((3, 2)),
        in_names=["a", "b", "c"],
        out_text=np.zeros((1, 2)),
        out_names=["d"],
        normalize=False,
        temperature=1.0,
    )
    scores = score_zshot(_images([[1.0, 1.0]]), labels)
    assert scores[0] == pytest.approx(0.75)


def test_baseline_msp_fallback_uniform():
    labels = CandidateLabels(
        in_text=np.zeros((10, 2)),
        in_names=[str(i) for i in range(10)],
        normalize=False,
        temperature=1.0,
    )
    scores = score_zshot(_images([[1.0, 0.0]]), labels)
    assert scores[0] == pytest.approx(0.1)


def test_in_plus_out_mass_is_one(rng):
    from oodkit.probs import softmax

    labels = CandidateLabels(
        in_text=rng.normal(size=(4, 6)),
        in_names=list("abcd"),
        out_text=rng.normal(size=(3, 6)),
        out_names=list("efg"),
    )
    images = _images(rng.normal(size=(20, 6)))
    scores = score_zshot(images, labels)
    ls = similarity_logits(images, labels)
    out_mass = softmax(ls.logits)[:, 4:].sum(axis=1)
    assert np.allclose(scores + out_mass, 1.0, atol=1e-6)


def test_permutation_invariance(rng):
    in_text = rng.normal(size=(5, 4))
    out_text = rng.normal(size=(3, 4))
    images = _images(rng.normal(size=(10, 4)))
    base = score_zshot(
        images,
        CandidateLabels(in_text=in_text, in_names=list("abcde"),
                        out_text=out_text, out_names=list("xyz")),
    )
    perm_in = rng.permutation(5)
    perm_out = rng.permutation(3)
    permuted = score_zshot(
        images,
        CandidateLabels(
            in_text=in_text[perm_in],
            in_names=[list("abcde")[i] for i in perm_in],
            out_text=out_text[perm_out],
            out_names=[list("xyz")[i] for i in perm_out],
        ),
    )
    assert np.allclose(base, permuted, atol=1e-6)


def test_image_rescale_invariance_under_normalize(rng):
    labels = CandidateLabels(
        in_text=rng.normal(size=(3, 5)),
        in_names=list("abc"),
        out_text=rng.normal(size=(2, 5)),
        out_names=list("de"),
    )
    imgs = rng.normal(size=(8, 5))
    scales = rng.uniform(0.1, 10.0, size=(8, 1))
    a = score_zshot(_images(imgs), labels)
    b = score_zshot(_images(imgs * scales), labels)
    assert np.allclose(a, b, atol=1e-6)


def test_dimension_mismatch():
    labels = CandidateLabels(in_text=np.ones((1, 3)), in_names=["a"])
    with pytest.raises(ValueError, match="dim"):
        similarity_logits(_images([[1.0, 0.0]]), labels)


def test_zero_norm_row_rejected():
    labels = CandidateLabels(in_text=np.ones((1, 2)), in_names=["a"])
    with pytest.raises(ValueError, match="zero-norm"):
        similarity_logits(_images([[0.0, 0.0]]), labels)
    with pytest.raises(ValueError, match="zero-norm"):
        CandidateLabels(in_text=np.zeros((1, 2)), in_names=["a"])
