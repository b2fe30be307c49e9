import numpy as np
import pytest

from haptable.errors import MapFormatError
from haptable.gesture.corpus import (DYNAMIC_FRAME_COUNT, corpus_features, generate_corpus, hand_mask, load_corpus,
                                     motion_masks, save_corpus)
from haptable.gesture.features import dynamic_blocks, static_feature_size
from haptable.gesture.frames import count_fingertips
from haptable.gesture.settings import DYNAMIC_LABELS, STATIC_LABELS, GestureSettings


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(per_class=2, seed=1)


def test_corpus_layout(small_corpus):
    assert len(small_corpus.of_kind("static")) == 2 * len(STATIC_LABELS)
    assert len(small_corpus.of_kind("dynamic")) == 2 * len(DYNAMIC_LABELS)
    assert all(len(s.frames) == 1 for s in small_corpus.of_kind("static"))
    assert all(len(s.frames) == DYNAMIC_FRAME_COUNT for s in small_corpus.of_kind("dynamic"))
    assert small_corpus.background.shape == (480, 640)


def test_corpus_is_seeded(small_corpus):
    again = generate_corpus(per_class=2, seed=1)
    for a, b in zip(small_corpus.samples, again.samples):
        assert a.label == b.label
        assert all(np.array_equal(x, y) for x, y in zip(a.frames, b.frames))


def test_corpus_persistence(tmp_path, small_corpus):
    save_corpus(small_corpus, tmp_path / "corpus")
    loaded = load_corpus(tmp_path / "corpus")
    np.testing.assert_array_equal(loaded.background, small_corpus.background)
    assert [(s.kind, s.label) for s in loaded.samples] == [(s.kind, s.label) for s in small_corpus.samples]
    for a, b in zip(loaded.samples, small_corpus.samples):
        assert all(np.array_equal(x, y) for x, y in zip(a.frames, b.frames))


def test_bad_manifest(tmp_path):
    (tmp_path / "manifest.csv").write_text("name,label\nx,y\n")
    with pytest.raises(MapFormatError):
        load_corpus(tmp_path)


def test_static_features(small_corpus):
    features = corpus_features(small_corpus, "static")
    assert features.features.shape == (len(features.labels), static_feature_size(GestureSettings().harmonics))
    assert len(features.labels) + features.skipped == 2 * len(STATIC_LABELS)
    assert features.feature_weights is None


def test_dynamic_features(small_corpus):
    features = corpus_features(small_corpus, "dynamic")
    width = sum(dynamic_blocks(GestureSettings().harmonics))
    assert features.features.shape == (2 * len(DYNAMIC_LABELS), width)
    assert features.feature_weights.shape == (width,)


@pytest.mark.parametrize("label,tips", [("drag", 1), ("zoom", 2), ("rotate", 2), ("spread/pile", 5)])
def test_motion_contacts(label, tips):
    masks = motion_masks(label, np.random.default_rng(2))
    assert len(masks) == DYNAMIC_FRAME_COUNT
    assert count_fingertips(masks[0]) == tips


def test_unknown_labels():
    with pytest.raises(ValueError):
        hand_mask("fist")
    with pytest.raises(ValueError):
        motion_masks("pinch", np.random.default_rng(0))


@pytest.mark.parametrize("label", STATIC_LABELS)
def test_hand_masks_fit_the_image(label):
    mask = hand_mask(label, theta=200.0, scale=1.2)
    assert mask.any()
    assert not (mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())
