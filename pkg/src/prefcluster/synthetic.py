"""Seeded synthetic Jester-style corpus with planted reader archetypes."""

import numpy as np

from .ratings_io import MISSING_RAW, RawRatingMatrix


def planted_corpus(n_users=1500, n_jokes=100, n_archetypes=3, missing_rate=0.3, flip_rate=0.05, seed=0):
    """Return ``(RawRatingMatrix, archetypes, membership)``.

    Each archetype is a random like/dislike vector; every user copies one
    archetype, flips each preference with probability ``flip_rate``, turns it
    into a rating in the matching band, and hides a ``missing_rate`` share of
    entries behind the 99 sentinel (keeping at least one observed rating).
    """
    rng = np.random.default_rng(seed)
    archetypes = rng.integers(0, 2, size=(n_archetypes, n_jokes), dtype=np.int8)
    membership = rng.integers(0, n_archetypes, size=n_users)
    likes = archetypes[membership].copy()
    flips = rng.random(likes.shape) < flip_rate
    likes[flips] = 1 - likes[flips]
    like_scores = rng.uniform(7.0, 10.0, size=likes.shape)
    dislike_scores = rng.uniform(-10.0, 6.99, size=likes.shape)
    ratings = np.round(np.where(likes == 1, like_scores, dislike_scores), 2)
    hidden = rng.random(likes.shape) < missing_rate
    hidden[hidden.all(axis=1), 0] = False
    ratings[hidden] = MISSING_RAW
    return RawRatingMatrix(ratings), archetypes, membership


def write_ratings(path, raw, with_count_column=False):
    """Write a raw matrix as comma-separated text, optionally with a leading rated-count column."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in raw.values:
            fields = ["99" if v == MISSING_RAW else f"{v:.2f}" for v in row]
            if with_count_column:
                fields.insert(0, str(int(np.count_nonzero(row != MISSING_RAW))))
            fh.write(",".join(fields) + "\n")
