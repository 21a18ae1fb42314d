"""Shuffled k-fold index splits shared by grid search and evaluation."""

import numpy as np


def kfold_split(n, k=5, seed=0):
    """Partition ``range(n)`` into ``k`` shuffled folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got k={k}")
    if n < k:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def train_indices(n, test):
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return np.flatnonzero(mask)
