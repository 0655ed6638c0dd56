"""Learned pairwise dissimilarity over memory keys.

A single global linear scorer ranks the memories of a leaf against a query
key. Predictions are clipped at zero; with the ``abs_diff`` pair features an
identical pair scores exactly 0 for any weights, which is what makes exact
matches always retrievable. The ``interaction`` variant (component-wise
products) drops that guarantee and exists for ablation runs.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

VARIANTS = ("abs_diff", "interaction")


def featurize_pair(variant: str, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Pair feature vector: |x1 - x2| for abs_diff, x1 * x2 for interaction."""
    if x1.shape != x2.shape:
        raise ValueError(f"key length mismatch: {x1.shape} vs {x2.shape}")
    if variant == "abs_diff":
        return np.abs(x1 - x2)
    if variant == "interaction":
        return x1 * x2
    raise ValueError(f"unknown scorer variant {variant!r}, expected one of {VARIANTS}")


def argmin_score(scores: np.ndarray, keys: np.ndarray, x: np.ndarray) -> int:
    """Index of the lowest score; ties prefer an exact key match, then the
    earliest row (rows are stored in insertion order)."""
    best = scores.min()
    tied = np.flatnonzero(scores == best)
    if tied.size > 1:
        exact = np.flatnonzero(np.all(keys[tied] == x, axis=1))
        if exact.size:
            return int(tied[exact[0]])
    return int(tied[0])


class PairScorer:
    """Clipped linear scorer with ranking-loss updates.

    Weights start as a seeded uniform draw scaled by 1/d, so the untrained
    abs_diff score is a nonnegatively-weighted L1 distance.
    """

    def __init__(self, dim, eta=0.01, variant="abs_diff", rng=None):
        if dim < 1:
            raise ValueError("dim must be positive")
        if eta <= 0:
            raise ValueError("eta must be positive")
        if variant not in VARIANTS:
            raise ValueError(f"unknown scorer variant {variant!r}, expected one of {VARIANTS}")
        rng = np.random.default_rng(rng)
        self.dim = int(dim)
        self.eta = float(eta)
        self.variant = variant
        self.w = rng.random(dim) / dim

    @property
    def interaction(self) -> bool:
        return self.variant == "interaction"

    def predict_score(self, x1: np.ndarray, x2: np.ndarray) -> float:
        z = featurize_pair(self.variant, x1, x2)
        return max(0.0, float(np.dot(self.w, z)))

    def score_rows(self, keys: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Clipped scores of ``x`` against every row of ``keys``."""
        return _kernels.score_rows(self.w, keys, x, self.interaction)

    def update(self, keys: np.ndarray, values: np.ndarray, x: np.ndarray, y: float) -> None:
        """One ranking-loss step against the memories ``(keys, values)``.

        ``keys`` rows must be in insertion order. The currently-retrieved
        memory is compared with the alternative whose value is nearest to
        ``y``; whichever predicts ``y`` better is pulled toward score 0 and
        the other pushed toward 1. No-op with fewer than two memories or
        when both candidates predict equally well.
        """
        n = len(values)
        if n < 2:
            return
        scores = self.score_rows(keys, x)
        b = argmin_score(scores, keys, x)
        gaps = np.abs(values - y)
        gaps[b] = np.inf
        a = int(np.argmin(gaps))
        d_b = abs(float(values[b]) - y)
        d_a = abs(float(values[a]) - y)
        if d_b == d_a:
            return
        z_b = featurize_pair(self.variant, x, keys[b])
        z_a = featurize_pair(self.variant, x, keys[a])
        pre_b = float(np.dot(self.w, z_b))
        pre_a = float(np.dot(self.w, z_a))
        s_b = max(0.0, pre_b)
        s_a = max(0.0, pre_a)
        # Clipped predictions contribute zero gradient when pre-clip <= 0.
        grad = np.zeros(self.dim)
        if d_b < d_a:
            # Retrieved memory predicts better: pull it to 0, push the alt to 1.
            if pre_b > 0.0:
                grad += 2.0 * s_b * z_b
            if pre_a > 0.0:
                grad += 2.0 * (s_a - 1.0) * z_a
        else:
            if pre_a > 0.0:
                grad += 2.0 * s_a * z_a
            if pre_b > 0.0:
                grad += 2.0 * (s_b - 1.0) * z_b
        self.w -= self.eta * grad
