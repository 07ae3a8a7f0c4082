"""scikit-learn transformer applying unbiased sparsification row by row."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .divergences import Divergence, from_name
from .exceptions import SignFlipUnsupported
from .oracle import randk_sample
from .plan import SparsificationPlan
from .us_as import usas_plan
from .us_pi import uspi_plan

ALGORITHMS = ("uspi", "usas", "randk")


class UnbiasedSparsifier(TransformerMixin, BaseEstimator):
    """Replace each row of ``X`` by a random unbiased ``m``-sparse vector.

    Every output row has at most ``m`` nonzero entries and equals the
    input row in expectation. ``"uspi"`` is optimal for any convex
    permutation-invariant divergence and preserves row sums; ``"usas"``
    is optimal for the chosen separable ``divergence``; ``"randk"`` is
    the uniform baseline.

    Parameters
    ----------
    m : int, default=1
        Number of nonzero entries allowed per row.
    algorithm : {"uspi", "usas", "randk"}, default="uspi"
    divergence : str or Divergence, default="sqeuclid"
        ``"sqeuclid"``, ``"kl"``, ``"wsq:<weights-file>"`` or an instance.
    allow_negative : bool, default=False
        Sparsify magnitudes and restore signs. Requires a divergence that
        is symmetric under sign flips.
    random_state : int, numpy Generator or None
        Seeds the draws; an int gives the same output on every call.

    Attributes
    ----------
    divergence_ : Divergence
    n_features_in_ : int
    """

    def __init__(self, m=1, algorithm="uspi", divergence="sqeuclid", allow_negative=False,
                 random_state=None):
        self.m = m
        self.algorithm = algorithm
        self.divergence = divergence
        self.allow_negative = allow_negative
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        div = self.divergence
        self.divergence_ = div if isinstance(div, Divergence) else from_name(div)
        if self.allow_negative and not self.divergence_.sign_symmetric:
            raise SignFlipUnsupported(f"{self.divergence_.describe()} is not sign-symmetric")
        self.n_features_in_ = X.shape[1]
        return self

    def plan(self, p) -> SparsificationPlan:
        """Sampling plan for a single vector ``p``."""
        check_is_fitted(self, "divergence_")
        m = int(self.m)
        if self.algorithm == "usas":
            return usas_plan(self.divergence_, p, m, self.allow_negative)
        return uspi_plan(p, m, self.allow_negative)

    def transform(self, X):
        check_is_fitted(self, "divergence_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but UnbiasedSparsifier was fitted "
                f"with {self.n_features_in_}"
            )
        rng = np.random.default_rng(self.random_state)
        out = np.zeros_like(X)
        for r, row in enumerate(X):
            if self.algorithm == "randk":
                if np.any(row < 0) and not self.allow_negative:
                    raise ValueError("negative entries need allow_negative=True")
                sample = randk_sample(row, int(self.m), rng)
            else:
                sample = self.plan(row).sample(rng)
            out[r] = sample.to_dense()
        return out
