"""Scikit-learn style facade over the training pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_random_state

from .crossval import (
    Bandwidths,
    loo_quality_curve,
    quality_kernel,
    select_alpha,
    silverman_bandwidths,
)
from .datatable import DataTable
from .errors import ConfigError
from .growth import StopCondition, grow
from .pruning import apply_alpha, prune_sequence
from .smoothing import SmearedTree
from .tree import Box, bounding_box


class DensityEstimationTree(BaseEstimator):
    """Density estimator on an adaptively partitioned box.

    Fitting grows a piecewise-constant density tree, builds its pruning
    profile, and selects the regularization strength by cross-validation
    against a triangular-kernel density estimate (or leave-one-out on
    small samples).

    Parameters
    ----------
    min_count : int, default=10
        A split is rejected when either child would hold fewer entries.
    min_widths : sequence of float, optional
        Minimal leaf width per dimension; cuts creating narrower leaves
        are rejected.
    max_leaves : int, optional
        Safety cap on the number of leaves (best splits first).
    complexity : {'leaves', 'depth'}, default='leaves'
        Complexity function used by the pruning profile.
    cv : {'kernel', 'loo', 'none'}, default='kernel'
        Regularization selection: kernel comparison, leave-one-out, or
        a fixed ``alpha``.
    alpha : float, optional
        Regularization strength applied when ``cv='none'`` (default 0).
    bandwidths : sequence of float, optional
        Kernel widths per dimension; defaults to the Silverman-style
        rule scaled by ``silverman_factor``.
    silverman_factor : float, default=2.0
    box : Box, optional
        Explicit support; defaults to the padded data bounding box.
    loo_cap : int, default=500
        Largest sample accepted by leave-one-out selection.

    Attributes
    ----------
    tree_ : DensityTree
        The pruned model.
    full_tree_ : DensityTree
        The tree before pruning.
    profile_ : PruneProfile
    alpha_ : float
    bandwidths_ : Bandwidths or None
    quality_curve_ : QualityCurve or None
    n_features_in_ : int
    """

    def __init__(
        self,
        min_count=10,
        min_widths=None,
        max_leaves=None,
        complexity="leaves",
        cv="kernel",
        alpha=None,
        bandwidths=None,
        silverman_factor=2.0,
        box=None,
        loo_cap=500,
    ):
        self.min_count = min_count
        self.min_widths = min_widths
        self.max_leaves = max_leaves
        self.complexity = complexity
        self.cv = cv
        self.alpha = alpha
        self.bandwidths = bandwidths
        self.silverman_factor = silverman_factor
        self.box = box
        self.loo_cap = loo_cap

    def fit(self, X, y=None):
        """Grow, prune, and cross-validate on X of shape (n_samples, n_features)."""
        X = check_array(X, ensure_2d=True, dtype=np.float64, ensure_all_finite=True)
        self.n_features_in_ = X.shape[1]
        data = DataTable(X, [f"x{k}" for k in range(X.shape[1])])
        stop = StopCondition(
            min_count=self.min_count,
            min_widths=self.min_widths,
            max_leaves=self.max_leaves,
        )
        box = self.box if self.box is not None else bounding_box(data)
        if not isinstance(box, Box):
            box = Box(*box)
        full = grow(data, stop, box=box)
        profile = prune_sequence(full, self.complexity)

        bw = None
        curve = None
        if self.cv == "kernel":
            bw = (
                Bandwidths(self.bandwidths)
                if self.bandwidths is not None
                else silverman_bandwidths(data, self.silverman_factor)
            )
            curve = quality_kernel(full, profile, data, bw)
            alpha = select_alpha(curve)
        elif self.cv == "loo":
            curve = loo_quality_curve(
                data, stop, self.complexity, box=box, cap=self.loo_cap
            )
            alpha = select_alpha(curve)
        elif self.cv == "none":
            alpha = float(self.alpha) if self.alpha is not None else 0.0
        else:
            raise ConfigError(f"cv must be kernel, loo, or none, got {self.cv!r}")

        self.full_tree_ = full
        self.profile_ = profile
        self.bandwidths_ = bw
        self.quality_curve_ = curve
        self.alpha_ = float(alpha)
        self.tree_ = apply_alpha(full, profile, alpha)
        return self

    def _checked(self, X) -> np.ndarray:
        check_is_fitted(self, "tree_")
        X = check_array(X, ensure_2d=True, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ConfigError(
                f"X has {X.shape[1]} features, fitted with {self.n_features_in_}"
            )
        return X

    def density(self, X) -> np.ndarray:
        """Density estimate per sample (0 outside the support)."""
        return self.tree_.evaluate_many(self._checked(X))

    def score_samples(self, X) -> np.ndarray:
        """Log density per sample; -inf outside the support."""
        dens = self.density(X)
        with np.errstate(divide="ignore"):
            return np.log(dens)

    def score(self, X, y=None) -> float:
        """Total log density over X."""
        return float(np.sum(self.score_samples(X)))

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Draw samples: leaves by their counts, uniform inside a leaf."""
        check_is_fitted(self, "tree_")
        rng = check_random_state(random_state)
        lo, hi, counts, _ = self.tree_.leaf_arrays()
        probs = counts / counts.sum()
        idx = rng.choice(counts.size, size=n_samples, p=probs)
        u = rng.uniform(size=(n_samples, lo.shape[1]))
        return lo[idx] + u * (hi[idx] - lo[idx])

    def smeared(self, bandwidths=None) -> SmearedTree:
        """Smeared evaluator over the fitted tree."""
        check_is_fitted(self, "tree_")
        if bandwidths is not None:
            bw = Bandwidths(bandwidths)
        elif self.bandwidths_ is not None:
            bw = self.bandwidths_
        else:
            raise ConfigError("no bandwidths available; pass them explicitly")
        return SmearedTree(self.tree_, bw)
