"""Painting-side and cross-modal distribution metrics.

The Frechet-style distance compares real vs. generated features of one
modality; the distribution-consistency error (DCE) compares painting and poem
features after a shared PCA reduction, with a shrinkage covariance estimator
to keep the reduced covariances well conditioned at small sample counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus_io import FeatureMatrix, GENRES
from .errors import ValidationFailure
from .linalg import (
    GaussianSummary,
    ledoit_wolf,
    mean_and_cov,
    pca_fit,
    pca_transform,
    wasserstein2_gaussian,
)


@dataclass
class DceConfig:
    pca_dim: int = 100
    estimator: str = "ledoit_wolf"
    pca_fit_scope: str = "pooled"
    standardize: bool = False

    def __post_init__(self):
        if self.pca_dim < 1:
            raise ValidationFailure("pca_dim must be at least 1")
        if self.estimator not in ("ledoit_wolf", "sample"):
            raise ValidationFailure(f"unknown estimator: {self.estimator!r}")
        if self.pca_fit_scope not in ("pooled", "per_domain"):
            raise ValidationFailure(f"unknown pca_fit_scope: {self.pca_fit_scope!r}")


@dataclass
class DceResult:
    value: float
    pca_dim: int
    variance_retained: float
    estimator: str


@dataclass
class LabelSet:
    ids: list[str]
    labels: list[str]

    def __post_init__(self):
        if len(self.ids) != len(self.labels):
            raise ValidationFailure("ids and labels must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise ValidationFailure("label set ids must be unique")
        for item_id, label in zip(self.ids, self.labels):
            if label not in GENRES:
                raise ValidationFailure(f"invalid genre for id {item_id!r}: {label!r}")


def _summarize(X: FeatureMatrix, estimator: str) -> GaussianSummary:
    if estimator == "ledoit_wolf":
        return ledoit_wolf(X).summary
    return mean_and_cov(X)


def frechet_distance(
    real_feats: FeatureMatrix,
    gen_feats: FeatureMatrix,
    estimator: str = "sample",
) -> float:
    """Squared Wasserstein-2 distance between Gaussian fits of two feature sets.

    Defaults to the unbiased sample covariance (divisor n-1), the convention
    of reference Frechet-distance implementations; pass
    estimator="ledoit_wolf" to shrink instead.
    """
    if real_feats.dim != gen_feats.dim:
        raise ValidationFailure(
            f"feature dimension mismatch: {real_feats.dim} vs {gen_feats.dim}"
        )
    return wasserstein2_gaussian(
        _summarize(real_feats, estimator), _summarize(gen_feats, estimator)
    )


def dce_full(
    painting_feats: FeatureMatrix,
    poem_feats: FeatureMatrix,
    cfg: DceConfig | None = None,
) -> DceResult:
    """Distribution-consistency error with reduction diagnostics.

    Pipeline: canonicalize row order (painting rows first, each side sorted by
    id, so the value is symmetric in the arguments), optionally standardize
    pooled columns, fit PCA on the pooled rows, project both sides, estimate
    each domain's Gaussian, and take the squared Wasserstein-2 distance.
    """
    cfg = cfg or DceConfig()
    if painting_feats.dim != poem_feats.dim:
        raise ValidationFailure(
            f"feature dimension mismatch: {painting_feats.dim} vs {poem_feats.dim}"
        )
    for side in (painting_feats, poem_feats):
        if side.n < cfg.pca_dim + 1:
            raise ValidationFailure(
                f"need at least pca_dim + 1 = {cfg.pca_dim + 1} rows per side, got {side.n}"
            )

    first, second = painting_feats.sorted_by_id(), poem_feats.sorted_by_id()
    if first.modality == "poem" and second.modality == "painting":
        first, second = second, first

    pooled_rows = np.vstack([first.data, second.data])
    if cfg.standardize:
        scale = pooled_rows.std(axis=0)
        scale[scale == 0.0] = 1.0
        pooled_rows = pooled_rows / scale
        first = FeatureMatrix(first.ids, first.data / scale, first.modality)
        second = FeatureMatrix(second.ids, second.data / scale, second.modality)
    pooled = FeatureMatrix(first.ids + second.ids, pooled_rows, first.modality)

    if cfg.pca_fit_scope == "pooled":
        model = pca_fit(pooled, cfg.pca_dim)
        reduced_first = pca_transform(model, first)
        reduced_second = pca_transform(model, second)
        retained = model.variance_retained
    else:
        model_first = pca_fit(first, cfg.pca_dim)
        model_second = pca_fit(second, cfg.pca_dim)
        reduced_first = pca_transform(model_first, first)
        reduced_second = pca_transform(model_second, second)
        retained = min(model_first.variance_retained, model_second.variance_retained)

    value = wasserstein2_gaussian(
        _summarize(reduced_first, cfg.estimator),
        _summarize(reduced_second, cfg.estimator),
    )
    return DceResult(
        value=value,
        pca_dim=cfg.pca_dim,
        variance_retained=retained,
        estimator=cfg.estimator,
    )


def dce(
    painting_feats: FeatureMatrix,
    poem_feats: FeatureMatrix,
    cfg: DceConfig | None = None,
) -> float:
    """Squared cross-modal distribution distance (lower is better)."""
    return dce_full(painting_feats, poem_feats, cfg).value


def genre_accuracy(pred: LabelSet, truth: LabelSet) -> float:
    """Fraction of ids whose predicted genre equals the true genre."""
    if set(pred.ids) != set(truth.ids):
        missing = sorted(set(truth.ids) ^ set(pred.ids))
        raise ValidationFailure(f"id sets differ (first mismatch: {missing[0]!r})")
    truth_by_id = dict(zip(truth.ids, truth.labels))
    agree = sum(1 for i, label in zip(pred.ids, pred.labels) if truth_by_id[i] == label)
    return agree / len(pred.ids)
