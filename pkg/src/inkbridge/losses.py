"""Forward evaluation of the training-objective terms over exported arrays.

This module scores the objective, it never optimizes it: reconstructions,
discriminator score grids, and sequence scores all arrive from the external
models. Expectations are realized as batch means; L1 terms are element means
so painting- and poem-side values stay comparable across resolutions.
Discriminator scores are clamped to [1e-7, 1 - 1e-7] before any log; a
warning is emitted whenever clamping fires.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationFailure

SCORE_EPSILON = 1e-7


def _clamp_scores(scores: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(scores).all():
        raise ValidationFailure(f"{what}: non-finite score")
    if np.any(scores < 0.0) or np.any(scores > 1.0):
        raise ValidationFailure(f"{what}: scores must lie in [0, 1]")
    clamped = np.clip(scores, SCORE_EPSILON, 1.0 - SCORE_EPSILON)
    hits = int(np.count_nonzero(clamped != scores))
    if hits:
        warnings.warn(f"{what}: clamped {hits} saturated score(s) to [{SCORE_EPSILON}, 1-{SCORE_EPSILON}]")
    return clamped


@dataclass
class ReconPair:
    """An original flat array next to its reconstruction."""

    original: np.ndarray
    reconstruction: np.ndarray

    def __post_init__(self):
        self.original = np.asarray(self.original, dtype=np.float64).ravel()
        self.reconstruction = np.asarray(self.reconstruction, dtype=np.float64).ravel()
        if self.original.size != self.reconstruction.size:
            raise ValidationFailure(
                f"length mismatch: {self.original.size} vs {self.reconstruction.size}"
            )
        if self.original.size == 0:
            raise ValidationFailure("reconstruction pair must be non-empty")
        if not (np.isfinite(self.original).all() and np.isfinite(self.reconstruction).all()):
            raise ValidationFailure("reconstruction pair contains non-finite entries")


@dataclass
class PatchScoreGrid:
    """W x H matrix of per-patch discriminator probabilities."""

    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[0] < 1 or self.scores.shape[1] < 1:
            raise ValidationFailure("score grid must be a 2-D matrix")
        if not np.isfinite(self.scores).all():
            raise ValidationFailure("score grid contains non-finite entries")
        if np.any(self.scores < 0.0) or np.any(self.scores > 1.0):
            raise ValidationFailure("score grid entries must lie in [0, 1]")


@dataclass
class ScalarScoreBatch:
    """Whole-sequence discriminator scores, clamped into the open interval."""

    scores: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.scores, dtype=np.float64).ravel()
        if raw.size == 0:
            raise ValidationFailure("score batch must be non-empty")
        self.scores = _clamp_scores(raw, "score batch")


@dataclass
class LossWeights:
    lambda_sup: float = 1.0
    lambda_adv: float = 1.0

    def __post_init__(self):
        if self.lambda_sup < 0 or self.lambda_adv < 0:
            raise ValidationFailure("loss weights must be non-negative")


def l1_mean(pair: ReconPair) -> float:
    """Mean absolute difference between original and reconstruction."""
    return float(np.abs(pair.original - pair.reconstruction).mean())


def cycle_loss(painting_pairs: list[ReconPair], poem_pairs: list[ReconPair]) -> float:
    """Sum of the two round-trip reconstruction expectations.

    A side with no pairs contributes zero and triggers a warning, since the
    value then covers only half the objective term.
    """
    if not painting_pairs and not poem_pairs:
        raise ValidationFailure("cycle loss needs at least one reconstruction pair")
    total = 0.0
    for name, pairs in (("painting", painting_pairs), ("poem", poem_pairs)):
        if pairs:
            total += math.fsum(l1_mean(p) for p in pairs) / len(pairs)
        else:
            warnings.warn(f"cycle loss: no {name}-side pairs supplied; that term is 0")
    return total


def supervised_loss(
    pred_poem_vs_true: list[ReconPair],
    pred_painting_vs_true: list[ReconPair],
) -> float:
    """Mean over paired examples of the poem-side plus painting-side L1 terms."""
    if len(pred_poem_vs_true) != len(pred_painting_vs_true):
        raise ValidationFailure(
            "supervised loss needs matching poem and painting lists "
            f"({len(pred_poem_vs_true)} vs {len(pred_painting_vs_true)})"
        )
    if not pred_poem_vs_true:
        raise ValidationFailure("supervised loss undefined without paired data")
    terms = [
        l1_mean(poem) + l1_mean(painting)
        for poem, painting in zip(pred_poem_vs_true, pred_painting_vs_true)
    ]
    return math.fsum(terms) / len(terms)


def adv_generator_seq(fake_scores: ScalarScoreBatch, non_saturating: bool = False) -> float:
    """Generator-side sequence adversarial term.

    The published minimax form is E[log(1 - D(fake))], which the generator
    drives down; ``non_saturating`` switches to the common -E[log D(fake)]
    variant instead.
    """
    if non_saturating:
        return float(-np.log(fake_scores.scores).mean())
    return float(np.log1p(-fake_scores.scores).mean())


def adv_discriminator_seq(real_scores: ScalarScoreBatch, fake_scores: ScalarScoreBatch) -> float:
    """Two-term sequence adversarial value E[log D(real)] + E[log(1 - D(fake))]."""
    return float(np.log(real_scores.scores).mean() + np.log1p(-fake_scores.scores).mean())


def _grid_bce(grid: PatchScoreGrid, target_real: bool) -> float:
    scores = _clamp_scores(grid.scores, "patch grid")
    if target_real:
        return float(-np.log(scores).mean())
    return float(-np.log1p(-scores).mean())


def patch_generator_loss(grids: list[PatchScoreGrid]) -> float:
    """Mean over grids of the per-patch BCE against an all-ones target."""
    if not grids:
        raise ValidationFailure("patch generator loss needs at least one grid")
    return math.fsum(_grid_bce(g, target_real=True) for g in grids) / len(grids)


def patch_discriminator_loss(
    real_grids: list[PatchScoreGrid], fake_grids: list[PatchScoreGrid]
) -> float:
    """Per-patch BCE of real grids against ones plus fake grids against zeros."""
    if not real_grids or not fake_grids:
        raise ValidationFailure("patch discriminator loss needs real and fake grids")
    real = math.fsum(_grid_bce(g, target_real=True) for g in real_grids) / len(real_grids)
    fake = math.fsum(_grid_bce(g, target_real=False) for g in fake_grids) / len(fake_grids)
    return real + fake


def full_objective(
    cyc: float, sup: float, adv_seq: float, adv_patch: float, w: LossWeights
) -> float:
    """Weighted combination cyc + lambda_sup * sup + lambda_adv * (adv_seq + adv_patch)."""
    parts = (cyc, sup, adv_seq, adv_patch)
    if not all(math.isfinite(v) for v in parts):
        raise ValidationFailure("objective components must be finite")
    return cyc + w.lambda_sup * sup + w.lambda_adv * (adv_seq + adv_patch)
