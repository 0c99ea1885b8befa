"""Dense statistics kernels: covariance estimators, PCA, PSD square roots,
and the closed-form squared Wasserstein-2 distance between Gaussians.

Everything runs in 64-bit floats on numpy arrays; reductions rely on numpy's
pairwise summation, so results are deterministic for a fixed input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus_io import FeatureMatrix
from .errors import NumericalFailure, ValidationFailure

ESTIMATORS = ("sample", "ledoit_wolf")


@dataclass
class GaussianSummary:
    """Mean/covariance summary of one feature distribution.

    The covariance is symmetrized on construction and must be PSD within
    tolerance; eigenvalues in [-1e-8 * trace/d, 0) are clamped to zero,
    anything lower raises.
    """

    mean: np.ndarray
    cov: np.ndarray
    n: int
    estimator: str = "sample"

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.cov, dtype=np.float64)
        if self.mean.ndim != 1 or cov.shape != (self.mean.size, self.mean.size):
            raise ValidationFailure("mean must be a d-vector and cov a d x d matrix")
        if self.estimator not in ESTIMATORS:
            raise ValidationFailure(f"unknown estimator: {self.estimator!r}")
        cov = 0.5 * (cov + cov.T)
        d = cov.shape[0]
        eigvals, eigvecs = np.linalg.eigh(cov)
        tol = 1e-8 * max(float(np.trace(cov)) / d, 0.0)
        if eigvals[0] < -tol:
            raise NumericalFailure(
                f"covariance is not PSD within tolerance (min eigenvalue {eigvals[0]:.3e})"
            )
        if eigvals[0] < 0.0:
            cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
            cov = 0.5 * (cov + cov.T)
        self.cov = cov

    @property
    def dim(self) -> int:
        return self.mean.size

    def to_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "cov": [[float(v) for v in row] for row in self.cov],
            "n": int(self.n),
            "estimator": self.estimator,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GaussianSummary":
        return cls(
            mean=np.asarray(raw["mean"], dtype=np.float64),
            cov=np.asarray(raw["cov"], dtype=np.float64),
            n=int(raw["n"]),
            estimator=raw.get("estimator", "sample"),
        )


@dataclass
class PcaModel:
    """Principal axes of a feature cloud: orthonormal rows, descending variance."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    variance_retained: float

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    @property
    def output_dim(self) -> int:
        return self.components.shape[0]


@dataclass
class ShrinkageResult:
    summary: GaussianSummary
    delta: float
    target_scale: float


def mean_and_cov(X: FeatureMatrix) -> GaussianSummary:
    """Column mean and unbiased sample covariance (divisor n-1), symmetrized."""
    if X.n < 2:
        raise ValidationFailure(f"need at least 2 rows to estimate covariance, got {X.n}")
    mean = X.data.mean(axis=0)
    centered = X.data - mean
    cov = centered.T @ centered / (X.n - 1)
    return GaussianSummary(mean=mean, cov=cov, n=X.n, estimator="sample")


def ledoit_wolf(X: FeatureMatrix) -> ShrinkageResult:
    """Well-conditioned covariance estimate via linear shrinkage to a scaled identity.

    Uses the 2004 optimal-intensity formulation: with centered rows x_k and
    S = (1/n) sum_k x_k x_k^T (divisor n, unlike the FID-side sample
    covariance),

        m   = tr(S) / d
        d2  = ||S - m I||_F^2 / d
        b2  = min(d2, (1/n^2) sum_k ||x_k x_k^T - S||_F^2 / d)
        cov = (1 - b2/d2) S + (b2/d2) m I

    The intensity delta = b2/d2 always lands in [0, 1].
    """
    if X.n < 2:
        raise ValidationFailure(f"need at least 2 rows to estimate covariance, got {X.n}")
    n, d = X.n, X.dim
    centered = X.data - X.data.mean(axis=0)
    S = centered.T @ centered / n
    m = float(np.trace(S)) / d
    d2 = float(((S - m * np.eye(d)) ** 2).sum()) / d
    # (1/n^2) sum_k ||x_k x_k^T - S||_F^2 collapses to sum_k ||x_k||^4 / n^2 - ||S||_F^2 / n
    # because sum_k x_k x_k^T = n S.
    sq_norms = (centered**2).sum(axis=1)
    b2_raw = float((sq_norms**2).sum()) / n**2 / d - float((S**2).sum()) / n / d
    b2 = min(max(b2_raw, 0.0), d2)
    delta = 0.0 if b2 == 0.0 else b2 / d2
    cov = (1.0 - delta) * S + delta * m * np.eye(d)
    summary = GaussianSummary(mean=X.data.mean(axis=0), cov=cov, n=n, estimator="ledoit_wolf")
    return ShrinkageResult(summary=summary, delta=delta, target_scale=m)


def pca_fit(X: FeatureMatrix, target_dim: int) -> PcaModel:
    """Fit a PCA via eigendecomposition of the d x d sample covariance.

    Sign convention: each component's largest-magnitude entry is positive.
    """
    limit = min(X.n - 1, X.dim)
    if not 1 <= target_dim <= limit:
        raise ValidationFailure(
            f"target_dim must be in [1, {limit}] for n={X.n}, d={X.dim}; got {target_dim}"
        )
    mean = X.data.mean(axis=0)
    centered = X.data - mean
    cov = centered.T @ centered / (X.n - 1)
    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals[::-1], 0.0, None)  # descending, non-negative
    eigvecs = eigvecs[:, ::-1]
    components = eigvecs[:, :target_dim].T.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    total = float(eigvals.sum())
    retained = float(eigvals[:target_dim].sum()) / total if total > 0.0 else 1.0
    return PcaModel(
        mean=mean,
        components=components,
        eigenvalues=eigvals[:target_dim].copy(),
        variance_retained=retained,
    )


def pca_transform(model: PcaModel, X: FeatureMatrix) -> FeatureMatrix:
    """Project rows onto the principal axes: (X - mean) @ components^T."""
    if X.dim != model.input_dim:
        raise ValidationFailure(
            f"feature dimension {X.dim} does not match PCA input dimension {model.input_dim}"
        )
    projected = (X.data - model.mean) @ model.components.T
    return FeatureMatrix(list(X.ids), projected, X.modality)


def pca_inverse_transform(model: PcaModel, X: FeatureMatrix) -> FeatureMatrix:
    """Lift projected rows back to the original space: X @ components + mean."""
    if X.dim != model.output_dim:
        raise ValidationFailure(
            f"feature dimension {X.dim} does not match PCA output dimension {model.output_dim}"
        )
    lifted = X.data @ model.components + model.mean
    return FeatureMatrix(list(X.ids), lifted, X.modality)


def _psd_eigh(A: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecompose a symmetric matrix, clamping eigenvalues in
    [-1e-8 * lambda_max, 0) to zero and raising below that band."""
    eigvals, eigvecs = np.linalg.eigh(A)
    lam_max = max(float(eigvals[-1]), 0.0)
    if float(eigvals[0]) < -1e-8 * lam_max:
        raise NumericalFailure(
            f"{what} is not PSD within tolerance (min eigenvalue {eigvals[0]:.3e})"
        )
    return np.clip(eigvals, 0.0, None), eigvecs


def sqrtm_psd(A: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition: Q sqrt(L) Q^T."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationFailure("matrix must be square")
    scale = max(float(np.abs(A).max()), 1.0)
    if float(np.abs(A - A.T).max()) > 1e-8 * scale:
        raise ValidationFailure("matrix is not symmetric within tolerance")
    sym = 0.5 * (A + A.T)
    eigvals, eigvecs = _psd_eigh(sym, "matrix")
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    return 0.5 * (root + root.T)


def wasserstein2_gaussian(G1: GaussianSummary, G2: GaussianSummary) -> float:
    """Squared Wasserstein-2 distance between two Gaussian summaries.

    ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}), with the cross term
    evaluated through the symmetric product (S1^{1/2} S2 S1^{1/2})^{1/2},
    which is mathematically equal and numerically stable for PSD inputs.
    """
    if G1.dim != G2.dim:
        raise ValidationFailure(f"dimension mismatch: {G1.dim} vs {G2.dim}")
    root1 = sqrtm_psd(G1.cov)
    inner = root1 @ G2.cov @ root1
    inner = 0.5 * (inner + inner.T)
    eigvals, _ = _psd_eigh(inner, "cross-term product")
    cross = float(np.sqrt(eigvals).sum())
    mean_term = float(((G1.mean - G2.mean) ** 2).sum())
    value = mean_term + float(np.trace(G1.cov)) + float(np.trace(G2.cov)) - 2.0 * cross
    if value < 0.0:
        if value < -1e-8:
            raise NumericalFailure(f"squared distance fell below -1e-8: {value:.3e}")
        value = 0.0
    return value
