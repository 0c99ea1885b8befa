"""Pydantic request/response models for the evaluation service.

These mirror the on-disk formats one-to-one: the CLI parses files into these
models and either executes them in process or POSTs them to a remote server.
"""

from __future__ import annotations

from pydantic import BaseModel

from .. import corpus_io
from ..metrics_visual import DceConfig
from ..sampling import SamplingConfig
from ..validation import RatingTable


class ManifestItemModel(BaseModel):
    id: str
    modality: str
    pair_id: str | None = None
    genre: str | None = None
    split: str | None = None


class ManifestModel(BaseModel):
    items: list[ManifestItemModel]

    def to_core(self) -> corpus_io.CorpusManifest:
        return corpus_io.CorpusManifest(
            [corpus_io.ManifestItem(**item.model_dump()) for item in self.items]
        )


class FeatureMatrixModel(BaseModel):
    ids: list[str]
    data: list[list[float]]
    modality: str = "painting"

    def to_core(self) -> corpus_io.FeatureMatrix:
        return corpus_io.FeatureMatrix(list(self.ids), self.data, self.modality)


class TokenProbModel(BaseModel):
    id: str
    chars: list[str]
    logp: list[float]
    group_id: str | None = None
    dist: list[list[float]] | None = None
    vocab: list[str] | None = None


class TextPairModel(BaseModel):
    id: str
    candidate: str
    references: list[str]


class GridModel(BaseModel):
    id: str
    w: int
    h: int
    scores: list[float]


class LabelSetModel(BaseModel):
    ids: list[str]
    labels: list[str]


class RatingsModel(BaseModel):
    item_ids: list[str]
    criteria: list[str]
    scores: list[list[float]]
    raters: int = 1

    def to_core(self) -> RatingTable:
        return RatingTable(
            list(self.item_ids), list(self.criteria), self.scores, raters=self.raters
        )


class SamplingConfigModel(BaseModel):
    strategy: str
    k: int = 12
    temperature: float = 0.6
    p: float = 0.9
    seed: int = 0

    def to_core(self) -> SamplingConfig:
        return SamplingConfig(
            strategy=self.strategy, k=self.k, temperature=self.temperature,
            p=self.p, seed=self.seed,
        )


class DceConfigModel(BaseModel):
    pca_dim: int = 100
    estimator: str = "ledoit_wolf"
    pca_fit_scope: str = "pooled"
    standardize: bool = False

    def to_core(self) -> DceConfig:
        return DceConfig(
            pca_dim=self.pca_dim, estimator=self.estimator,
            pca_fit_scope=self.pca_fit_scope, standardize=self.standardize,
        )


# --------------------------------------------------------------------------
# Requests


class SplitRequest(BaseModel):
    manifest: ManifestModel
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0


class ScheduleRequest(BaseModel):
    manifest: ManifestModel
    assignment: dict[str, str]
    paired_per_batch: int
    ratio_k: int = 5
    seed: int = 0


class TokenMetricRequest(BaseModel):
    sequences: list[TokenProbModel]
    max_length: int = corpus_io.DEFAULT_MAX_POEM_LENGTH
    truncate: bool = False
    workers: int = 1


class PairMetricRequest(BaseModel):
    pairs: list[TextPairModel]
    keep_cjk_punctuation: bool = False
    max_n: int = 4
    workers: int = 1


class FidRequest(BaseModel):
    real: FeatureMatrixModel
    generated: FeatureMatrixModel
    estimator: str = "sample"


class DceRequest(BaseModel):
    paintings: FeatureMatrixModel
    poems: FeatureMatrixModel
    config: DceConfigModel = DceConfigModel()


class GenreAccuracyRequest(BaseModel):
    predicted: LabelSetModel
    truth: LabelSetModel


class LossesRequest(BaseModel):
    cycle_painting_original: FeatureMatrixModel | None = None
    cycle_painting_reconstruction: FeatureMatrixModel | None = None
    cycle_poem_original: FeatureMatrixModel | None = None
    cycle_poem_reconstruction: FeatureMatrixModel | None = None
    sup_poem_predicted: FeatureMatrixModel | None = None
    sup_poem_true: FeatureMatrixModel | None = None
    sup_painting_predicted: FeatureMatrixModel | None = None
    sup_painting_true: FeatureMatrixModel | None = None
    seq_real_scores: list[float] | None = None
    seq_fake_scores: list[float] | None = None
    patch_real_grids: list[GridModel] | None = None
    patch_fake_grids: list[GridModel] | None = None
    lambda_sup: float = 1.0
    lambda_adv: float = 1.0
    non_saturating: bool = False


class LogitRowModel(BaseModel):
    id: str
    logits: list[float]


class SampleRequest(BaseModel):
    rows: list[LogitRowModel]
    config: SamplingConfigModel


class CorrelateRequest(BaseModel):
    metrics: dict[str, dict[str, float]]
    ratings: RatingsModel


class SummaryRequest(BaseModel):
    reports: list[dict]


# --------------------------------------------------------------------------
# Responses


class PerItemValue(BaseModel):
    id: str
    value: float


class MetricReport(BaseModel):
    metric: str
    value: float | dict[str, float]
    estimator: str | None = None
    pca_dim: int | None = None
    variance_retained: float | None = None
    n: int | None = None
    per_item: list[dict] | None = None


class SplitResponse(BaseModel):
    seed: int
    ratios: tuple[float, float, float]
    assignment: dict[str, str]


class BatchModel(BaseModel):
    paired_ids: list[tuple[str, str]]
    unpaired_ids: list[str]
    partial: bool


class ScheduleResponse(BaseModel):
    seed: int
    paired_per_batch: int
    ratio_k: int
    batches: list[BatchModel]


class LossReport(BaseModel):
    metric: str
    value: dict[str, float]
    lambda_sup: float
    lambda_adv: float
    non_saturating: bool


class SampledSequence(BaseModel):
    id: str
    tokens: list[int]
    seed: int


class SampleResponse(BaseModel):
    config: dict
    sequences: list[SampledSequence]


class CorrelationResponse(BaseModel):
    row_names: list[str]
    col_names: list[str]
    values: list[list[float | None]]


class SummaryResponse(BaseModel):
    metrics: dict[str, float]
