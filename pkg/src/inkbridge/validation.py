"""Metric-validation harness: Pearson correlation of computed metrics against
ingested human ratings, emitted as a criteria-by-metrics matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import InputOutputFailure, ValidationFailure


@dataclass
class RatingTable:
    """Mean human ratings (1-5) per item and criterion."""

    item_ids: list[str]
    criteria: list[str]
    scores: list[list[float]]  # item x criterion
    raters: int = 1

    def __post_init__(self):
        if self.raters < 1:
            raise ValidationFailure("raters must be at least 1")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise ValidationFailure("rating table ids must be unique")
        if len(self.scores) != len(self.item_ids):
            raise ValidationFailure("rating table has a row count mismatch")
        for item_id, row in zip(self.item_ids, self.scores):
            if len(row) != len(self.criteria):
                raise ValidationFailure(f"rating row for id {item_id!r} has missing cells")
            for value in row:
                if not (math.isfinite(value) and 1.0 <= value <= 5.0):
                    raise ValidationFailure(
                        f"rating for id {item_id!r} outside [1, 5]: {value!r}"
                    )

    def column(self, criterion: str) -> dict[str, float]:
        j = self.criteria.index(criterion)
        return {i: row[j] for i, row in zip(self.item_ids, self.scores)}


@dataclass
class CorrelationMatrix:
    row_names: list[str]  # metrics
    col_names: list[str]  # criteria
    values: list[list[float | None]]  # None marks undefined cells


def pearson(xs: list[float], ys: list[float]) -> float | None:
    """Product-moment correlation; None when either side has zero variance."""
    if len(xs) != len(ys):
        raise ValidationFailure(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValidationFailure("need at least 2 points to correlate")
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = math.fsum((x - mx) ** 2 for x in xs)
    vy = math.fsum((y - my) ** 2 for y in ys)
    if vx == 0.0 or vy == 0.0:
        return None
    return cov / math.sqrt(vx * vy)


def correlate_metrics(
    metric_values: dict[str, dict[str, float]],
    ratings: RatingTable,
) -> CorrelationMatrix:
    """Correlate each metric's per-item values against each rating criterion.

    Items are aligned by id intersection; unmatched items are dropped with a
    warning. Metrics whose coverage of the rating ids leaves fewer than two
    common items raise.
    """
    if not metric_values:
        raise ValidationFailure("no metrics supplied")
    rating_ids = set(ratings.item_ids)
    values: list[list[float | None]] = []
    for metric, per_item in metric_values.items():
        common = sorted(rating_ids & per_item.keys())
        dropped = len(per_item) - len(common)
        if dropped:
            warnings.warn(f"metric {metric!r}: dropped {dropped} item(s) without ratings")
        if len(common) < 2:
            raise ValidationFailure(
                f"metric {metric!r} shares only {len(common)} item(s) with the ratings"
            )
        xs = [per_item[i] for i in common]
        row: list[float | None] = []
        for criterion in ratings.criteria:
            col = ratings.column(criterion)
            row.append(pearson(xs, [col[i] for i in common]))
        values.append(row)
    return CorrelationMatrix(list(metric_values.keys()), list(ratings.criteria), values)


def load_ratings(path, raters: int = 1) -> RatingTable:
    """Read a ratings CSV with header "id,criterion1,...,criterionC"."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputOutputFailure(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ValidationFailure(f"empty ratings file {path}")
    header = lines[0].split(",")
    if header[0] != "id" or len(header) < 2:
        raise ValidationFailure(f'ratings file {path}: header must be "id,criterion,..."')
    criteria = header[1:]
    item_ids, scores = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ValidationFailure(f"ratings file {path}: ragged row at line {lineno}")
        item_ids.append(cells[0])
        try:
            scores.append([float(c) for c in cells[1:]])
        except ValueError as exc:
            raise ValidationFailure(
                f"ratings file {path}: bad value for id {cells[0]!r}"
            ) from exc
    return RatingTable(item_ids, criteria, scores, raters=raters)
