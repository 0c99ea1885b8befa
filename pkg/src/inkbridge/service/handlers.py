"""Service operations: each function maps a request model to a report dict.

The FastAPI routes and the CLI both call these directly, so every consumer
sees identical validation, identical numbers, and identical key order.
"""

from __future__ import annotations

import math

import numpy as np

from .. import corpus_io, losses, metrics_text, metrics_visual, sampling, validation
from ..errors import ValidationFailure
from ..prng import Xoshiro256StarStar
from ..reports import ordered_map, summarize_reports
from . import schemas


def _sequences(req: schemas.TokenMetricRequest) -> list[corpus_io.TokenProbSequence]:
    out = []
    for model in req.sequences:
        chars, logp, dist = list(model.chars), list(model.logp), model.dist
        if len(chars) > req.max_length:
            if not req.truncate:
                raise ValidationFailure(
                    f"sequence {model.id!r} exceeds max length {req.max_length} "
                    f"({len(chars)} characters)"
                )
            chars = chars[: req.max_length]
            logp = logp[: req.max_length]
            if dist is not None:
                dist = dist[: req.max_length]
        out.append(
            corpus_io.TokenProbSequence(
                id=model.id, chars=chars, logp_true=logp,
                group_id=model.group_id, dist=dist, vocab=model.vocab,
            )
        )
    if not out:
        raise ValidationFailure("no sequences supplied")
    return out


def mce(req: schemas.TokenMetricRequest) -> dict:
    seqs = _sequences(req)
    per_seq = ordered_map(metrics_text.cross_entropy_seq, seqs, req.workers)
    return {
        "metric": "mce",
        "value": math.fsum(per_seq) / len(per_seq),
        "per_item": [{"id": s.id, "value": v} for s, v in zip(seqs, per_seq)],
    }


def mte(req: schemas.TokenMetricRequest) -> dict:
    groups = metrics_text.group_sequences(_sequences(req))
    value = metrics_text.mte(groups)
    per_group = [
        {
            "id": g.group_id,
            "value": math.fsum(metrics_text.cross_entropy_seq(s) for s in g.sequences)
            / len(g.sequences),
        }
        for g in groups
    ]
    return {"metric": "mte", "value": value, "per_item": per_group}


def perplexity(req: schemas.TokenMetricRequest) -> dict:
    seqs = _sequences(req)
    per_seq = ordered_map(
        lambda s: math.exp(metrics_text.cross_entropy_seq(s)), seqs, req.workers
    )
    return {
        "metric": "ppl",
        "value": metrics_text.perplexity(seqs),
        "per_item": [{"id": s.id, "value": v} for s, v in zip(seqs, per_seq)],
    }


def _pairs(req: schemas.PairMetricRequest) -> list[tuple[str, metrics_text.PoemPair]]:
    if not req.pairs:
        raise ValidationFailure("no candidate/reference pairs supplied")
    out = []
    for model in req.pairs:
        candidate = corpus_io.tokenize_chars(model.candidate, req.keep_cjk_punctuation)
        references = [
            corpus_io.tokenize_chars(r, req.keep_cjk_punctuation) for r in model.references
        ]
        try:
            out.append((model.id, metrics_text.PoemPair(candidate, references)))
        except ValidationFailure as exc:
            raise ValidationFailure(f"pair {model.id!r}: {exc}") from exc
    return out


def char_prf(req: schemas.PairMetricRequest) -> dict:
    pairs = _pairs(req)
    scores = ordered_map(lambda item: metrics_text.char_prf(item[1]), pairs, req.workers)
    n = len(scores)
    return {
        "metric": "prf",
        "value": {
            "P": math.fsum(s[0] for s in scores) / n,
            "R": math.fsum(s[1] for s in scores) / n,
            "F1": math.fsum(s[2] for s in scores) / n,
        },
        "per_item": [
            {"id": pid, "P": s[0], "R": s[1], "F1": s[2]}
            for (pid, _), s in zip(pairs, scores)
        ],
    }


def bleu(req: schemas.PairMetricRequest) -> dict:
    pairs = _pairs(req)
    scores = ordered_map(
        lambda item: metrics_text.bleu(item[1], max_n=req.max_n), pairs, req.workers
    )
    return {
        "metric": "bleu",
        "value": math.fsum(scores) / len(scores),
        "max_n": req.max_n,
        "per_item": [{"id": pid, "value": s} for (pid, _), s in zip(pairs, scores)],
    }


def meteor(req: schemas.PairMetricRequest) -> dict:
    pairs = _pairs(req)
    scores = ordered_map(lambda item: metrics_text.meteor_simplified(item[1]), pairs, req.workers)
    return {
        "metric": "meteor",
        "variant": "simplified",
        "value": math.fsum(scores) / len(scores),
        "per_item": [{"id": pid, "value": s} for (pid, _), s in zip(pairs, scores)],
    }


def fid(req: schemas.FidRequest) -> dict:
    real = req.real.to_core()
    generated = req.generated.to_core()
    value = metrics_visual.frechet_distance(real, generated, estimator=req.estimator)
    return {
        "metric": "fid",
        "value": value,
        "estimator": req.estimator,
        "n_real": real.n,
        "n_generated": generated.n,
    }


def dce(req: schemas.DceRequest) -> dict:
    result = metrics_visual.dce_full(
        req.paintings.to_core(), req.poems.to_core(), req.config.to_core()
    )
    return {
        "metric": "dce",
        "value": result.value,
        "pca_dim": result.pca_dim,
        "variance_retained": result.variance_retained,
        "estimator": result.estimator,
    }


def genre_accuracy(req: schemas.GenreAccuracyRequest) -> dict:
    value = metrics_visual.genre_accuracy(
        metrics_visual.LabelSet(list(req.predicted.ids), list(req.predicted.labels)),
        metrics_visual.LabelSet(list(req.truth.ids), list(req.truth.labels)),
    )
    return {"metric": "genre-acc", "value": value, "n": len(req.truth.ids)}


def _recon_pairs(
    originals: schemas.FeatureMatrixModel, recons: schemas.FeatureMatrixModel, what: str
) -> list[losses.ReconPair]:
    orig, recd = originals.to_core(), recons.to_core()
    by_id = {i: orig.data[k] for k, i in enumerate(orig.ids)}
    if set(recd.ids) != set(by_id):
        raise ValidationFailure(f"{what}: original and reconstruction ids differ")
    return [
        losses.ReconPair(by_id[i], recd.data[k]) for k, i in enumerate(recd.ids)
    ]


def _grids(models: list[schemas.GridModel]) -> list[losses.PatchScoreGrid]:
    out = []
    for g in models:
        if g.w * g.h != len(g.scores):
            raise ValidationFailure(f"grid {g.id!r}: w*h does not match score count")
        out.append(losses.PatchScoreGrid(np.asarray(g.scores).reshape(g.w, g.h)))
    return out


def evaluate_losses(req: schemas.LossesRequest) -> dict:
    """Compute every objective component whose inputs were supplied."""
    weights = losses.LossWeights(req.lambda_sup, req.lambda_adv)
    components: dict[str, float] = {}

    cycle_painting = cycle_poem = None
    if (req.cycle_painting_original is None) != (req.cycle_painting_reconstruction is None):
        raise ValidationFailure("cycle painting inputs must come as original + reconstruction")
    if (req.cycle_poem_original is None) != (req.cycle_poem_reconstruction is None):
        raise ValidationFailure("cycle poem inputs must come as original + reconstruction")
    if req.cycle_painting_original is not None:
        cycle_painting = _recon_pairs(
            req.cycle_painting_original, req.cycle_painting_reconstruction, "cycle painting"
        )
    if req.cycle_poem_original is not None:
        cycle_poem = _recon_pairs(
            req.cycle_poem_original, req.cycle_poem_reconstruction, "cycle poem"
        )
    if cycle_painting is not None or cycle_poem is not None:
        components["cycle"] = losses.cycle_loss(cycle_painting or [], cycle_poem or [])

    sup_inputs = (req.sup_poem_predicted, req.sup_poem_true,
                  req.sup_painting_predicted, req.sup_painting_true)
    if any(v is not None for v in sup_inputs):
        if any(v is None for v in sup_inputs):
            raise ValidationFailure("supervised loss needs all four prediction/truth inputs")
        components["supervised"] = losses.supervised_loss(
            _recon_pairs(req.sup_poem_true, req.sup_poem_predicted, "supervised poem"),
            _recon_pairs(req.sup_painting_true, req.sup_painting_predicted, "supervised painting"),
        )

    if req.seq_fake_scores is not None:
        fake = losses.ScalarScoreBatch(req.seq_fake_scores)
        components["adversarial_sequence_generator"] = losses.adv_generator_seq(
            fake, non_saturating=req.non_saturating
        )
        if req.seq_real_scores is not None:
            real = losses.ScalarScoreBatch(req.seq_real_scores)
            components["adversarial_sequence"] = losses.adv_discriminator_seq(real, fake)

    if req.patch_fake_grids is not None:
        fake_grids = _grids(req.patch_fake_grids)
        components["adversarial_patch_generator"] = losses.patch_generator_loss(fake_grids)
        if req.patch_real_grids is not None:
            components["adversarial_patch_discriminator"] = losses.patch_discriminator_loss(
                _grids(req.patch_real_grids), fake_grids
            )

    needed = ("cycle", "supervised", "adversarial_sequence", "adversarial_patch_generator")
    if all(k in components for k in needed):
        components["full_objective"] = losses.full_objective(
            components["cycle"],
            components["supervised"],
            components["adversarial_sequence"],
            components["adversarial_patch_generator"],
            weights,
        )
    if not components:
        raise ValidationFailure("no loss inputs supplied")
    return {
        "metric": "losses",
        "value": components,
        "lambda_sup": req.lambda_sup,
        "lambda_adv": req.lambda_adv,
        "non_saturating": req.non_saturating,
    }


def split(req: schemas.SplitRequest) -> dict:
    assignment = corpus_io.split_dataset(req.manifest.to_core(), tuple(req.ratios), req.seed)
    return {
        "seed": assignment.seed,
        "ratios": list(assignment.ratios),
        "assignment": {i: assignment.assignment[i] for i in sorted(assignment.assignment)},
    }


def schedule(req: schemas.ScheduleRequest) -> dict:
    manifest = req.manifest.to_core()
    for item_id, split_name in req.assignment.items():
        if split_name not in corpus_io.SPLITS:
            raise ValidationFailure(f"invalid split for id {item_id!r}: {split_name!r}")
    assignment = corpus_io.SplitAssignment(dict(req.assignment), req.seed, (0.0, 0.0, 0.0))
    plan = corpus_io.schedule_batches(
        assignment, manifest, req.paired_per_batch, req.ratio_k, req.seed
    )
    return {
        "seed": plan.seed,
        "paired_per_batch": plan.paired_per_batch,
        "ratio_k": plan.ratio_k,
        "batches": [
            {
                "paired_ids": [list(p) for p in b.paired_ids],
                "unpaired_ids": b.unpaired_ids,
                "partial": b.partial,
            }
            for b in plan.batches
        ],
    }


def sample(req: schemas.SampleRequest) -> dict:
    """Draw one token per logit row, threading a single seeded stream."""
    if not req.rows:
        raise ValidationFailure("no logit rows supplied")
    cfg = req.config.to_core()
    rng = Xoshiro256StarStar(cfg.seed)
    tokens: dict[str, list[int]] = {}
    for row in req.rows:
        vector = sampling.LogitVector(row.logits)
        tokens.setdefault(row.id, []).append(sampling.sample_token(vector, cfg, rng))
    return {
        "config": cfg.to_dict(),
        "sequences": [
            {"id": row_id, "tokens": toks, "seed": cfg.seed}
            for row_id, toks in tokens.items()
        ],
    }


def correlate(req: schemas.CorrelateRequest) -> dict:
    matrix = validation.correlate_metrics(req.metrics, req.ratings.to_core())
    return {
        "row_names": matrix.row_names,
        "col_names": matrix.col_names,
        "values": matrix.values,
    }


def summary(req: schemas.SummaryRequest) -> dict:
    return {"metrics": summarize_reports(req.reports)}
