"""Command-line front end: one subcommand per operation family.

The CLI is a thin client over the service layer. It parses the documented
file formats into the service's request models and, by default, executes the
matching handler in process; with ``--server URL`` the same request is POSTed
to a running instance instead. Either way the output bytes are identical for
identical inputs.

Exit codes: 0 success, 1 input validation, 2 I/O, 3 numerical failure.
Every failure prints a single line "ERROR <code>: <message>" to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus_io, validation
from .errors import InkbridgeError, InputOutputFailure, NumericalFailure, ValidationFailure
from .reports import (
    canonical_metric_name,
    correlation_to_csv,
    report_to_csv,
    report_to_json,
    summary_to_csv,
    summary_to_json,
)
from .service import handlers, schemas

SUBCOMMANDS = (
    "split", "schedule", "mce", "mte", "ppl", "prf", "bleu", "meteor",
    "fid", "dce", "genre-acc", "losses", "sample", "correlate", "summary",
)

_ENDPOINTS = {
    "split": "/corpus/split",
    "schedule": "/corpus/schedule",
    "mce": "/metrics/text/mce",
    "mte": "/metrics/text/mte",
    "ppl": "/metrics/text/perplexity",
    "prf": "/metrics/text/prf",
    "bleu": "/metrics/text/bleu",
    "meteor": "/metrics/text/meteor",
    "fid": "/metrics/visual/fid",
    "dce": "/metrics/visual/dce",
    "genre-acc": "/metrics/visual/genre-accuracy",
    "losses": "/losses",
    "sample": "/sampling/sample",
    "correlate": "/validation/correlate",
    "summary": "/reports/summary",
}

_HANDLERS = {
    "split": handlers.split,
    "schedule": handlers.schedule,
    "mce": handlers.mce,
    "mte": handlers.mte,
    "ppl": handlers.perplexity,
    "prf": handlers.char_prf,
    "bleu": handlers.bleu,
    "meteor": handlers.meteor,
    "fid": handlers.fid,
    "dce": handlers.dce,
    "genre-acc": handlers.genre_accuracy,
    "losses": handlers.evaluate_losses,
    "sample": handlers.sample,
    "correlate": handlers.correlate,
    "summary": handlers.summary,
}


class _UsageError(Exception):
    def __init__(self, message: str, parser: argparse.ArgumentParser):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message):
        raise _UsageError(message, self)


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("INKBRIDGE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ValidationFailure(f"INKBRIDGE_SEED must be an integer, got {env!r}") from exc


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationFailure(f"--ratios expects three comma-separated values, got {text!r}")
    try:
        r = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ValidationFailure(f"--ratios values must be numbers: {text!r}") from exc
    return r  # type: ignore[return-value]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="inkbridge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="|".join(SUBCOMMANDS))

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--server", default=None, help="base URL of a running service")
        return p

    p = add("split", help="deterministic train/val/test assignment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", default="0.7,0.15,0.15")
    p.add_argument("--seed", type=int, default=None)

    p = add("schedule", help="plan paired:unpaired training batches")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True, help="split assignment JSON")
    p.add_argument("--paired-per-batch", type=int, required=True)
    p.add_argument("--ratio-k", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)

    for name, help_text in (
        ("mce", "macro-averaged per-character cross-entropy"),
        ("mte", "grouped cross-entropy over sampled generations"),
        ("ppl", "micro-averaged perplexity"),
    ):
        p = add(name, help=help_text)
        p.add_argument("--probs", required=True, help="token-probability JSONL")
        p.add_argument("--max-len", type=int, default=corpus_io.DEFAULT_MAX_POEM_LENGTH)
        p.add_argument("--truncate", action="store_true")
        p.add_argument("--workers", type=int, default=1)

    for name, help_text in (
        ("prf", "character precision/recall/F1"),
        ("bleu", "character-level BLEU"),
        ("meteor", "simplified character METEOR"),
    ):
        p = add(name, help=help_text)
        p.add_argument("--pairs", required=True, help="candidate/reference JSONL")
        p.add_argument("--keep-punct", action="store_true",
                       help="keep classical-verse punctuation as tokens")
        p.add_argument("--workers", type=int, default=1)
        if name == "bleu":
            p.add_argument("--max-n", type=int, default=4)

    p = add("fid", help="Frechet distance between real and generated features")
    p.add_argument("--real", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--estimator", choices=("sample", "ledoit_wolf"), default="sample")
    p.add_argument("--modality", choices=corpus_io.MODALITIES, default="painting")

    p = add("dce", help="cross-modal distribution consistency error")
    p.add_argument("--paintings", required=True)
    p.add_argument("--poems", required=True)
    p.add_argument("--pca-dim", type=int, default=100)
    p.add_argument("--estimator", choices=("ledoit_wolf", "sample"), default="ledoit_wolf")
    p.add_argument("--fit-scope", choices=("pooled", "per_domain"), default="pooled")
    p.add_argument("--standardize", action="store_true")

    p = add("genre-acc", help="genre classification accuracy")
    p.add_argument("--predicted", required=True, help='CSV "id,genre"')
    p.add_argument("--truth", required=True, help='CSV "id,genre"')

    p = add("losses", help="evaluate training-objective components")
    p.add_argument("--cycle-painting-original")
    p.add_argument("--cycle-painting-reconstruction")
    p.add_argument("--cycle-poem-original")
    p.add_argument("--cycle-poem-reconstruction")
    p.add_argument("--sup-poem-predicted")
    p.add_argument("--sup-poem-true")
    p.add_argument("--sup-painting-predicted")
    p.add_argument("--sup-painting-true")
    p.add_argument("--seq-real-scores")
    p.add_argument("--seq-fake-scores")
    p.add_argument("--patch-real-grids")
    p.add_argument("--patch-real-shapes", help='JSONL sidecar {"id","w","h"}')
    p.add_argument("--patch-fake-grids")
    p.add_argument("--patch-fake-shapes", help='JSONL sidecar {"id","w","h"}')
    p.add_argument("--lambda-sup", type=float, default=1.0)
    p.add_argument("--lambda-adv", type=float, default=1.0)
    p.add_argument("--non-saturating", action="store_true")

    p = add("sample", help="draw one token per logit row")
    p.add_argument("--logits", required=True, help="feature CSV of logit rows")
    p.add_argument("--strategy", choices=("top_k", "nucleus", "greedy"), required=True)
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--temperature", type=float, default=0.6)
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=None)

    p = add("correlate", help="Pearson correlation of metrics vs. ratings")
    p.add_argument("--metrics", nargs="+", required=True, help="per-item report JSONs")
    p.add_argument("--ratings", required=True, help='CSV "id,criterion,..."')
    p.add_argument("--raters", type=int, default=1)

    p = add("summary", help="combine per-metric reports into one table")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--workers", type=int, default=1)

    return parser


# ---------------------------------------------------------------------------
# File -> request model builders


def _manifest_model(path) -> schemas.ManifestModel:
    manifest = corpus_io.load_manifest(path)
    return schemas.ManifestModel(
        items=[
            schemas.ManifestItemModel(
                id=i.id, modality=i.modality, pair_id=i.pair_id, genre=i.genre, split=i.split
            )
            for i in manifest.items
        ]
    )


def _feature_model(path, modality: str = "painting") -> schemas.FeatureMatrixModel:
    matrix = corpus_io.load_features(path, modality)
    return schemas.FeatureMatrixModel(
        ids=matrix.ids, data=[list(map(float, row)) for row in matrix.data], modality=modality
    )


def _token_models(args) -> list[schemas.TokenProbModel]:
    sequences = corpus_io.load_token_probs(args.probs, args.max_len, args.truncate)
    return [
        schemas.TokenProbModel(
            id=s.id,
            chars=s.chars,
            logp=s.logp_true,
            group_id=s.group_id,
            dist=None if s.dist is None else [list(map(float, row)) for row in s.dist],
            vocab=s.vocab,
        )
        for s in sequences
    ]


def _read_jsonl(path) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputOutputFailure(f"cannot read {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValidationFailure(f"{path}: malformed JSON at line {lineno}: {exc}") from exc
    return records


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputOutputFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"{path}: malformed JSON: {exc}") from exc


def _pair_models(args) -> list[schemas.TextPairModel]:
    models = []
    for record in _read_jsonl(args.pairs):
        for key in ("id", "candidate", "references"):
            if key not in record:
                raise ValidationFailure(f"{args.pairs}: pair record missing key {key!r}")
        models.append(
            schemas.TextPairModel(
                id=record["id"], candidate=record["candidate"],
                references=list(record["references"]),
            )
        )
    return models


def _label_model(path) -> schemas.LabelSetModel:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputOutputFailure(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].split(",")[:2] != ["id", "genre"]:
        raise ValidationFailure(f'label file {path}: header must be "id,genre"')
    ids, labels = [], []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ValidationFailure(f"label file {path}: expected two columns, got {line!r}")
        ids.append(cells[0])
        labels.append(cells[1])
    return schemas.LabelSetModel(ids=ids, labels=labels)


def _score_column(path) -> list[float]:
    matrix = corpus_io.load_features(path, "poem")
    if matrix.dim != 1:
        raise ValidationFailure(f"score file {path}: expected a single value column")
    return [float(v) for v in matrix.data[:, 0]]


def _grid_models(grid_path, shape_path) -> list[schemas.GridModel]:
    if shape_path is None:
        raise ValidationFailure(f"grids {grid_path} need a shape sidecar (--patch-*-shapes)")
    shapes = {}
    for record in _read_jsonl(shape_path):
        for key in ("id", "w", "h"):
            if key not in record:
                raise ValidationFailure(f"{shape_path}: shape record missing key {key!r}")
        shapes[record["id"]] = (int(record["w"]), int(record["h"]))
    matrix = corpus_io.load_features(grid_path, "painting")
    models = []
    for i, grid_id in enumerate(matrix.ids):
        if grid_id not in shapes:
            raise ValidationFailure(f"{shape_path}: no shape for grid id {grid_id!r}")
        w, h = shapes[grid_id]
        models.append(
            schemas.GridModel(id=grid_id, w=w, h=h, scores=[float(v) for v in matrix.data[i]])
        )
    return models


def build_request(args) -> object:
    cmd = args.command
    if cmd == "split":
        return schemas.SplitRequest(
            manifest=_manifest_model(args.manifest),
            ratios=_parse_ratios(args.ratios),
            seed=_resolve_seed(args.seed),
        )
    if cmd == "schedule":
        split = corpus_io.load_split(args.split)
        return schemas.ScheduleRequest(
            manifest=_manifest_model(args.manifest),
            assignment=split.assignment,
            paired_per_batch=args.paired_per_batch,
            ratio_k=args.ratio_k,
            seed=_resolve_seed(args.seed),
        )
    if cmd in ("mce", "mte", "ppl"):
        return schemas.TokenMetricRequest(
            sequences=_token_models(args),
            max_length=args.max_len,
            truncate=args.truncate,
            workers=args.workers,
        )
    if cmd in ("prf", "bleu", "meteor"):
        return schemas.PairMetricRequest(
            pairs=_pair_models(args),
            keep_cjk_punctuation=args.keep_punct,
            max_n=getattr(args, "max_n", 4),
            workers=args.workers,
        )
    if cmd == "fid":
        return schemas.FidRequest(
            real=_feature_model(args.real, args.modality),
            generated=_feature_model(args.generated, args.modality),
            estimator=args.estimator,
        )
    if cmd == "dce":
        return schemas.DceRequest(
            paintings=_feature_model(args.paintings, "painting"),
            poems=_feature_model(args.poems, "poem"),
            config=schemas.DceConfigModel(
                pca_dim=args.pca_dim,
                estimator=args.estimator,
                pca_fit_scope=args.fit_scope,
                standardize=args.standardize,
            ),
        )
    if cmd == "genre-acc":
        return schemas.GenreAccuracyRequest(
            predicted=_label_model(args.predicted), truth=_label_model(args.truth)
        )
    if cmd == "losses":
        def feats(path):
            return None if path is None else _feature_model(path)

        return schemas.LossesRequest(
            cycle_painting_original=feats(args.cycle_painting_original),
            cycle_painting_reconstruction=feats(args.cycle_painting_reconstruction),
            cycle_poem_original=feats(args.cycle_poem_original),
            cycle_poem_reconstruction=feats(args.cycle_poem_reconstruction),
            sup_poem_predicted=feats(args.sup_poem_predicted),
            sup_poem_true=feats(args.sup_poem_true),
            sup_painting_predicted=feats(args.sup_painting_predicted),
            sup_painting_true=feats(args.sup_painting_true),
            seq_real_scores=None if args.seq_real_scores is None
            else _score_column(args.seq_real_scores),
            seq_fake_scores=None if args.seq_fake_scores is None
            else _score_column(args.seq_fake_scores),
            patch_real_grids=None if args.patch_real_grids is None
            else _grid_models(args.patch_real_grids, args.patch_real_shapes),
            patch_fake_grids=None if args.patch_fake_grids is None
            else _grid_models(args.patch_fake_grids, args.patch_fake_shapes),
            lambda_sup=args.lambda_sup,
            lambda_adv=args.lambda_adv,
            non_saturating=args.non_saturating,
        )
    if cmd == "sample":
        matrix = corpus_io.load_features(args.logits, "poem")
        rows = [
            schemas.LogitRowModel(id=matrix.ids[i], logits=[float(v) for v in matrix.data[i]])
            for i in range(matrix.n)
        ]
        return schemas.SampleRequest(
            rows=rows,
            config=schemas.SamplingConfigModel(
                strategy=args.strategy, k=args.k, temperature=args.temperature,
                p=args.p, seed=_resolve_seed(args.seed),
            ),
        )
    if cmd == "correlate":
        metric_values: dict[str, dict[str, float]] = {}
        for path in args.metrics:
            report = _read_json(path)
            if "metric" not in report or not report.get("per_item"):
                raise ValidationFailure(f"{path}: not a per-item metric report")
            per_item = report["per_item"]
            if "value" in per_item[0]:
                name = canonical_metric_name(report["metric"])
                metric_values[name] = {e["id"]: float(e["value"]) for e in per_item}
            else:
                for key in per_item[0]:
                    if key == "id":
                        continue
                    name = canonical_metric_name(key)
                    metric_values[name] = {e["id"]: float(e[key]) for e in per_item}
        ratings = validation.load_ratings(args.ratings, raters=args.raters)
        return schemas.CorrelateRequest(
            metrics=metric_values,
            ratings=schemas.RatingsModel(
                item_ids=ratings.item_ids, criteria=ratings.criteria,
                scores=ratings.scores, raters=ratings.raters,
            ),
        )
    if cmd == "summary":
        return schemas.SummaryRequest(reports=[_read_json(p) for p in args.reports])
    raise ValidationFailure(f"unknown subcommand {cmd!r}")


# ---------------------------------------------------------------------------
# Dispatch and output


def _dispatch(args, request) -> dict:
    if args.server is None:
        return _HANDLERS[args.command](request)
    import httpx

    url = args.server.rstrip("/") + _ENDPOINTS[args.command]
    try:
        response = httpx.post(url, json=request.model_dump(mode="json"), timeout=300.0)
    except httpx.HTTPError as exc:
        raise InputOutputFailure(f"request to {url} failed: {exc}") from exc
    if response.status_code >= 400:
        try:
            error = response.json()["error"]
            category, message = error["category"], error["message"]
        except Exception:
            raise InputOutputFailure(
                f"server returned {response.status_code}: {response.text[:200]}"
            ) from None
        exc_type = {
            "validation": ValidationFailure,
            "io": InputOutputFailure,
            "numerical": NumericalFailure,
        }.get(category, InputOutputFailure)
        raise exc_type(message)
    return response.json()


def _json_block(payload: dict) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def render(command: str, fmt: str, result: dict) -> str:
    if command == "split":
        if fmt == "csv":
            lines = ["id,split"]
            lines += [f"{i},{s}" for i, s in sorted(result["assignment"].items())]
            return "\n".join(lines) + "\n"
        return _json_block(result)
    if command == "schedule":
        if fmt == "csv":
            lines = ["batch,paired_ids,unpaired_ids"]
            for b, batch in enumerate(result["batches"]):
                paired = "|".join("+".join(pair) for pair in batch["paired_ids"])
                unpaired = "|".join(batch["unpaired_ids"])
                lines.append(f"{b},{paired},{unpaired}")
            return "\n".join(lines) + "\n"
        return _json_block(result)
    if command == "sample":
        if fmt == "csv":
            lines = ["id,step,token"]
            for seq in result["sequences"]:
                lines += [f"{seq['id']},{t},{tok}" for t, tok in enumerate(seq["tokens"])]
            return "\n".join(lines) + "\n"
        lines = [json.dumps({"config": result["config"]}, ensure_ascii=False)]
        lines += [json.dumps(seq, ensure_ascii=False) for seq in result["sequences"]]
        return "\n".join(lines) + "\n"
    if command == "correlate":
        if fmt == "csv":
            return correlation_to_csv(result["row_names"], result["col_names"], result["values"])
        return _json_block(result)
    if command == "summary":
        if fmt == "csv":
            return summary_to_csv(result["metrics"])
        return summary_to_json(result["metrics"])
    # Per-metric reports share one shape.
    if fmt == "csv":
        return report_to_csv(result)
    return report_to_json(result)


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputOutputFailure(f"cannot write {out}: {exc}") from exc


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    request = build_request(args)
    result = _dispatch(args, request)
    _write_output(render(args.command, args.format, result), args.out)
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        return run(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        sys.stderr.write(f"ERROR 1: {exc}\n")
        return 1
    except ValidationFailure as exc:
        sys.stderr.write(f"ERROR 1: {exc}\n")
        return 1
    except InputOutputFailure as exc:
        sys.stderr.write(f"ERROR 2: {exc}\n")
        return 2
    except NumericalFailure as exc:
        sys.stderr.write(f"ERROR 3: {exc}\n")
        return 3
    except InkbridgeError as exc:  # pragma: no cover - future subclasses
        sys.stderr.write(f"ERROR 1: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
