"""FastAPI application exposing the evaluation operations.

Run with ``inkbridge-serve`` or ``uvicorn inkbridge.service.app:app``.
Core errors map to HTTP 400 with a category the CLI translates back into
exit codes: validation -> 1, io -> 2, numerical -> 3.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import InkbridgeError
from . import handlers, schemas

app = FastAPI(title="inkbridge", version=__version__)


@app.exception_handler(InkbridgeError)
async def _core_error(_: Request, exc: InkbridgeError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"error": {"category": exc.category, "message": str(exc)}},
    )


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/corpus/split", response_model=schemas.SplitResponse)
def split(req: schemas.SplitRequest):
    return handlers.split(req)


@app.post("/corpus/schedule", response_model=schemas.ScheduleResponse)
def schedule(req: schemas.ScheduleRequest):
    return handlers.schedule(req)


@app.post("/metrics/text/mce", response_model=schemas.MetricReport,
          response_model_exclude_none=True)
def mce(req: schemas.TokenMetricRequest):
    return handlers.mce(req)


@app.post("/metrics/text/mte", response_model=schemas.MetricReport,
          response_model_exclude_none=True)
def mte(req: schemas.TokenMetricRequest):
    return handlers.mte(req)


@app.post("/metrics/text/perplexity", response_model=schemas.MetricReport,
          response_model_exclude_none=True)
def perplexity(req: schemas.TokenMetricRequest):
    return handlers.perplexity(req)


@app.post("/metrics/text/prf", response_model=schemas.MetricReport,
          response_model_exclude_none=True)
def char_prf(req: schemas.PairMetricRequest):
    return handlers.char_prf(req)


@app.post("/metrics/text/bleu")
def bleu(req: schemas.PairMetricRequest) -> dict:
    return handlers.bleu(req)


@app.post("/metrics/text/meteor")
def meteor(req: schemas.PairMetricRequest) -> dict:
    return handlers.meteor(req)


@app.post("/metrics/visual/fid")
def fid(req: schemas.FidRequest) -> dict:
    return handlers.fid(req)


@app.post("/metrics/visual/dce")
def dce(req: schemas.DceRequest) -> dict:
    return handlers.dce(req)


@app.post("/metrics/visual/genre-accuracy", response_model=schemas.MetricReport,
          response_model_exclude_none=True)
def genre_accuracy(req: schemas.GenreAccuracyRequest):
    return handlers.genre_accuracy(req)


@app.post("/losses", response_model=schemas.LossReport)
def evaluate_losses(req: schemas.LossesRequest):
    return handlers.evaluate_losses(req)


@app.post("/sampling/sample", response_model=schemas.SampleResponse)
def sample(req: schemas.SampleRequest):
    return handlers.sample(req)


@app.post("/validation/correlate", response_model=schemas.CorrelationResponse)
def correlate(req: schemas.CorrelateRequest):
    return handlers.correlate(req)


@app.post("/reports/summary", response_model=schemas.SummaryResponse)
def summary(req: schemas.SummaryRequest):
    return handlers.summary(req)


def main() -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="inkbridge-serve")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()
    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
