"""FastAPI service exposing the training, prediction, and evaluation workflows.

Run with ``uvicorn zsac.service.app:app``. All file paths in requests are
resolved on the server's filesystem.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ParameterError, ZsacError
from . import handlers, schemas

app = FastAPI(
    title="zsac",
    description="Zero-shot audio classification from class-label embeddings",
    version="0.1.0",
)


@app.exception_handler(ZsacError)
async def _domain_error(request: Request, exc: ZsacError) -> JSONResponse:
    status = 422 if isinstance(exc, ParameterError) else 400
    return JSONResponse(status_code=status, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _missing_file(request: Request, exc: FileNotFoundError) -> JSONResponse:
    return JSONResponse(status_code=404, content={"error": "FileNotFoundError", "detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/synth", response_model=schemas.SynthResponse)
def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    return handlers.synth(req)


@app.post("/compose-labels", response_model=schemas.ComposeLabelsResponse)
def compose_labels(req: schemas.ComposeLabelsRequest) -> schemas.ComposeLabelsResponse:
    return handlers.compose_labels(req)


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    return handlers.train(req)


@app.post("/predict", response_model=schemas.PredictResponse)
def predict(req: schemas.PredictRequest) -> schemas.PredictResponse:
    return handlers.predict(req)


@app.post("/evaluate", response_model=schemas.EvaluateResponse)
def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    return handlers.evaluate(req)
