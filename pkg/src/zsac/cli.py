"""Command-line client for the zsac workflows.

Each subcommand marshals its flags into the corresponding service request
model and executes it, either in-process (default) or against a running
service when ``--server`` (or a ``server`` config entry) is given. Flags
override config-file entries; config entries a command does not use are
ignored, explicit flags it does not use are rejected.

Exit codes: 0 success, 1 data/computation error, 2 usage/configuration
error. ``ZSAC_LOG`` (debug|info|warning|error) sets stderr log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .errors import ParameterError, ZsacError

log = logging.getLogger("zsac")

_USAGE_ERRORS = ("ParameterError", "FileNotFoundError")
_COMPOSE_USAGE_ERRORS = _USAGE_ERRORS + (
    "OovError",
    "EmptyCompositionError",
    "DuplicateLabelError",
)

_COMMON_FLAGS = {
    "config": dict(metavar="PATH", help="JSON config file; flags override its entries"),
    "server": dict(metavar="URL", help="run against a zsac service instead of in-process"),
    "seed": dict(type="uint", metavar="N", help="seed for randomized grouping/ordering"),
    "eta": dict(type="posfloat", metavar="F", help="learning rate (> 0)"),
    "epochs": dict(type="uint", metavar="N", help="training epochs (>= 0)"),
    "setting": dict(type="int", choices=[1, 2, 3, 4], help="evaluation protocol"),
    "category": dict(metavar="NAME", help="category for setting 1"),
    "oov": dict(choices=["error", "skip"], help="out-of-vocabulary token policy"),
    "normalize": dict(action="store_true", help="L2-normalize audio and label embeddings"),
    "relaxed": dict(action="store_true", help="allow non-standard dataset shapes"),
    "jobs": dict(type="posint", metavar="N", help="parallel evaluation runs"),
    "out": dict(metavar="PATH", help="output file or directory"),
    "sort-order": dict(choices=["descending", "ascending"], help="per-sample loss sort order"),
    "shuffle": dict(action="store_true", help="reshuffle sample order every epoch"),
}

# Flags each with a meaning for each command; other explicit flags are rejected.
_COMMAND_FLAGS = {
    "compose-labels": {"config", "server", "oov", "out", "word-vectors", "labels"},
    "train": {
        "config", "server", "seed", "eta", "epochs", "normalize", "out",
        "sort-order", "shuffle", "manifest", "embeddings", "labels",
    },
    "predict": {"config", "server", "out", "model", "labels", "embeddings", "ids"},
    "evaluate": {
        "config", "server", "seed", "eta", "epochs", "setting", "category", "oov",
        "normalize", "relaxed", "jobs", "out", "sort-order", "shuffle",
        "manifest", "embeddings", "labels", "word-vectors",
    },
    "synth": {
        "config", "server", "seed", "out",
        "classes", "samples-per-class", "audio-dim", "label-dim", "noise",
    },
}

_DEFAULTS = {
    "seed": 0,
    "eta": 0.01,
    "epochs": 50,
    "oov": "error",
    "jobs": 1,
    "sort_order": "descending",
    "normalize": False,
    "relaxed": False,
    "shuffle": False,
    "classes": 50,
    "samples_per_class": 40,
    "audio_dim": 16,
    "label_dim": 16,
    "noise": 0.05,
}


def _posfloat(value: str) -> float:
    v = float(value)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return v


def _uint(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return v


def _posint(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return v


_TYPES = {"posfloat": _posfloat, "uint": _uint, "posint": _posint, "int": int}


def _add_flag(parser: argparse.ArgumentParser, name: str, spec: dict) -> None:
    kwargs = dict(spec)
    if isinstance(kwargs.get("type"), str):
        kwargs["type"] = _TYPES[kwargs["type"]]
    kwargs.setdefault("default", None)
    parser.add_argument(f"--{name}", dest=name.replace("-", "_"), **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsac",
        description="Zero-shot audio classification: compose label embeddings, "
        "train and apply a bilinear compatibility model, run split-protocol evaluations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    extra = {
        "compose-labels": [
            ("word-vectors", dict(metavar="PATH", help="word-vector table file")),
            ("labels", dict(metavar="PATH", help="label list CSV (label,category)")),
        ],
        "train": [
            ("manifest", dict(metavar="PATH", help="dataset manifest CSV")),
            ("embeddings", dict(metavar="PATH", help="audio embeddings JSONL")),
            ("labels", dict(metavar="PATH", help="composed labels JSONL")),
        ],
        "predict": [
            ("model", dict(metavar="PATH", help="trained model JSON")),
            ("labels", dict(metavar="PATH", help="composed candidate labels JSONL")),
            ("embeddings", dict(metavar="PATH", help="audio embeddings JSONL")),
            ("ids", dict(nargs="*", metavar="ID", help="sample ids (default: all)")),
        ],
        "evaluate": [
            ("manifest", dict(metavar="PATH", help="dataset manifest CSV")),
            ("embeddings", dict(metavar="PATH", help="audio embeddings JSONL")),
            ("labels", dict(metavar="PATH", help="composed labels JSONL")),
            ("word-vectors", dict(metavar="PATH", help="word-vector table (composes from the manifest)")),
        ],
        "synth": [
            ("classes", dict(type="posint", metavar="N", help="number of classes")),
            ("samples-per-class", dict(type="posint", metavar="N")),
            ("audio-dim", dict(type="posint", metavar="N")),
            ("label-dim", dict(type="posint", metavar="N")),
            ("noise", dict(type="float", metavar="F", help="Gaussian noise scale")),
        ],
    }
    help_text = {
        "compose-labels": "compose class-label embeddings from a word-vector table",
        "train": "train the compatibility matrix and write a model file",
        "predict": "score samples against candidate classes with a trained model",
        "evaluate": "run a split-protocol evaluation and write reports",
        "synth": "generate a synthetic corpus in the interchange formats",
    }
    for command, flags in _COMMAND_FLAGS.items():
        p = sub.add_parser(command, help=help_text[command])
        for name, spec in _COMMON_FLAGS.items():
            if name in flags:
                _add_flag(p, name, spec)
        for name, spec in extra.get(command, []):
            spec = dict(spec)
            if spec.get("type") == "float":
                spec["type"] = float
            _add_flag(p, name, spec)
    return parser


def _merge_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """defaults <- config file <- explicit flags, restricted to ``keys``."""
    merged = {k: _DEFAULTS.get(k) for k in keys}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ParameterError(f"config file does not exist: {path}")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParameterError(f"config file is not valid JSON: {e}") from e
        if not isinstance(file_cfg, dict):
            raise ParameterError("config file must contain a JSON object")
        for k, v in file_cfg.items():
            if k in keys:
                merged[k] = v
    for k in keys:
        v = getattr(args, k, None)
        if v is not None and v != []:
            merged[k] = v
    return merged


def _require(cfg: dict, *names: str) -> None:
    for name in names:
        if cfg.get(name) in (None, ""):
            raise ParameterError(f"missing required option --{name.replace('_', '-')}")


def _execute(command: str, payload, server: str | None):
    from .service import handlers, schemas

    registry = {
        "synth": (schemas.SynthRequest, schemas.SynthResponse, handlers.synth, "/synth"),
        "compose-labels": (
            schemas.ComposeLabelsRequest,
            schemas.ComposeLabelsResponse,
            handlers.compose_labels,
            "/compose-labels",
        ),
        "train": (schemas.TrainRequest, schemas.TrainResponse, handlers.train, "/train"),
        "predict": (schemas.PredictRequest, schemas.PredictResponse, handlers.predict, "/predict"),
        "evaluate": (
            schemas.EvaluateRequest,
            schemas.EvaluateResponse,
            handlers.evaluate,
            "/evaluate",
        ),
    }
    request_cls, response_cls, handler, route = registry[command]
    request = request_cls(**payload)
    if server is None:
        return handler(request)
    import httpx

    resp = httpx.post(server.rstrip("/") + route, json=request.model_dump(), timeout=None)
    if resp.status_code != 200:
        try:
            body = resp.json()
        except ValueError:
            body = {"error": "ZsacError", "detail": resp.text}
        raise _RemoteError(body.get("error", "ZsacError"), body.get("detail", ""))
    return response_cls(**resp.json())


class _RemoteError(Exception):
    def __init__(self, error: str, detail: str):
        super().__init__(f"{error}: {detail}")
        self.error = error


def _reject_unused_flags(args: argparse.Namespace, command: str) -> None:
    allowed = {f.replace("-", "_") for f in _COMMAND_FLAGS[command]}
    for name, value in vars(args).items():
        if name == "command" or name in allowed:
            continue
        if value is not None and value is not False and value != []:
            raise ParameterError(f"--{name.replace('_', '-')} does not apply to '{command}'")


def _run(args: argparse.Namespace) -> int:
    command = args.command
    _reject_unused_flags(args, command)
    keys = sorted(f.replace("-", "_") for f in _COMMAND_FLAGS[command])
    cfg = _merge_config(args, keys)
    server = cfg.pop("server", None)

    if command == "synth":
        _require(cfg, "out")
        payload = {
            "out_dir": cfg["out"],
            "classes": cfg["classes"],
            "samples_per_class": cfg["samples_per_class"],
            "audio_dim": cfg["audio_dim"],
            "label_dim": cfg["label_dim"],
            "noise_sigma": cfg["noise"],
            "seed": cfg["seed"],
        }
        resp = _execute(command, payload, server)
        for name, path in resp.files.items():
            print(f"{name}={path}")
        return 0

    if command == "compose-labels":
        _require(cfg, "word_vectors", "labels", "out")
        payload = {
            "word_vectors": cfg["word_vectors"],
            "labels": cfg["labels"],
            "out": cfg["out"],
            "oov_policy": cfg["oov"],
        }
        resp = _execute(command, payload, server)
        print(resp.out_path)
        return 0

    if command == "train":
        _require(cfg, "manifest", "embeddings", "labels", "out")
        payload = {
            "manifest": cfg["manifest"],
            "embeddings": cfg["embeddings"],
            "labels": cfg["labels"],
            "out": cfg["out"],
            "eta": cfg["eta"],
            "epochs": cfg["epochs"],
            "seed": cfg["seed"],
            "sort_order": cfg["sort_order"],
            "shuffle": cfg["shuffle"],
            "normalize": cfg["normalize"],
        }
        resp = _execute(command, payload, server)
        print(format(resp.empirical_risk, ".17g"))
        return 0

    if command == "predict":
        _require(cfg, "model", "labels", "embeddings", "out")
        payload = {
            "model": cfg["model"],
            "labels": cfg["labels"],
            "embeddings": cfg["embeddings"],
            "out": cfg["out"],
            "ids": cfg.get("ids") or None,
        }
        resp = _execute(command, payload, server)
        print(resp.out_path)
        return 0

    if command == "evaluate":
        _require(cfg, "manifest", "embeddings", "setting", "out")
        if bool(cfg.get("labels")) == bool(cfg.get("word_vectors")):
            raise ParameterError("provide exactly one of --labels or --word-vectors")
        if cfg["setting"] == 1 and not cfg.get("category"):
            raise ParameterError("--setting 1 requires --category")
        if cfg["setting"] != 1 and cfg.get("category"):
            raise ParameterError("--category only applies to --setting 1")
        payload = {
            "manifest": cfg["manifest"],
            "embeddings": cfg["embeddings"],
            "out_dir": cfg["out"],
            "setting": cfg["setting"],
            "word_vectors": cfg.get("word_vectors"),
            "labels": cfg.get("labels"),
            "category": cfg.get("category"),
            "oov_policy": cfg["oov"],
            "seed": cfg["seed"],
            "eta": cfg["eta"],
            "epochs": cfg["epochs"],
            "sort_order": cfg["sort_order"],
            "shuffle": cfg["shuffle"],
            "normalize": cfg["normalize"],
            "relaxed": cfg["relaxed"],
            "jobs": cfg["jobs"],
        }
        resp = _execute(command, payload, server)
        print(format(resp.aggregate_accuracy, ".17g"))
        return 0

    raise ParameterError(f"unknown command '{command}'")


def _exit_code(exc: Exception, command: str) -> int:
    usage = _COMPOSE_USAGE_ERRORS if command == "compose-labels" else _USAGE_ERRORS
    if isinstance(exc, _RemoteError):
        return 2 if exc.error in usage else 1
    return 2 if type(exc).__name__ in usage else 1


def _configure_logging() -> None:
    level_name = os.environ.get("ZSAC_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ZsacError, FileNotFoundError, _RemoteError) as e:
        code = _exit_code(e, args.command)
        print(f"error: {e}", file=sys.stderr)
        return code
    except Exception as e:  # pragma: no cover - defensive
        log.exception("unexpected failure")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
