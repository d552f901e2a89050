"""Zero-shot audio classification from class-label embeddings.

Core pieces: a bilinear compatibility model trained with rank-weighted
hinge SGD (:mod:`zsac.model`), word-vector loading and label-embedding
composition (:mod:`zsac.embeddings`), split-protocol evaluation with
synthetic oracles and report writing (:mod:`zsac.evaluation`), an HTTP
service (:mod:`zsac.service`), and a command-line client (:mod:`zsac.cli`).
"""

from .model import (
    ClassSet,
    LabeledClass,
    SavedModel,
    TrainingConfig,
    TrainingSet,
    compatibility,
    empirical_risk,
    load_model,
    loss_gradient,
    margin_loss,
    predict,
    rank_penalty,
    save_model,
    train,
    violation_rank,
)

__version__ = "0.1.0"

__all__ = [
    "ClassSet",
    "LabeledClass",
    "SavedModel",
    "TrainingConfig",
    "TrainingSet",
    "compatibility",
    "empirical_risk",
    "load_model",
    "loss_gradient",
    "margin_loss",
    "predict",
    "rank_penalty",
    "save_model",
    "train",
    "violation_rank",
    "__version__",
]
