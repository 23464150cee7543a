"""Coherency scorer: logistic model over engineered features.

The numeric core is a scikit-learn-compatible estimator trained by
full-batch gradient descent for bit-reproducible results. Record-level
helpers wrap it behind the scorer interface (facet set -> s in [0, 1],
coherent iff s > 0.5 strictly), with a serializable model document and an
optional HTTP client so an external scorer can fill the same slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

import httpx
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..corpus import FacetSet, Query
from ..embeddings import EmbeddingProvider
from ..errors import (
    EmptyTestSetError,
    NonFiniteLossError,
    ProvenanceError,
    ProviderFailureError,
    SchemaMismatchError,
    SingleClassTrainingError,
)
from .features import (
    FEATURE_SCHEMA_VERSION,
    extract_features,
    feature_matrix,
    feature_names,
)
from .weak_labels import Label, LabeledRecord

MODEL_FORMAT = "facetkit-coherency-model"
MODEL_FORMAT_VERSION = 1


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy + l2 * ||w||^2 (bias unpenalized) and its gradient.

    Computed via log(1 + e^z) - y*z for stability; smooth everywhere, which
    the finite-difference check relies on.
    """
    z = X @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + l2 * np.dot(weights, weights))
    with np.errstate(over="ignore"):  # exp saturates to 0/1 by design
        p = 1.0 / (1.0 + np.exp(-z))
    residual = p - y
    grad_w = X.T @ residual / len(y) + 2.0 * l2 * weights
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


class CoherencyClassifier(BaseEstimator, ClassifierMixin):
    """Standardize-then-logistic classifier fit by full-batch gradient descent.

    One epoch is one full-batch step. Weights start at zero, so the untrained
    decision function is exactly 0 and every probability is exactly 0.5.
    When a validation set is supplied, training stops after ``patience``
    consecutive epochs without validation-loss improvement and the weights
    revert to the best validation epoch.
    """

    def __init__(
        self,
        learning_rate: float = 0.1,
        epochs: int = 4,
        patience: int = 2,
        l2: float = 0.0,
        seed: int = 0,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.patience = patience
        self.l2 = l2
        self.seed = seed

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = check_X_y(X, y)
        y = y.astype(float)
        classes = np.unique(y)
        if len(classes) < 2:
            raise SingleClassTrainingError(
                "training data must contain both classes"
            )
        if not np.array_equal(classes, [0.0, 1.0]):
            raise ValueError("labels must be 0 (incoherent) or 1 (coherent)")
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]

        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0  # constant features pass through unscaled
        self.scale_ = scale
        Xs = (X - self.mean_) / self.scale_

        has_val = X_val is not None and len(X_val) > 0
        if has_val:
            X_val = check_array(X_val)
            y_val = np.asarray(y_val, dtype=float)
            Xv = (X_val - self.mean_) / self.scale_

        w = np.zeros(X.shape[1])
        b = 0.0
        trace: list[dict] = []

        def record(epoch: int) -> tuple[float, float | None]:
            train_loss, _, _ = loss_and_gradient(w, b, Xs, y, self.l2)
            val_loss = None
            if has_val:
                val_loss, _, _ = loss_and_gradient(w, b, Xv, y_val, self.l2)
            trace.append(
                {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss}
            )
            return train_loss, val_loss

        _, val_loss = record(0)
        best = (val_loss, w.copy(), b, 0)
        bad_epochs = 0
        self.stopped_early_ = False
        for epoch in range(1, self.epochs + 1):
            _, grad_w, grad_b = loss_and_gradient(w, b, Xs, y, self.l2)
            w -= self.learning_rate * grad_w
            b -= self.learning_rate * grad_b
            train_loss, val_loss = record(epoch)
            if not np.isfinite(train_loss):
                raise NonFiniteLossError(
                    f"training loss became non-finite at epoch {epoch}"
                )
            if has_val:
                if val_loss < best[0]:
                    best = (val_loss, w.copy(), b, epoch)
                    bad_epochs = 0
                else:
                    bad_epochs += 1
                    if bad_epochs >= self.patience:
                        self.stopped_early_ = True
                        break

        if has_val:
            _, w, b, best_epoch = best
        else:
            best_epoch = len(trace) - 1
        self.coef_ = w
        self.intercept_ = b
        self.best_epoch_ = best_epoch
        self.loss_trace_ = trace
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return (X - self.mean_) / self.scale_ @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        with np.errstate(over="ignore"):
            s = 1.0 / (1.0 + np.exp(-self.decision_function(X)))
        return np.column_stack([1.0 - s, s])

    def predict(self, X) -> np.ndarray:
        # coherent only on strictly > 0.5, i.e. decision value strictly > 0
        return (self.decision_function(X) > 0.0).astype(int)


# --------------------------------------------------------------------------
# Record-level scorer interface
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 4
    patience: int = 2
    l2: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class CoherencyModel:
    """Serialized form of a trained scorer; enough to reproduce predictions."""

    feature_schema_version: int
    feature_names: tuple[str, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    weights: tuple[float, ...]
    bias: float
    training: dict

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.feature_names):
            raise ValueError("one weight per feature is required")
        if any(s <= 0 for s in self.std):
            raise ValueError("standardization stds must be positive")


@dataclass(frozen=True)
class Prediction:
    s: float
    label: Label


def _check_schema(model: CoherencyModel) -> None:
    if (
        model.feature_schema_version != FEATURE_SCHEMA_VERSION
        or list(model.feature_names) != feature_names()
    ):
        raise SchemaMismatchError(
            f"model feature schema v{model.feature_schema_version} does not match "
            f"extractor v{FEATURE_SCHEMA_VERSION}"
        )


def _require_trainable(items: Sequence[LabeledRecord], context: str) -> None:
    for item in items:
        if item.label.is_predicted:
            raise ProvenanceError(f"predicted labels may not be used for {context}")


def _as_xy(
    items: Sequence[LabeledRecord], provider: EmbeddingProvider
) -> tuple[np.ndarray, np.ndarray]:
    X = feature_matrix([(it.record.facets, it.record.query) for it in items], provider)
    y = np.array([1 if it.label.value is Label.COHERENT else 0 for it in items])
    return X, y


def train(
    train_records: Sequence[LabeledRecord],
    validation_records: Sequence[LabeledRecord],
    provider: EmbeddingProvider,
    config: TrainConfig = TrainConfig(),
) -> CoherencyModel:
    """Fit the scorer on labeled records and pack a serializable model."""
    _require_trainable(train_records, "training")
    _require_trainable(validation_records, "validation")
    X, y = _as_xy(train_records, provider)
    X_val = y_val = None
    if validation_records:
        X_val, y_val = _as_xy(validation_records, provider)

    estimator = CoherencyClassifier(
        learning_rate=config.learning_rate,
        epochs=config.epochs,
        patience=config.patience,
        l2=config.l2,
        seed=config.seed,
    )
    estimator.fit(X, y, X_val=X_val, y_val=y_val)
    return CoherencyModel(
        feature_schema_version=FEATURE_SCHEMA_VERSION,
        feature_names=tuple(feature_names()),
        mean=tuple(float(v) for v in estimator.mean_),
        std=tuple(float(v) for v in estimator.scale_),
        weights=tuple(float(v) for v in estimator.coef_),
        bias=float(estimator.intercept_),
        training={
            "seed": config.seed,
            "learning_rate": config.learning_rate,
            "epochs": config.epochs,
            "patience": config.patience,
            "l2": config.l2,
            "epochs_run": len(estimator.loss_trace_) - 1,
            "best_epoch": estimator.best_epoch_,
            "stopped_early": estimator.stopped_early_,
            "loss_trace": estimator.loss_trace_,
        },
    )


def predict(
    model: CoherencyModel,
    facets: FacetSet,
    query: Query,
    provider: EmbeddingProvider,
) -> Prediction:
    """Score one facet set: s = logistic(w . standardize(features) + b)."""
    _check_schema(model)
    x = extract_features(facets, query, provider).to_array()
    z = (x - np.array(model.mean)) / np.array(model.std) @ np.array(model.weights)
    with np.errstate(over="ignore"):
        s = float(1.0 / (1.0 + np.exp(-(z + model.bias))))
    label = Label.COHERENT if s > 0.5 else Label.INCOHERENT
    return Prediction(s=s, label=label)


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    confusion: dict[str, dict[str, int]]


def evaluate(
    model: CoherencyModel,
    test_records: Sequence[LabeledRecord],
    provider: EmbeddingProvider,
) -> EvalReport:
    """Accuracy, macro-F1 and the 2x2 confusion table on held-out labels."""
    if not test_records:
        raise EmptyTestSetError("evaluation requires at least one test record")
    _require_trainable(test_records, "evaluation")

    confusion = {
        t.value: {p.value: 0 for p in Label} for t in Label
    }
    correct = 0
    for item in test_records:
        predicted = predict(model, item.record.facets, item.record.query, provider)
        confusion[item.label.value.value][predicted.label.value] += 1
        if predicted.label is item.label.value:
            correct += 1

    f1s = []
    for cls in Label:
        tp = confusion[cls.value][cls.value]
        fp = sum(confusion[other.value][cls.value] for other in Label if other is not cls)
        fn = sum(confusion[cls.value][other.value] for other in Label if other is not cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1s.append(
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    return EvalReport(
        accuracy=correct / len(test_records),
        macro_f1=float(np.mean(f1s)),
        confusion=confusion,
    )


def prevalence(
    model: CoherencyModel,
    items: Sequence[tuple[FacetSet, Query]],
    provider: EmbeddingProvider,
    group_by_m: bool = False,
) -> float | dict[int, float]:
    """Fraction of facet sets the model labels incoherent."""
    if not items:
        raise ValueError("prevalence requires at least one record")
    flags: list[tuple[int, bool]] = []
    for facets, query in items:
        result = predict(model, facets, query, provider)
        flags.append((facets.size, result.label is Label.INCOHERENT))
    if not group_by_m:
        return sum(1 for _, inc in flags if inc) / len(flags)
    grouped: dict[int, list[bool]] = {}
    for m, inc in flags:
        grouped.setdefault(m, []).append(inc)
    return {m: sum(v) / len(v) for m, v in sorted(grouped.items())}


# --------------------------------------------------------------------------
# Model file round-trip
# --------------------------------------------------------------------------


def save_model(model: CoherencyModel, stream: IO[str]) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "feature_schema_version": model.feature_schema_version,
        "feature_names": list(model.feature_names),
        "standardization": {"mean": list(model.mean), "std": list(model.std)},
        "weights": list(model.weights),
        "bias": model.bias,
        "training": model.training,
    }
    json.dump(payload, stream, indent=2)
    stream.write("\n")


def load_model(stream: IO[str]) -> CoherencyModel:
    payload = json.load(stream)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} document")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {payload.get('format_version')}")
    return CoherencyModel(
        feature_schema_version=payload["feature_schema_version"],
        feature_names=tuple(payload["feature_names"]),
        mean=tuple(payload["standardization"]["mean"]),
        std=tuple(payload["standardization"]["std"]),
        weights=tuple(payload["weights"]),
        bias=payload["bias"],
        training=payload.get("training", {}),
    )


class ExternalScorerClient:
    """Client for a remote scorer exposing POST /score.

    Request: ``{"query": ..., "facets": [...]}``; response: ``{"s": x}``.
    Satisfies the same facet-set -> score interface as the local model.
    """

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self._base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=30.0)

    def score(self, facets: FacetSet, query: Query) -> Prediction:
        try:
            response = self._client.post(
                self._base_url + "/score",
                json={"query": query.text, "facets": facets.raw_texts()},
            )
            response.raise_for_status()
            s = float(response.json()["s"])
        except (httpx.HTTPError, KeyError, TypeError, ValueError) as exc:
            raise ProviderFailureError(f"external scorer failed: {exc}") from exc
        if not 0.0 <= s <= 1.0:
            raise ProviderFailureError(f"external scorer returned s={s} outside [0, 1]")
        label = Label.COHERENT if s > 0.5 else Label.INCOHERENT
        return Prediction(s=s, label=label)
