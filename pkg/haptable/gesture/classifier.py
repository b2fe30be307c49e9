"""One-vs-rest linear max-margin classifier trained by deterministic full-batch Pegasos."""
import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError
from tqdm import tqdm

from haptable.errors import MissingClassError, ModelError
from haptable.gesture.efd import DescriptorVector
from haptable.gesture.features import MaskLike, dynamic_features, static_features
from haptable.gesture.settings import GestureSettings

logger = logging.getLogger(__name__)


class LinearModel(BaseModel):
    kind: Literal["static", "dynamic"]
    labels: List[str]
    mean: List[float]
    scale: List[float]
    feature_weights: List[float]
    # one row per label; the last column is the bias
    weights: List[List[float]]

    def _design(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        if features.shape[1] != len(self.mean):
            raise ModelError(f"model expects {len(self.mean)} features, got {features.shape[1]}")
        scaled = (features - np.asarray(self.mean)) / np.asarray(self.scale) * np.asarray(self.feature_weights)
        return np.hstack([scaled, np.ones((scaled.shape[0], 1))])

    def decision(self, features: np.ndarray) -> np.ndarray:
        """Per-label margins, shape (samples, labels)"""
        if not self.weights:
            raise ModelError("model has not been trained")
        return self._design(features) @ np.asarray(self.weights).T

    def predict(self, features: np.ndarray) -> Tuple[str, float]:
        scores = self.decision(features)[0]
        best = int(np.argmax(scores))
        return self.labels[best], float(scores[best])

    def predict_many(self, features: np.ndarray) -> List[str]:
        return [self.labels[i] for i in np.argmax(self.decision(features), axis=1)]


class TrainingReport(BaseModel):
    labels: List[str]
    accuracy: float
    fold_accuracies: List[float]
    # rows: true label, columns: predicted label
    confusion: List[List[int]]


def _check_classes(y: Sequence[str], labels: Sequence[str], minimum: int = 2) -> None:
    for label in labels:
        count = sum(1 for v in y if v == label)
        if count < minimum:
            raise MissingClassError(f"class {label!r} has {count} examples, at least {minimum} are required")
    unknown = set(y) - set(labels)
    if unknown:
        raise MissingClassError(f"examples carry labels outside the class set: {sorted(unknown)}")


def _pegasos(design: np.ndarray, targets: np.ndarray, lam: float, epochs: int) -> np.ndarray:
    """Averaged full-batch Pegasos iterate for one binary problem"""
    n, dims = design.shape
    w = np.zeros(dims)
    average = np.zeros(dims)
    radius = 1.0 / np.sqrt(lam)
    for t in range(1, epochs + 1):
        violators = targets * (design @ w) < 1.0
        gradient = lam * w - design[violators].T @ targets[violators] / n
        w = w - gradient / (lam * t)
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        average += (w - average) / t
    return average


def fit_linear(features: np.ndarray, y: Sequence[str], labels: Sequence[str], kind: str, lam: float = 0.01,
               epochs: int = 300, feature_weights: Optional[np.ndarray] = None) -> LinearModel:
    features = np.asarray(features, dtype=float)
    _check_classes(y, labels, minimum=1)
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0
    fw = np.ones(features.shape[1]) if feature_weights is None else np.asarray(feature_weights, dtype=float)
    model = LinearModel(kind=kind, labels=list(labels), mean=mean.tolist(), scale=scale.tolist(),
                        feature_weights=fw.tolist(), weights=[])
    design = model._design(features)
    y = np.asarray(y)
    weights = [_pegasos(design, np.where(y == label, 1.0, -1.0), lam, epochs) for label in labels]
    return model.model_copy(update={"weights": [w.tolist() for w in weights]})


def stratified_folds(y: Sequence[str], folds: int, seed: int) -> np.ndarray:
    """Fold number per example, each class dealt round-robin after a seeded shuffle"""
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    assignment = np.empty(len(y), dtype=int)
    for label in sorted(set(y.tolist())):
        members = rng.permutation(np.nonzero(y == label)[0])
        assignment[members] = np.arange(len(members)) % folds
    return assignment


def cross_validate(features: np.ndarray, y: Sequence[str], labels: Sequence[str], kind: str, folds: int = 2,
                   seed: int = 0, lam: float = 0.01, epochs: int = 300,
                   feature_weights: Optional[np.ndarray] = None, progress: bool = False) -> TrainingReport:
    features = np.asarray(features, dtype=float)
    y = np.asarray(y)
    _check_classes(y.tolist(), labels, minimum=folds)
    assignment = stratified_folds(y, folds, seed)
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    fold_accuracies = []
    for fold in tqdm(range(folds), desc="cross-validation", disable=not progress):
        train, test = assignment != fold, assignment == fold
        model = fit_linear(features[train], y[train].tolist(), labels, kind, lam, epochs, feature_weights)
        predicted = model.predict_many(features[test])
        for truth, guess in zip(y[test], predicted):
            confusion[index[truth], index[guess]] += 1
        fold_accuracies.append(float(np.mean(np.asarray(predicted) == y[test])))
    accuracy = float(np.trace(confusion) / confusion.sum())
    return TrainingReport(labels=list(labels), accuracy=accuracy, fold_accuracies=fold_accuracies,
                          confusion=confusion.tolist())


def train(features: np.ndarray, y: Sequence[str], labels: Sequence[str], kind: str,
          settings: Optional[GestureSettings] = None, folds: int = 2,
          feature_weights: Optional[np.ndarray] = None, progress: bool = False) -> Tuple[LinearModel, TrainingReport]:
    """Cross-validated accuracy report plus a model fitted on the whole corpus"""
    settings = settings or GestureSettings()
    report = cross_validate(features, y, labels, kind, folds, settings.seed, settings.svm_lambda,
                            settings.svm_epochs, feature_weights, progress)
    model = fit_linear(features, y, labels, kind, settings.svm_lambda, settings.svm_epochs, feature_weights)
    logger.info("%s classifier: %.1f%% two-fold accuracy over %d examples", kind, 100 * report.accuracy, len(y))
    return model, report


def save_model(model: LinearModel, path: Union[str, Path]) -> None:
    Path(path).write_text(model.model_dump_json(indent=1))


def load_model(path: Union[str, Path]) -> LinearModel:
    try:
        return LinearModel.model_validate(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise ModelError(f"cannot load model {path}: {e}")


def classify_static(descriptor: DescriptorVector, model: Optional[LinearModel]) -> Tuple[str, float]:
    if model is None or not model.weights:
        raise ModelError("static classifier has not been trained")
    if model.kind != "static":
        raise ModelError(f"expected a static model, got a {model.kind} one")
    return model.predict(static_features(descriptor))


def classify_dynamic(frames: Sequence[MaskLike], model: Optional[LinearModel],
                     settings: Optional[GestureSettings] = None) -> Tuple[str, float]:
    if model is None or not model.weights:
        raise ModelError("dynamic classifier has not been trained")
    if model.kind != "dynamic":
        raise ModelError(f"expected a dynamic model, got a {model.kind} one")
    return model.predict(dynamic_features(frames, settings))
