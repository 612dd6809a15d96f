from __future__ import annotations

import numpy as np

from ..errors import DegenerateLabelError


def encode_labels(y) -> tuple[np.ndarray, np.ndarray]:
    """Map labels to ``0..C-1``; raise if fewer than two classes are present."""
    classes, yi = np.unique(np.asarray(y).ravel(), return_inverse=True)
    if classes.size < 2:
        raise DegenerateLabelError(
            f"need at least two classes, got {classes.size} ({classes.tolist()})")
    return classes, yi.ravel()


class ClassifierModel:
    """Common surface of fitted classifiers."""

    kind: str = ""
    classes: np.ndarray
    importances: np.ndarray | None = None

    def decision_function(self, X) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(np.asarray(X, dtype=np.float64))
        # argmax picks the lowest index among ties
        return self.classes[np.argmax(scores, axis=1)]

    def score(self, X, y) -> float:
        return float(np.mean(self.predict(X) == np.asarray(y).ravel()))


class ConstantModel(ClassifierModel):
    """Predicts a single label; the fallback when a training split has one class."""

    kind = "constant"

    def __init__(self, label):
        self.classes = np.array([label])

    def decision_function(self, X):
        return np.zeros((np.asarray(X).shape[0], 1))
