from __future__ import annotations

import numpy as np

from ..errors import ArgumentError


class MajorityVoteModel:
    """Per feature index, the most frequent label (ties -> smaller label)."""

    kind = "majority_vote"

    def __init__(self, table: dict, default):
        self.table = table
        self.default = default

    def predict(self, feature_index):
        idx = np.atleast_1d(np.asarray(feature_index))
        out = np.array([self.table.get(int(i), self.default) for i in idx])
        return out if np.ndim(feature_index) else out[0]

    def score(self, features, labels) -> float:
        return float(np.mean(self.predict(np.asarray(features)) == np.asarray(labels)))


def _mode(labels: np.ndarray):
    vals, counts = np.unique(labels, return_counts=True)
    return vals[np.argmax(counts)]  # np.unique sorts, so ties go to the smaller label


def majority_vote(votes) -> MajorityVoteModel:
    """Fit from ``(feature_index, class_label)`` pairs."""
    votes = np.asarray(votes)
    if votes.size == 0:
        raise ArgumentError("majority vote needs at least one vote")
    votes = votes.reshape(-1, 2)
    feats, labels = votes[:, 0], votes[:, 1]
    table = {int(f): _mode(labels[feats == f]) for f in np.unique(feats)}
    return MajorityVoteModel(table, _mode(labels))
