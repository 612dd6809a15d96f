"""Stable seed derivation from a master seed and task labels."""
from __future__ import annotations

import hashlib

import numpy as np


def task_seed(master: int, *labels) -> int:
    """64-bit seed from ``master`` and any labels, independent of call order."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(master)).encode())
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode())
    return int.from_bytes(h.digest(), "little") & (2**63 - 1)


def task_rng(master: int, *labels) -> np.random.Generator:
    return np.random.default_rng(task_seed(master, *labels))
