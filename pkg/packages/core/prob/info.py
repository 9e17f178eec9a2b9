"""
Information measures in bits.

0 * log 0 is taken as 0 (scipy.special.entr handles the boundary).
"""

from __future__ import annotations

from typing import Union

import numpy as np
from scipy.special import entr

from .types import JointSourcePMF, ProbVec

LN2 = np.log(2.0)

PmfLike = Union[ProbVec, JointSourcePMF, np.ndarray]


def _mass(p: PmfLike) -> np.ndarray:
    if isinstance(p, (ProbVec, JointSourcePMF)):
        return p.mass
    return np.asarray(p, dtype=float)


def _h(arr: np.ndarray) -> float:
    return float(entr(arr).sum() / LN2)


def entropy(p: PmfLike) -> float:
    """Joint entropy of all axes of p."""
    return _h(_mass(p))


def conditional_entropy(joint: PmfLike, given: int) -> float:
    """H(A | B) for a 2-axis pmf, where `given` is the axis of B (0 or 1).

    For a JointSourcePMF, given=1 yields H(S1|S2) and given=0 yields H(S2|S1).
    """
    m = _mass(joint)
    return _h(m) - _h(m.sum(axis=1 - given))


def mutual_information(joint: PmfLike) -> float:
    """I(A; B) for a 2-axis pmf."""
    m = _mass(joint)
    value = _h(m.sum(axis=1)) + _h(m.sum(axis=0)) - _h(m)
    return max(value, 0.0)


def conditional_mutual_information(joint: PmfLike) -> float:
    """I(A; B | C) for a 3-axis pmf indexed [a, b, c]."""
    m = _mass(joint)
    value = _h(m.sum(axis=1)) + _h(m.sum(axis=0)) - _h(m) - _h(m.sum(axis=(0, 1)))
    return max(value, 0.0)


def binary_entropy(p: float) -> float:
    return _h(np.array([p, 1.0 - p]))
