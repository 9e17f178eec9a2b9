"""
Quantized probability simplices.
"""

from __future__ import annotations

import logging
from itertools import combinations
from math import comb

import numpy as np

from packages.shared.errors import ValidationError

log = logging.getLogger(__name__)

MAX_GRID_POINTS = 50_000


def grid_size(k: int, m: int) -> int:
    return comb(m + k - 1, k - 1)


def simplex_grid(k: int, m: int) -> np.ndarray:
    """All pmfs on k symbols whose entries are multiples of 1/m (stars and bars)."""
    if k < 1 or m < 1:
        raise ValidationError(f"simplex grid needs k >= 1 and m >= 1, got k={k}, m={m}")
    bars = np.array(list(combinations(range(m + k - 1), k - 1)), dtype=int).reshape(-1, k - 1)
    n = bars.shape[0]
    edges = np.hstack([np.full((n, 1), -1), bars, np.full((n, 1), m + k - 1)])
    return (np.diff(edges, axis=1) - 1) / m


def simplex_points(k: int, resolution: int, seed: int = 0, cap: int = MAX_GRID_POINTS) -> np.ndarray:
    """Grid with `resolution` points per edge, or a seeded Dirichlet sample plus the vertices when too large."""
    if resolution < 2:
        raise ValidationError(f"resolution must be >= 2 points per edge, got {resolution}")
    m = resolution - 1
    if grid_size(k, m) <= cap:
        return simplex_grid(k, m)
    log.debug(f"simplex grid k={k} m={m} exceeds {cap} points, sampling instead")
    rng = np.random.default_rng([seed, k, m])
    return np.vstack([np.eye(k), rng.dirichlet(np.ones(k), size=cap - k)])
