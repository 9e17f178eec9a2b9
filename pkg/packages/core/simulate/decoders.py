"""
Posterior decoders for symbol-by-symbol schemes.

With singleton auxiliaries user 1 sees (s1, y1) and estimates S2; user 2 sees
(s2, y2) and estimates S1. Tables are indexed [s_own, y_own]; cells that no
positive-probability outcome reaches hold -1.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from packages.core.hybrid.types import UNREACHABLE
from packages.core.prob.types import DistortionMatrix, JointSourcePMF, TwoWayChannel
from packages.shared.errors import ValidationError

log = logging.getLogger(__name__)

RULES = ("map", "mmse", "bayes")
MASS_TOL = 1e-15


def symbol_encoder(f, n_src: int, n_in: int, user: int) -> np.ndarray:
    """Accept f[s] or a singleton-aux table f[0][s]; return f[s]."""
    arr = np.asarray(f, dtype=int)
    if arr.ndim == 2:
        if arr.shape[0] != 1:
            raise ValidationError(f"encoder of user {user} uses an auxiliary alphabet of size {arr.shape[0]}")
        arr = arr[0]
    if arr.shape != (n_src,):
        raise ValidationError(f"encoder of user {user} has shape {arr.shape}, expected ({n_src},)")
    if arr.min() < 0 or arr.max() >= n_in:
        raise ValidationError(f"encoder of user {user} maps outside the channel input alphabet")
    return arr


def observation_cells(src: JointSourcePMF, ch: TwoWayChannel, f1: np.ndarray, f2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(P(s1, y1, s2), P(s2, y2, s1)) under the symbol maps f1, f2."""
    t = ch.trans[f1[:, None], f2[None, :]]  # [s1, s2, y1, y2]
    full = src.mass[:, :, None, None] * t
    return np.einsum("abij->aib", full), np.einsum("abij->bja", full)


def _map(cells: np.ndarray) -> np.ndarray:
    return np.argmax(cells, axis=-1)


def _mmse(cells: np.ndarray, values: np.ndarray, recon: np.ndarray) -> np.ndarray:
    mass = cells.sum(axis=-1)
    mean = (cells @ values) / np.where(mass > 0, mass, 1.0)
    return np.argmin(np.abs(mean[..., None] - recon), axis=-1)


def _bayes(cells: np.ndarray, d: DistortionMatrix) -> np.ndarray:
    return np.argmin(cells @ d.d, axis=-1)


def _decode(cells: np.ndarray, rule: str, src: JointSourcePMF, target: int, d: Optional[DistortionMatrix]) -> np.ndarray:
    if rule == "map":
        g = _map(cells)
    elif rule == "mmse":
        values = src.alphabets[target - 1].numeric_values()
        recon = d.reconstruction_values() if d is not None else values
        g = _mmse(cells, values, recon)
    else:
        if d is None:
            raise ValidationError("the bayes rule needs distortion matrices")
        g = _bayes(cells, d)
    return np.where(cells.sum(axis=-1) > MASS_TOL, g, UNREACHABLE)


def derive_map_decoder(
    src: JointSourcePMF,
    ch: TwoWayChannel,
    encoders,
    rule: str = "map",
    d1: Optional[DistortionMatrix] = None,
    d2: Optional[DistortionMatrix] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact posterior decoders (g1[s1, y1] -> S2, g2[s2, y2] -> S1).

    map: posterior argmax, lowest index on ties. mmse: conditional mean of the
    numeric source labels rounded to the nearest reconstruction value.
    bayes: minimum expected distortion under d1/d2.
    """
    if rule not in RULES:
        raise ValidationError(f"unknown decoder rule {rule!r}, expected one of {RULES}")
    n1, n2 = src.shape
    a, b = ch.input_sizes
    f1 = symbol_encoder(encoders[0], n1, a, 1)
    f2 = symbol_encoder(encoders[1], n2, b, 2)
    at1, at2 = observation_cells(src, ch, f1, f2)
    g1 = _decode(at1, rule, src, 2, d2)
    g2 = _decode(at2, rule, src, 1, d1)
    log.debug(f"{rule} decoders: g1={g1.tolist()} g2={g2.tolist()}")
    return g1, g2


def lift(g: np.ndarray) -> np.ndarray:
    """2-D table [s, y] as a hybrid decoder over singleton auxiliaries [0, 0, s, y]."""
    return np.asarray(g, dtype=int)[None, None]
