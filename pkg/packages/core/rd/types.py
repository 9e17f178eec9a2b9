from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from packages.shared.errors import ValidationError
from packages.core.prob.types import Alphabet, CondPMF

CONVEXITY_TOL = 1e-9


@dataclass(frozen=True)
class RDPoint:
    distortion: float
    rate: float  # bits per source symbol
    slope: float  # Lagrange parameter, <= 0

    def __post_init__(self) -> None:
        if self.rate < -1e-12:
            raise ValidationError(f"negative rate {self.rate}")
        if self.distortion < -1e-12:
            raise ValidationError(f"negative distortion {self.distortion}")
        object.__setattr__(self, "rate", max(float(self.rate), 0.0))
        object.__setattr__(self, "distortion", max(float(self.distortion), 0.0))


@dataclass(frozen=True)
class RDCurve:
    """Sampled rate-distortion function, increasing in distortion."""

    points: Sequence[RDPoint]
    upper_estimate: bool = False
    label: str = "R"

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        d = np.array([p.distortion for p in pts])
        r = np.array([p.rate for p in pts])
        if np.any(np.diff(d) < 0):
            raise ValidationError("RDCurve points must be sorted by distortion")
        if np.any(np.diff(r) > CONVEXITY_TOL):
            raise ValidationError("RDCurve rates must be nonincreasing")
        for i in range(1, len(pts) - 1):
            span = d[i + 1] - d[i - 1]
            if span <= 0:
                continue
            chord = r[i - 1] + (d[i] - d[i - 1]) * (r[i + 1] - r[i - 1]) / span
            if r[i] > chord + CONVEXITY_TOL:
                raise ValidationError(f"RDCurve not convex at D={d[i]:.6g}")

    @property
    def distortions(self) -> np.ndarray:
        return np.array([p.distortion for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def rate_at(self, distortion: float) -> float:
        """Piecewise-linear interpolation, clamped to the end points."""
        if not self.points:
            raise ValidationError("empty RDCurve")
        return float(np.interp(distortion, self.distortions, self.rates))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["D", "R", "slope"])
        for p in self.points:
            writer.writerow([repr(p.distortion), repr(p.rate), repr(p.slope)])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class WZScheme:
    """Wyner-Ziv test channel P(W|S) and decoder g[s_other, w] -> reconstruction."""

    aux: Alphabet
    test_channel: CondPMF
    decoder: np.ndarray

    def __post_init__(self) -> None:
        n_s, n_w = self.test_channel.shape
        if n_w != self.aux.size:
            raise ValidationError("test channel columns do not match the auxiliary alphabet")
        if self.aux.size > n_s + 1:
            raise ValidationError(f"auxiliary alphabet {self.aux.size} exceeds |S|+1 = {n_s + 1}")
        dec = np.asarray(self.decoder, dtype=int)
        if dec.ndim != 2 or dec.shape[1] != n_w or np.any(dec < 0):
            raise ValidationError("decoder must be a total table [s_other, w]")
        dec = dec.copy()
        dec.setflags(write=False)
        object.__setattr__(self, "decoder", dec)


class WZResult(NamedTuple):
    rate: float
    scheme: WZScheme
    distortion: float
    slope: float
    upper_estimate: bool = True


@dataclass
class CurveBundle:
    """Curves of one user, as consumed by the converse module."""

    user: int
    conditional: RDCurve
    wyner_ziv: RDCurve
    gaps: List[float] = field(default_factory=list)

    @property
    def max_gap(self) -> float:
        return max(self.gaps) if self.gaps else 0.0
