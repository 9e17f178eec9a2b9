from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from packages.core.rd.types import RDCurve
from packages.core.region.types import MEMBERSHIP_TOL, RegionBoundary
from packages.shared.errors import ValidationError

INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"


@dataclass(frozen=True)
class RateRatio:
    """k source symbols per n channel uses."""

    k: int = 1
    n: int = 1

    def __post_init__(self) -> None:
        if int(self.k) != self.k or int(self.n) != self.n or self.k < 1 or self.n < 1:
            raise ValidationError(f"rate needs positive integers k/n, got {self.k}/{self.n}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def parse(cls, text: str) -> "RateRatio":
        parts = str(text).strip().split("/")
        try:
            if len(parts) == 1:
                return cls(int(parts[0]), 1)
            if len(parts) == 2:
                return cls(int(parts[0]), int(parts[1]))
        except ValueError:
            pass
        raise ValidationError(f"rate must look like K/N, got {text!r}")

    @property
    def value(self) -> Fraction:
        return Fraction(self.k, self.n)

    def source_rate(self, channel_rate: float) -> float:
        """Bits per source symbol carried by `channel_rate` bits per channel use."""
        return float(channel_rate) * self.n / self.k

    def __str__(self) -> str:
        return f"{self.k}/{self.n}"


@dataclass(frozen=True, eq=False)
class DistortionRegion:
    """Distortion pairs whose scaled RD rates fit in a rate region."""

    region: RegionBoundary
    curves: Tuple[RDCurve, RDCurve]
    rates: RegionBoundary
    ratio: RateRatio

    def required_rates(self, point: Sequence[float]) -> np.ndarray:
        """(k/n) R_j(D_j), the channel rates the pair needs."""
        c1, c2 = self.curves
        scale = float(self.ratio.value)
        return np.array([scale * c1.rate_at(point[0]), scale * c2.rate_at(point[1])])

    def classify(self, point: Sequence[float], tol: float = MEMBERSHIP_TOL) -> str:
        """inside / boundary / outside, decided in the rate domain."""
        need = self.required_rates(point)
        if self.rates.distance(need) > tol:
            return OUTSIDE
        if self.rates.signed_distance(need) < -tol:
            return INSIDE
        return BOUNDARY

    def contains(self, point: Sequence[float], tol: float = MEMBERSHIP_TOL) -> bool:
        return self.classify(point, tol) != OUTSIDE


@dataclass
class DistortionRegionReport:
    outer: DistortionRegion
    inner_sscc: DistortionRegion
    exact: Optional[DistortionRegion]
    wz_equals_cond: Tuple[bool, bool]
    bounds_coincide: bool
    wz_gaps: Tuple[float, float]
    capacity_gap: float
    distortion_gap: float
    tol_hyp: float
    notes: Dict[str, str] = field(default_factory=dict)

    @property
    def flags(self) -> Tuple[bool, bool, bool]:
        return (self.wz_equals_cond[0], self.wz_equals_cond[1], self.bounds_coincide)

    def to_dict(self) -> dict:
        def rows(r: Optional[DistortionRegion]):
            return None if r is None else [[kind, x, y] for kind, x, y in r.region.rows()]

        return {
            "rate": str(self.outer.ratio),
            "hypothesis_flags": {
                "wz_equals_cond1": self.wz_equals_cond[0],
                "wz_equals_cond2": self.wz_equals_cond[1],
                "bounds_coincide": self.bounds_coincide,
            },
            "gaps": {
                "wz_cond1": self.wz_gaps[0],
                "wz_cond2": self.wz_gaps[1],
                "capacity_hausdorff": self.capacity_gap,
                "distortion_hausdorff": self.distortion_gap,
            },
            "tol_hyp": self.tol_hyp,
            "outer": rows(self.outer),
            "inner_sscc": rows(self.inner_sscc),
            "exact": rows(self.exact),
            "notes": dict(self.notes),
        }
