from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from packages.core.converse.types import RateRatio
from packages.core.hybrid.types import HybridScheme
from packages.core.prob.types import Alphabet, CondPMF, DistortionMatrix, JointSourcePMF, TwoWayChannel
from packages.shared.errors import ValidationError


class RunConfig(BaseModel):
    grid: int = 11
    resolution: int = 17
    tol: float = 1e-9
    max_iter: int = 10_000
    slope_min: float = -50.0
    bisection_steps: int = 60
    restarts: int = 4
    seed: int = 0
    samples: int = 1_000_000
    threads: Optional[int] = None
    rate: str = "1/1"
    tol_hyp: float = 5e-3
    tol_region: float = 1e-2
    budget: int = 2000
    lambda_points: int = 33

    @field_validator("tol", "tol_hyp", "tol_region")
    @classmethod
    def _positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerances must be > 0")
        return v

    @field_validator("seed")
    @classmethod
    def _seed(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("slope_min")
    @classmethod
    def _slope(cls, v: float) -> float:
        if v >= 0:
            raise ValueError("slope_min must be negative")
        return v

    @field_validator("rate")
    @classmethod
    def _rate(cls, v: str) -> str:
        RateRatio.parse(v)
        return v

    @field_validator("grid", "resolution", "max_iter", "bisection_steps", "budget", "lambda_points")
    @classmethod
    def _at_least_one(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("samples", "restarts")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @property
    def rate_ratio(self) -> RateRatio:
        return RateRatio.parse(self.rate)

    def to_solver_kwargs(self) -> dict:
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "slope_min": self.slope_min,
            "bisection_steps": self.bisection_steps,
        }

    def to_region_kwargs(self) -> dict:
        return {
            "resolution": self.resolution,
            "restarts": self.restarts,
            "seed": self.seed,
            "workers": self.threads,
            "lambda_points": self.lambda_points,
        }

    def to_search_kwargs(self) -> dict:
        return {"budget": self.budget, "seed": self.seed, "workers": self.threads, **self.to_solver_kwargs()}


class SchemeFile(BaseModel):
    """Hybrid scheme on disk: encoder tables [u][s], decoder tables [u'][u][s][y]."""

    U1: int = Field(ge=1)
    U2: int = Field(ge=1)
    PU1_S1: List[List[float]]
    PU2_S2: List[List[float]]
    f1: List[List[int]]
    f2: List[List[int]]
    g1: List[List[List[List[int]]]]
    g2: List[List[List[List[int]]]]
    label: str = "file"

    def to_scheme(self) -> HybridScheme:
        return HybridScheme(
            (CondPMF(np.array(self.PU1_S1)), CondPMF(np.array(self.PU2_S2))),
            (np.array(self.f1), np.array(self.f2)),
            (np.array(self.g1), np.array(self.g2)),
            aux=(Alphabet(self.U1), Alphabet(self.U2)),
            label=self.label,
        )

    @classmethod
    def from_scheme(cls, sch: HybridScheme) -> "SchemeFile":
        return cls(label=sch.label, **sch.to_dict())


class ModelFile(BaseModel):
    """Source, channel and distortion measures of one problem instance.

    channel is indexed [x1][x2][y1][y2]; distortions default to Hamming.
    """

    name: str = "model"
    source: List[List[float]]
    channel: List[List[List[List[float]]]]
    distortion1: Optional[List[List[float]]] = None
    distortion2: Optional[List[List[float]]] = None
    labels1: Optional[List[str]] = None
    labels2: Optional[List[str]] = None
    allow_degenerate: bool = False
    schemes: Dict[str, SchemeFile] = Field(default_factory=dict)

    def to_model(self) -> "Model":
        alphabets = None
        mass = np.array(self.source, dtype=float)
        if self.labels1 is not None or self.labels2 is not None:
            alphabets = (
                Alphabet(mass.shape[0], tuple(self.labels1) if self.labels1 else None),
                Alphabet(mass.shape[1], tuple(self.labels2) if self.labels2 else None),
            )
        src = JointSourcePMF(mass, alphabets, self.allow_degenerate)
        ch = TwoWayChannel(np.array(self.channel, dtype=float))
        d1 = DistortionMatrix(np.array(self.distortion1)) if self.distortion1 is not None else DistortionMatrix.hamming(src.shape[0])
        d2 = DistortionMatrix(np.array(self.distortion2)) if self.distortion2 is not None else DistortionMatrix.hamming(src.shape[1])
        if d1.shape[0] != src.shape[0] or d2.shape[0] != src.shape[1]:
            raise ValidationError(f"distortion rows {(d1.shape[0], d2.shape[0])} do not match source alphabets {src.shape}")
        schemes = {name: s.to_scheme() for name, s in self.schemes.items()}
        return Model(self.name, src, ch, d1, d2, schemes)

    @classmethod
    def from_model(cls, m: "Model") -> "ModelFile":
        labels = m.source.alphabets
        return cls(
            name=m.name,
            source=m.source.mass.tolist(),
            channel=m.channel.trans.tolist(),
            distortion1=m.d1.d.tolist(),
            distortion2=m.d2.d.tolist(),
            labels1=list(labels[0].labels) if labels[0].labels else None,
            labels2=list(labels[1].labels) if labels[1].labels else None,
            allow_degenerate=m.source.allow_degenerate,
            schemes={k: SchemeFile.from_scheme(v) for k, v in m.schemes.items()},
        )


@dataclass(eq=False)
class Model:
    name: str
    source: JointSourcePMF
    channel: TwoWayChannel
    d1: DistortionMatrix
    d2: DistortionMatrix
    schemes: Dict[str, HybridScheme] = field(default_factory=dict)

    @property
    def parts(self) -> Tuple[JointSourcePMF, TwoWayChannel, DistortionMatrix, DistortionMatrix]:
        return self.source, self.channel, self.d1, self.d2
