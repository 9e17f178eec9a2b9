from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from packages.core.prob.types import Alphabet, CondPMF
from packages.shared.errors import ValidationError

UNREACHABLE = -1
STRICT_TOL = 1e-9
ZERO_TOL = 1e-12


def _int_table(table, ndim: int, what: str, allow_unreachable: bool) -> np.ndarray:
    arr = np.asarray(table)
    if arr.ndim != ndim:
        raise ValidationError(f"{what} must have {ndim} axes, got shape {arr.shape}")
    if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
        raise ValidationError(f"{what} entries must be integers")
    arr = arr.astype(int)
    floor = UNREACHABLE if allow_unreachable else 0
    if arr.size and arr.min() < floor:
        raise ValidationError(f"{what} has entries below {floor}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HybridScheme:
    """Auxiliary test channels, symbol encoders and symbol decoders of a hybrid scheme.

    encoders[j][u, s] -> x_j. decoders[0] is g1[u2, u1, s1, y1] -> estimate of S2,
    decoders[1] is g2[u1, u2, s2, y2] -> estimate of S1. Decoder cells that no
    positive-probability outcome reaches may hold -1.
    """

    test_channels: Tuple[CondPMF, CondPMF]
    encoders: Tuple[np.ndarray, np.ndarray]
    decoders: Tuple[np.ndarray, np.ndarray]
    aux: Tuple[Alphabet, Alphabet] = field(default=None)  # type: ignore[assignment]
    label: str = "custom"

    def __post_init__(self) -> None:
        t1, t2 = self.test_channels
        k1, k2 = t1.shape[1], t2.shape[1]
        if self.aux is None:
            object.__setattr__(self, "aux", (Alphabet(k1), Alphabet(k2)))
        elif (self.aux[0].size, self.aux[1].size) != (k1, k2):
            raise ValidationError("auxiliary alphabets do not match the test channel columns")
        f1 = _int_table(self.encoders[0], 2, "encoder f1", False)
        f2 = _int_table(self.encoders[1], 2, "encoder f2", False)
        if f1.shape != (k1, t1.shape[0]) or f2.shape != (k2, t2.shape[0]):
            raise ValidationError(f"encoder tables must be indexed [u][s]: got {f1.shape} and {f2.shape}")
        g1 = _int_table(self.decoders[0], 4, "decoder g1", True)
        g2 = _int_table(self.decoders[1], 4, "decoder g2", True)
        if g1.shape[:3] != (k2, k1, t1.shape[0]):
            raise ValidationError(f"decoder g1 must be indexed [u2][u1][s1][y1], got shape {g1.shape}")
        if g2.shape[:3] != (k1, k2, t2.shape[0]):
            raise ValidationError(f"decoder g2 must be indexed [u1][u2][s2][y2], got shape {g2.shape}")
        object.__setattr__(self, "encoders", (f1, f2))
        object.__setattr__(self, "decoders", (g1, g2))

    @property
    def aux_sizes(self) -> Tuple[int, int]:
        return self.aux[0].size, self.aux[1].size

    @property
    def source_sizes(self) -> Tuple[int, int]:
        return self.test_channels[0].shape[0], self.test_channels[1].shape[0]

    @property
    def is_symbol_by_symbol(self) -> bool:
        return self.aux_sizes == (1, 1)

    def relabeled(self, perm1: Sequence[int], perm2: Sequence[int]) -> "HybridScheme":
        """Same scheme with auxiliary symbol u_j renamed perm_j[u_j]."""
        inv1 = np.argsort(perm1)
        inv2 = np.argsort(perm2)
        t1, t2 = self.test_channels
        f1, f2 = self.encoders
        g1, g2 = self.decoders
        return HybridScheme(
            (CondPMF(t1.rows[:, inv1], t1.defined), CondPMF(t2.rows[:, inv2], t2.defined)),
            (f1[inv1], f2[inv2]),
            (g1[inv2][:, inv1], g2[inv1][:, inv2]),
            label=self.label,
        )

    def to_dict(self) -> dict:
        t1, t2 = self.test_channels
        return {
            "U1": self.aux_sizes[0],
            "U2": self.aux_sizes[1],
            "PU1_S1": t1.rows.tolist(),
            "PU2_S2": t2.rows.tolist(),
            "f1": self.encoders[0].tolist(),
            "f2": self.encoders[1].tolist(),
            "g1": self.decoders[0].tolist(),
            "g2": self.decoders[1].tolist(),
        }


def condition_holds(lhs: float, rhs: float) -> bool:
    """Strict inequality, or nothing digital to convey."""
    return lhs < rhs - STRICT_TOL or lhs <= ZERO_TOL


def condition_margin(lhs: Tuple[float, float], rhs: Tuple[float, float]) -> float:
    active = [r - l for l, r in zip(lhs, rhs) if l > ZERO_TOL]
    if active:
        return float(min(active))
    return float(min(r - l for l, r in zip(lhs, rhs)))


@dataclass(frozen=True)
class AchievabilityReport:
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    d1: float
    d2: float
    feasible1: bool
    feasible2: bool
    margin: float
    label: str = "custom"

    @classmethod
    def from_quantities(cls, lhs1: float, rhs1: float, lhs2: float, rhs2: float, d1: float, d2: float, label: str = "custom") -> "AchievabilityReport":
        return cls(
            lhs1=lhs1,
            rhs1=rhs1,
            lhs2=lhs2,
            rhs2=rhs2,
            d1=d1,
            d2=d2,
            feasible1=condition_holds(lhs1, rhs1),
            feasible2=condition_holds(lhs2, rhs2),
            margin=condition_margin((lhs1, lhs2), (rhs1, rhs2)),
            label=label,
        )

    @property
    def feasible(self) -> bool:
        return self.feasible1 and self.feasible2

    @property
    def distortions(self) -> Tuple[float, float]:
        return (self.d1, self.d2)

    def meets(self, target: Tuple[float, float], tol: float = STRICT_TOL) -> bool:
        return self.feasible and self.d1 <= target[0] + tol and self.d2 <= target[1] + tol

    def to_dict(self) -> dict:
        out = asdict(self)
        out["feasible"] = self.feasible
        return out


@dataclass(frozen=True)
class ReducedConditions:
    """Special-case conditions (source rate vs channel rate) per direction."""

    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float

    @property
    def holds1(self) -> bool:
        return condition_holds(self.lhs1, self.rhs1)

    @property
    def holds2(self) -> bool:
        return condition_holds(self.lhs2, self.rhs2)

    @property
    def holds(self) -> bool:
        return self.holds1 and self.holds2

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(holds1=self.holds1, holds2=self.holds2)
        return out


@dataclass
class SearchResult:
    report: Optional[AchievabilityReport]
    scheme: Optional[HybridScheme]
    found: bool
    evaluations: int
    stage: str = ""
    exhausted: bool = False
    feasible_points: list = field(default_factory=list)
