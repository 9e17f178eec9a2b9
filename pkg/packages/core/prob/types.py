"""
Finite-alphabet probability objects.

All objects validate on construction (tolerance SUM_TOL on total mass), are
renormalized exactly afterwards, and hold read-only numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from packages.shared.errors import UndefinedRowError, ValidationError

SUM_TOL = 1e-12
NEG_TOL = 1e-15


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def _normalize(arr: np.ndarray, axes: Tuple[int, ...], what: str, rows_mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Check nonnegativity and unit mass over `axes`, then renormalize exactly."""
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: non-finite entries")
    if np.any(arr < -NEG_TOL):
        raise ValidationError(f"{what}: negative entries (min {arr.min():.3e})")
    arr = np.clip(arr, 0.0, None)
    totals = arr.sum(axis=axes, keepdims=True)
    check = totals if rows_mask is None else totals[rows_mask]
    bad = np.abs(check - 1.0) > SUM_TOL
    if np.any(bad):
        worst = float(np.max(np.abs(check - 1.0)))
        raise ValidationError(f"{what}: mass does not sum to 1 (off by {worst:.3e})")
    safe = np.where(totals > 0, totals, 1.0)
    return arr / safe


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if int(self.size) < 1:
            raise ValidationError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.size:
                raise ValidationError(f"{len(labels)} labels for alphabet of size {self.size}")
            if len(set(labels)) != len(labels):
                raise ValidationError("alphabet labels must be unique")
            object.__setattr__(self, "labels", labels)

    def numeric_values(self) -> np.ndarray:
        """Numeric value of each symbol: parsed labels, or the indices when unlabeled."""
        if self.labels is None:
            return np.arange(self.size, dtype=float)
        try:
            return np.array([float(x) for x in self.labels])
        except ValueError:
            raise ValidationError(f"alphabet labels {self.labels} are not numeric")

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)


@dataclass(frozen=True, eq=False)
class ProbVec:
    mass: np.ndarray
    alphabet: Optional[Alphabet] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.mass, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError(f"ProbVec needs a non-empty vector, got shape {arr.shape}")
        object.__setattr__(self, "mass", _frozen(_normalize(arr, (0,), "ProbVec")))
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", Alphabet(arr.size))
        elif self.alphabet.size != arr.size:
            raise ValidationError("ProbVec length does not match its alphabet")

    @property
    def size(self) -> int:
        return int(self.mass.size)

    @classmethod
    def uniform(cls, n: int) -> "ProbVec":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point(cls, n: int, i: int) -> "ProbVec":
        m = np.zeros(n)
        m[i] = 1.0
        return cls(m)

    @classmethod
    def bernoulli(cls, p: float) -> "ProbVec":
        return cls(np.array([1.0 - p, p]))


@dataclass(frozen=True, eq=False)
class CondPMF:
    """Rows P(out | in). Rows flagged undefined carry zeros and must never be read."""

    rows: np.ndarray
    defined: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.rows, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValidationError(f"CondPMF needs a 2-D table, got shape {arr.shape}")
        mask = np.ones(arr.shape[0], dtype=bool) if self.defined is None else np.asarray(self.defined, dtype=bool)
        if mask.shape != (arr.shape[0],):
            raise ValidationError("CondPMF defined-mask does not match its rows")
        arr = np.where(mask[:, None], arr, 0.0)
        norm = _normalize(arr, (1,), "CondPMF row", rows_mask=mask)
        object.__setattr__(self, "rows", _frozen(norm))
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "defined", mask)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows.shape  # type: ignore[return-value]

    def row(self, i: int) -> np.ndarray:
        if not self.defined[i]:
            raise UndefinedRowError(f"conditional row {i} has zero conditioning mass")
        return self.rows[i]

    @classmethod
    def identity(cls, n: int) -> "CondPMF":
        return cls(np.eye(n))

    @classmethod
    def constant(cls, n_in: int, n_out: int, symbol: int = 0) -> "CondPMF":
        t = np.zeros((n_in, n_out))
        t[:, symbol] = 1.0
        return cls(t)

    @classmethod
    def from_map(cls, table: Sequence[int], n_out: int) -> "CondPMF":
        idx = np.asarray(table, dtype=int)
        t = np.zeros((idx.size, n_out))
        t[np.arange(idx.size), idx] = 1.0
        return cls(t)


@dataclass(frozen=True, eq=False)
class JointSourcePMF:
    mass: np.ndarray
    alphabets: Optional[Tuple[Alphabet, Alphabet]] = None
    allow_degenerate: bool = False

    def __post_init__(self) -> None:
        arr = np.asarray(self.mass, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValidationError(f"JointSourcePMF needs a 2-D table, got shape {arr.shape}")
        arr = _normalize(arr, (0, 1), "JointSourcePMF")
        if not self.allow_degenerate:
            if np.any(arr.sum(axis=1) <= 0) or np.any(arr.sum(axis=0) <= 0):
                raise ValidationError("source marginal has zero-mass symbols (pass allow_degenerate=True)")
        object.__setattr__(self, "mass", _frozen(arr))
        if self.alphabets is None:
            object.__setattr__(self, "alphabets", (Alphabet(arr.shape[0]), Alphabet(arr.shape[1])))
        elif (self.alphabets[0].size, self.alphabets[1].size) != arr.shape:
            raise ValidationError("JointSourcePMF alphabets do not match its shape")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.mass.shape  # type: ignore[return-value]

    def marginal(self, user: int) -> ProbVec:
        """P_{S_user}, user in {1, 2}."""
        return ProbVec(self.mass.sum(axis=1 if user == 1 else 0), self.alphabets[user - 1])

    def oriented(self, user: int) -> np.ndarray:
        """Mass indexed [s_user, s_other]."""
        return self.mass if user == 1 else self.mass.T

    def conditional(self, user: int) -> CondPMF:
        """P(S_user | S_other) as rows indexed by the other user's symbol."""
        joint = self.oriented(user).T
        totals = joint.sum(axis=1)
        defined = totals > 0
        rows = np.where(defined[:, None], joint / np.where(defined, totals, 1.0)[:, None], 0.0)
        return CondPMF(rows, defined)

    def swapped(self) -> "JointSourcePMF":
        return JointSourcePMF(self.mass.T, (self.alphabets[1], self.alphabets[0]), self.allow_degenerate)

    @classmethod
    def product(cls, p1: ProbVec, p2: ProbVec) -> "JointSourcePMF":
        return cls(np.outer(p1.mass, p2.mass), (p1.alphabet, p2.alphabet), allow_degenerate=True)


@dataclass(frozen=True, eq=False)
class TwoWayChannel:
    """P(y1, y2 | x1, x2), indexed trans[x1, x2, y1, y2]."""

    trans: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.trans, dtype=float)
        if arr.ndim != 4 or 0 in arr.shape:
            raise ValidationError(f"TwoWayChannel needs a 4-D table, got shape {arr.shape}")
        object.__setattr__(self, "trans", _frozen(_normalize(arr, (2, 3), "TwoWayChannel slice")))

    @property
    def input_sizes(self) -> Tuple[int, int]:
        return self.trans.shape[0], self.trans.shape[1]

    @property
    def output_sizes(self) -> Tuple[int, int]:
        return self.trans.shape[2], self.trans.shape[3]

    def marginals(self) -> Tuple[np.ndarray, np.ndarray]:
        """(P(y1|x1,x2), P(y2|x1,x2)) as arrays [x1, x2, y]."""
        return self.trans.sum(axis=3), self.trans.sum(axis=2)

    def with_erasures(self, q: float) -> "TwoWayChannel":
        """Each output independently replaced by an extra erasure symbol with probability q."""
        w1, w2 = self.marginals()
        a1, a2 = self.output_sizes
        # erasure symbol is the last index of each output alphabet
        t = np.zeros(self.input_sizes + (a1 + 1, a2 + 1))
        t[:, :, :a1, :a2] = (1 - q) ** 2 * self.trans
        t[:, :, a1, :a2] = q * (1 - q) * w2
        t[:, :, :a1, a2] = q * (1 - q) * w1
        t[:, :, a1, a2] = q * q
        return TwoWayChannel(t)

    @classmethod
    def from_marginals(cls, w1: np.ndarray, w2: np.ndarray) -> "TwoWayChannel":
        """Outputs conditionally independent given the inputs."""
        return cls(np.einsum("abi,abj->abij", w1, w2))

    @classmethod
    def from_functions(
        cls,
        sizes: Tuple[int, int, int, int],
        outputs: Callable[[int, int, int], Tuple[int, int]],
        noise: ProbVec,
    ) -> "TwoWayChannel":
        """Deterministic outputs (y1, y2) = outputs(x1, x2, z) with z ~ noise."""
        t = np.zeros(sizes)
        for x1 in range(sizes[0]):
            for x2 in range(sizes[1]):
                for z, pz in enumerate(noise.mass):
                    y1, y2 = outputs(x1, x2, z)
                    t[x1, x2, y1, y2] += pz
        return cls(t)


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    d: np.ndarray
    relax_zero_rows: bool = False
    reconstruction: Optional[Alphabet] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.d, dtype=float)
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValidationError(f"DistortionMatrix needs a 2-D table, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValidationError("distortion entries must be finite and >= 0")
        if not self.relax_zero_rows and np.any(arr.min(axis=1) > 0):
            raise ValidationError("every distortion row needs a zero entry (pass relax_zero_rows=True)")
        object.__setattr__(self, "d", _frozen(arr))
        if self.reconstruction is not None and self.reconstruction.size != arr.shape[1]:
            raise ValidationError("reconstruction alphabet does not match distortion columns")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.d.shape  # type: ignore[return-value]

    @property
    def is_hamming(self) -> bool:
        n, m = self.d.shape
        return n == m and np.array_equal(self.d, 1.0 - np.eye(n))

    def d_min(self, p: np.ndarray) -> float:
        """Smallest achievable expected distortion for source law p."""
        return float(np.dot(p, self.d.min(axis=1)))

    def d_max(self, p: np.ndarray) -> float:
        """Expected distortion of the best constant reconstruction (zero-rate point)."""
        return float(np.min(p @ self.d))

    def best_constant(self, p: np.ndarray) -> int:
        return int(np.argmin(p @ self.d))

    def reconstruction_values(self) -> np.ndarray:
        if self.reconstruction is not None:
            return self.reconstruction.numeric_values()
        return np.arange(self.d.shape[1], dtype=float)

    @classmethod
    def hamming(cls, n: int) -> "DistortionMatrix":
        return cls(1.0 - np.eye(n))
