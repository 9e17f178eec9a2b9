"""
Named-variable joint laws built from a chain of conditional factors.

A JointLaw never materializes the full product: every query contracts the
factors with einsum down to the requested variables, so the eight-variable
hybrid law stays cheap even at alphabet size 16.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from packages.shared.errors import ValidationError

from . import info

log = logging.getLogger(__name__)

FACTOR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Factor:
    """P(out | given) with table axes ordered given + out."""

    given: Tuple[str, ...]
    out: Tuple[str, ...]
    table: np.ndarray

    @classmethod
    def prior(cls, out: Sequence[str], table: np.ndarray) -> "Factor":
        return cls((), tuple(out), np.asarray(table, dtype=float))

    @classmethod
    def conditional(cls, given: Sequence[str], out: Sequence[str], table: np.ndarray) -> "Factor":
        return cls(tuple(given), tuple(out), np.asarray(table, dtype=float))

    @classmethod
    def deterministic(cls, given: Sequence[str], out: str, lookup: np.ndarray, out_size: int) -> "Factor":
        """0/1 conditional for out = lookup[given...]."""
        lookup = np.asarray(lookup, dtype=int)
        if lookup.min() < 0 or lookup.max() >= out_size:
            raise ValidationError(f"deterministic map for {out} leaves its alphabet of size {out_size}")
        table = (lookup[..., None] == np.arange(out_size)).astype(float)
        return cls(tuple(given), (out,), table)

    @property
    def names(self) -> Tuple[str, ...]:
        return self.given + self.out


class JointLaw:
    def __init__(self, factors: Sequence[Factor]) -> None:
        self._factors: List[Factor] = list(factors)
        self._sizes: Dict[str, int] = {}
        self._order: List[str] = []
        for f in self._factors:
            if f.table.ndim != len(f.names):
                raise ValidationError(f"factor over {f.names} has {f.table.ndim} axes")
            for name, n in zip(f.names, f.table.shape):
                known = self._sizes.get(name)
                if known is not None and known != n:
                    raise ValidationError(f"variable {name} has size {known} and {n} in different factors")
                self._sizes[name] = n
            for name in f.given:
                if name not in self._order:
                    raise ValidationError(f"factor conditions on {name} before it is generated")
            for name in f.out:
                if name in self._order:
                    raise ValidationError(f"variable {name} generated by two factors")
                self._order.append(name)
            out_axes = tuple(range(len(f.given), len(f.names)))
            sums = f.table.sum(axis=out_axes)
            if np.any(f.table < 0) or np.any(np.abs(sums - 1.0) > FACTOR_TOL):
                raise ValidationError(f"factor P({','.join(f.out)}|{','.join(f.given)}) is not normalized")
        self._label = {name: i for i, name in enumerate(self._order)}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self._order)

    def size(self, name: str) -> int:
        return self._sizes[name]

    def marginal(self, *names: str) -> np.ndarray:
        """Joint pmf over `names`, axes in the given order."""
        for n in names:
            if n not in self._label:
                raise ValidationError(f"unknown variable {n}")
        operands: list = []
        for f in self._factors:
            operands.append(f.table)
            operands.append([self._label[n] for n in f.names])
        operands.append([self._label[n] for n in names])
        return np.einsum(*operands, optimize="greedy")

    def grouped(self, *groups: Sequence[str]) -> np.ndarray:
        """Marginal with each group of variables flattened into one axis."""
        flat = [n for g in groups for n in g]
        m = self.marginal(*flat)
        shape = [int(np.prod([self._sizes[n] for n in g])) if g else 1 for g in groups]
        return m.reshape(shape)

    def entropy(self, *names: str) -> float:
        return info.entropy(self.marginal(*names))

    def cmi(self, a: Sequence[str], b: Sequence[str], given: Sequence[str] = ()) -> float:
        """I(A; B | C) with each side a group of named variables."""
        return info.conditional_mutual_information(self.grouped(a, b, given))

    def expect(self, names: Sequence[str], table: np.ndarray) -> float:
        return float(np.sum(self.marginal(*names) * table))


def join(*factors: Factor) -> JointLaw:
    """Chain the factors into a joint law; each variable is generated once, parents first."""
    law = JointLaw(factors)
    log.debug(f"joined {len(factors)} factors over {law.names}")
    return law
