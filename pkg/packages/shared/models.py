"""
Canned problem instances, usable wherever a model path is accepted.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Dict

import numpy as np

from packages.core.prob.types import DistortionMatrix, JointSourcePMF, ProbVec, TwoWayChannel
from packages.shared.config import Model
from packages.shared.errors import ModelFileError
from packages.shared.store import load_model

NOISE = 0.05


def dsbs(p: float) -> JointSourcePMF:
    """Doubly symmetric binary source: uniform S1, S2 = S1 flipped with probability p."""
    return JointSourcePMF(np.array([[1 - p, p], [p, 1 - p]]) / 2)


def z_source(eps: float = 0.5) -> JointSourcePMF:
    """S1 uniform; S2 = 0 when S1 = 0, and S2 = 1 with probability 1 - eps when S1 = 1."""
    return JointSourcePMF(np.array([[0.5, 0.0], [0.5 * eps, 0.5 * (1 - eps)]]))


def uniform_independent(n: int = 2) -> JointSourcePMF:
    return JointSourcePMF.product(ProbVec.uniform(n), ProbVec.uniform(n))


def example1_source() -> JointSourcePMF:
    return JointSourcePMF(np.array([[1 / 3, 1 / 3], [0.0, 1 / 3]]))


def example1_channel(noise: float = NOISE) -> TwoWayChannel:
    """Y1 = X1 xor X2 xor Z, Y2 = X1 X2."""
    return TwoWayChannel.from_functions((2, 2, 2, 2), lambda x1, x2, z: (x1 ^ x2 ^ z, x1 & x2), ProbVec.bernoulli(noise))


def additive_channel(noise: float = NOISE) -> TwoWayChannel:
    """Both users observe X1 xor X2 xor Z."""
    return TwoWayChannel.from_functions((2, 2, 2, 2), lambda x1, x2, z: (x1 ^ x2 ^ z, x1 ^ x2 ^ z), ProbVec.bernoulli(noise))


def multiplying_channel() -> TwoWayChannel:
    """Both users observe X1 X2."""
    return TwoWayChannel.from_functions((2, 2, 2, 2), lambda x1, x2, z: (x1 & x2, x1 & x2), ProbVec.point(1, 0))


def crossover_channel(n: int = 2) -> TwoWayChannel:
    """Noiseless: Y1 = X2, Y2 = X1."""
    return TwoWayChannel.from_functions((n, n, n, n), lambda x1, x2, z: (x2, x1), ProbVec.point(1, 0))


def pure_noise_channel(n: int = 2) -> TwoWayChannel:
    """Outputs uniform and independent of the inputs."""
    return TwoWayChannel(np.full((n, n, n, n), 1.0 / (n * n)))


def _hamming(src: JointSourcePMF):
    return DistortionMatrix.hamming(src.shape[0]), DistortionMatrix.hamming(src.shape[1])


def _model(name: str, src: JointSourcePMF, ch: TwoWayChannel) -> Model:
    d1, d2 = _hamming(src)
    return Model(name, src, ch, d1, d2)


MODELS: Dict[str, Callable[[], Model]] = {
    "example1": lambda: _model("example1", example1_source(), example1_channel()),
    "crossover": lambda: _model("crossover", dsbs(0.2), crossover_channel()),
    "additive": lambda: _model("additive", uniform_independent(), additive_channel()),
    "multiplying": lambda: _model("multiplying", uniform_independent(), multiplying_channel()),
    "dsbs-0.25": lambda: _model("dsbs-0.25", dsbs(0.25), additive_channel()),
    "zchannel": lambda: _model("zchannel", z_source(), additive_channel()),
    "pure-noise": lambda: _model("pure-noise", dsbs(0.25), pure_noise_channel()),
}


def canned(name: str) -> Model:
    try:
        return MODELS[name]()
    except KeyError:
        raise ModelFileError(f"unknown model {name!r}; canned models: {', '.join(sorted(MODELS))}")


def resolve_model(ref: str) -> Model:
    """Canned model name, or a path to a model JSON file."""
    if ref in MODELS:
        return canned(ref)
    if not Path(ref).exists():
        raise ModelFileError(f"{ref!r} is neither a canned model ({', '.join(sorted(MODELS))}) nor an existing file")
    return load_model(ref)
