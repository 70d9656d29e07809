"""Pair-number weights ``c_N`` for the three sources.

Every source emits ``sum_N c_N |phi_N>``.  The ideal source is a single
``|phi_N>``; the parametric amplifiers spread weight over all N with
``cosh r``, ``sinh r`` and ``tanh r`` controlling the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegenerateSourceError, DomainError, TruncationError

DEFAULT_EPS = 1e-12
MAX_N_CAP = 512
# terms beyond this relative size are dropped when summing the raw norm
_NORM_TERM_TOL = 1e-30
_NORM_SCAN_LIMIT = 20000


@dataclass(frozen=True)
class WeightDistribution:
    """Truncated superposition weights.

    Attributes:
        weights: ``c_N`` for ``N = 0 .. n_max`` (signed).
        tail_mass: probability beyond ``n_max``, ``1 - sum(c_N**2)``.
        raw_norm: ``sum c_N**2`` of the unnormalised formula over all N.
    """

    weights: np.ndarray = field(repr=False)
    tail_mass: float = 0.0
    raw_norm: float = 1.0

    @property
    def n_max(self) -> int:
        return self.weights.size - 1

    def probabilities(self) -> np.ndarray:
        return self.weights**2


@dataclass(frozen=True)
class IdealSpin:
    n_total: int

    def __post_init__(self):
        if self.n_total < 0:
            raise DomainError("n_total must be nonnegative")

    def weights(self, eps: float = DEFAULT_EPS) -> WeightDistribution:
        w = np.zeros(self.n_total + 1)
        w[-1] = 1.0
        return WeightDistribution(w, 0.0, 1.0)


@dataclass(frozen=True)
class _Parametric:
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise DomainError(f"gain r must be finite and >= 0, got {self.r}")

    @property
    def cosh(self) -> float:
        return math.cosh(self.r)

    @property
    def sinh(self) -> float:
        return math.sinh(self.r)

    @property
    def tanh(self) -> float:
        return math.tanh(self.r)


@dataclass(frozen=True)
class VacuumPDC(_Parametric):
    """Two parametric amplifiers with vacuum inputs."""

    def raw_weights(self, n: np.ndarray) -> np.ndarray:
        return np.sqrt(n + 1.0) * self.tanh**n / self.cosh**2

    def weights(self, eps: float = DEFAULT_EPS) -> WeightDistribution:
        return vacuum_weights(self.r, eps)


@dataclass(frozen=True)
class Qiopa(_Parametric):
    """Parametric amplifier seeded with the one-pair entangled state."""

    def raw_weights(self, n: np.ndarray) -> np.ndarray:
        c, s, g = self.cosh, self.sinh, self.tanh
        return (np.sqrt(n + 1.0) * g**n / c**2) * ((n - 2 * s * s) / (math.sqrt(2) * g * c**2))

    def weights(self, eps: float = DEFAULT_EPS) -> WeightDistribution:
        return qiopa_weights(self.r, eps)


SourceModel = Union[IdealSpin, VacuumPDC, Qiopa]


def _truncate(raw_fn, x: float, eps: float, renormalize: bool) -> WeightDistribution:
    if not 0 < eps < 1:
        raise DomainError("tail tolerance must lie in (0, 1)")
    # scan far enough that the neglected raw terms are below _NORM_TERM_TOL;
    # this depends only on the gain, so prefixes are stable under eps
    n_ext = 16
    while True:
        if x == 0.0 or (n_ext + 2) ** 3 * x**n_ext < _NORM_TERM_TOL:
            break
        if n_ext >= _NORM_SCAN_LIMIT:
            raise TruncationError("weight distribution decays too slowly to normalise")
        n_ext *= 2
    raw = raw_fn(np.arange(n_ext + 1, dtype=float))
    sq = raw**2
    raw_norm = math.fsum(sq)
    if renormalize:
        raw = raw / math.sqrt(raw_norm)
        sq = raw**2
    # tail[n] = sum of squared weights beyond n, accumulated from the far end
    tail = np.cumsum(sq[::-1])[::-1]
    tail = np.append(tail[1:], 0.0)
    below = np.nonzero(tail < eps)[0]
    n_max = int(below[0])
    if n_max > MAX_N_CAP:
        raise TruncationError(
            f"reaching tail < {eps:g} needs n_max={n_max}, above the cap {MAX_N_CAP}"
        )
    w = raw[: n_max + 1].copy()
    w.setflags(write=False)
    return WeightDistribution(w, float(tail[n_max]), raw_norm)


def vacuum_weights(r: float, eps: float = DEFAULT_EPS) -> WeightDistribution:
    """Weights ``c_N = sqrt(N+1) tanh(r)^N / cosh(r)^2``, truncated at tail < eps."""
    src = VacuumPDC(r)
    return _truncate(src.raw_weights, src.tanh**2, eps, renormalize=False)


def qiopa_weights(r: float, eps: float = DEFAULT_EPS) -> WeightDistribution:
    """Quantum-injected amplifier weights, renormalised; ``raw_norm`` keeps the formula's norm."""
    src = Qiopa(r)
    if src.r == 0:
        raise DegenerateSourceError("the injected-amplifier weights need r > 0")
    return _truncate(src.raw_weights, src.tanh**2, eps, renormalize=True)


def photon_number_distribution(weights: WeightDistribution) -> np.ndarray:
    """``P(N) = c_N**2``: probability of N photons at each polariser."""
    return weights.probabilities()


def mean_flux(r: float) -> float:
    """Mean photon number incident on each polariser, ``2 sinh(r)^2``."""
    if r < 0:
        raise DomainError("gain r must be >= 0")
    return 2.0 * math.sinh(r) ** 2


def nearest_flux_integer(r: float) -> int:
    """Integer nearest the mean flux; halves round up."""
    return math.floor(mean_flux(r) + 0.5)
