"""Independent binomial photon loss on the four detectors.

Each detector is modelled as a beam splitter of transmission ``T`` in front
of an ideal counter, so ``n`` incident photons register as ``x`` with
probability ``C(n, x) T^x (1 - T)^(n - x)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy
from scipy.stats import binom

from .errors import DomainError
from .fock import JointPhotonDistribution


@dataclass(frozen=True)
class LossChannel:
    """Detection with transmission ``T = eta**2`` for efficiency ``eta``."""

    transmission: float = 1.0
    eps: float = 1e-12

    def __post_init__(self):
        if not (0.0 <= self.transmission <= 1.0):
            raise DomainError(f"transmission must lie in [0, 1], got {self.transmission}")
        if not self.eps > 0:
            raise DomainError("eps must be positive")

    @classmethod
    def from_efficiency(cls, eta: float, eps: float = 1e-12) -> "LossChannel":
        return cls(eta * eta, eps)

    @property
    def lossless(self) -> bool:
        return self.transmission == 1.0


LOSSLESS = LossChannel(1.0)


def _binom_pmf(x: np.ndarray, n: np.ndarray, t: float) -> np.ndarray:
    x, n = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(n, dtype=float))
    ok = x <= n
    xs, ns = np.where(ok, x, 0.0), np.where(ok, n, 0.0)
    try:
        p = binom.pmf(xs, ns, t)
    except OverflowError:
        # scipy's kernel overflows for subnormal t; log space is exact enough there
        p = np.exp(gammaln(ns + 1) - gammaln(xs + 1) - gammaln(ns - xs + 1)
                   + xlogy(xs, t) + xlog1py(ns - xs, -t))
    return np.where(ok, p, 0.0)


@lru_cache(maxsize=64)
def _thinning(n_max: int, transmission: float) -> np.ndarray:
    n = np.arange(n_max + 1)
    mat = _binom_pmf(n[:, None], n[None, :], transmission)
    mat.setflags(write=False)
    return mat


def thinning_matrix(n_max: int, transmission: float) -> np.ndarray:
    """``L[x, n]``: probability that ``n`` incident photons register as ``x``."""
    if not 0.0 <= transmission <= 1.0:
        raise DomainError("transmission must lie in [0, 1]")
    return _thinning(int(n_max), float(transmission))


def _thin(n: int, transmission: float) -> np.ndarray:
    return _binom_pmf(np.arange(n + 1), n, transmission)


def convolve_marginal(
    ideal: Mapping[tuple[int, int], float], channel: LossChannel
) -> dict[tuple[int, int], float]:
    """Measured side marginal over ``(m, k)`` from the incident one."""
    t = channel.transmission
    if t == 1.0:
        return dict(ideal)
    out: dict[tuple[int, int], float] = {}
    for (m0, k0), p in ideal.items():
        if p == 0.0:
            continue
        pm, pk = _thin(m0, t), _thin(k0, t)
        for m in range(m0 + 1):
            for k in range(k0 + 1):
                out[(m, k)] = out.get((m, k), 0.0) + p * pm[m] * pk[k]
    return out


def convolve_joint(ideal: JointPhotonDistribution, channel: LossChannel) -> JointPhotonDistribution:
    """Measured four-detector distribution.

    Pushes every incident outcome through independent binomial thinning.
    The truncated source has no photons above its ``n_max``, so the sums over
    lost photons are finite and exact; only the source tail is carried over.
    """
    t = channel.transmission
    if t == 1.0:
        return ideal
    out: dict[tuple[int, int, int, int], float] = {}
    for (m0, k0, mp0, kp0), p in ideal.probs.items():
        if p == 0.0:
            continue
        a = np.multiply.outer(_thin(m0, t), _thin(k0, t)) * p
        b = np.multiply.outer(_thin(mp0, t), _thin(kp0, t))
        joint = np.multiply.outer(a, b)
        for idx in zip(*np.nonzero(joint)):
            key = tuple(int(i) for i in idx)
            out[key] = out.get(key, 0.0) + float(joint[idx])
    return JointPhotonDistribution(out, ideal.tail_mass)


def event_response(mask: np.ndarray, channel: LossChannel) -> np.ndarray:
    """Chance that an incident ``(m0, k0)`` registers inside ``mask``.

    ``mask[m, k]`` marks the registered counts that belong to the event.
    Returns ``R`` with ``R[m0, k0] = sum_{m, k} mask[m, k] L[m, m0] L[k, k0]``.
    """
    mask = np.asarray(mask, dtype=float)
    if channel.lossless:
        return mask
    lmat = thinning_matrix(mask.shape[0] - 1, channel.transmission)
    return lmat.T @ mask @ lmat
