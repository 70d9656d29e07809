"""Binary outcome rules, Bell ratios and the angle / threshold searches.

All probabilities are computed side by side.  Given the pair number N the
two sides are correlated only through the probability table ``P_N``, so an
event at side A reduces to a response vector ``w_N[m0]``: the chance that
``m0`` photons in ``c+`` and ``N - m0`` in ``c-`` register as a ``+1`` after
loss.  A joint probability is then ``sum_N c_N^2 w_N . P_N . w_N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .errors import DomainError, NoRootError, TruncationError, UndefinedScoreError
from .fock import AngleConfig, rotation_representations
from .loss import LOSSLESS, LossChannel, event_response
from .sources import IdealSpin, Qiopa, SourceModel, VacuumPDC, WeightDistribution

DEFAULT_GRID_STEP = 2 * math.pi / 4096
DEFAULT_REFINE_TOL = 1e-8
# S(psi) has period pi and is even in psi, so [0, pi/2] covers every optimum
DEFAULT_PSI_DOMAIN = (0.0, math.pi / 2)
# pair numbers contributing less than this fraction of the largest are skipped
_PRUNE_REL = 1e-17
# cap on (batch size) x (table entries) held at once during a sweep
_BATCH_ENTRIES = 3_000_000

# --------------------------------------------------------------------------
# outcome rules


def _fraction_cutoff(f: float, n_total: int) -> int:
    # fN within rounding of an integer counts as that integer;
    # a +1 always needs at least one registered photon in c+
    return max(math.ceil(f * n_total - 1e-9), 1)


class _TotalCountRule:
    f: float
    n_total: int

    @property
    def cutoff(self) -> int:
        return _fraction_cutoff(self.f, self.n_total)

    @property
    def max_total(self) -> int:
        return self.n_total

    def plus_mask(self, n_max: int) -> np.ndarray:
        m, k = np.indices((n_max + 1, n_max + 1))
        return (m >= self.cutoff) & (m + k == self.n_total)

    def total_mask(self, n_max: int) -> np.ndarray:
        m, k = np.indices((n_max + 1, n_max + 1))
        return m + k == self.n_total


@dataclass(frozen=True)
class FractionThreshold(_TotalCountRule):
    """``+1`` iff ``m >= ceil(f N)`` and ``m + k = N``."""

    f: float
    n_total: int

    def __post_init__(self):
        if not 0.0 <= self.f <= 1.0:
            raise DomainError(f"fraction f must lie in [0, 1], got {self.f}")
        if self.n_total < 0:
            raise DomainError("n_total must be nonnegative")


@dataclass(frozen=True)
class ExactN(_TotalCountRule):
    """``+1`` iff all N registered photons are in ``c+``."""

    n_total: int
    f = 1.0

    def __post_init__(self):
        if self.n_total < 0:
            raise DomainError("n_total must be nonnegative")


@dataclass(frozen=True)
class Window:
    """``+1`` iff ``m >= xm`` and the total count lies in the window.

    ``form="text"`` uses ``xm <= m + k <= xm + delta``.  ``form="caption"``
    widens the lower edge to ``xm - delta``; this only changes the total
    condition used by one-sided probabilities, since ``m >= xm`` already
    forces ``m + k >= xm``.
    """

    xm: int
    delta: int
    form: str = "text"

    def __post_init__(self):
        if self.xm < 1:
            raise DomainError("xm must be >= 1")
        if self.delta < 0:
            raise DomainError("delta must be >= 0")
        if self.form not in ("text", "caption"):
            raise DomainError(f"unknown window form {self.form!r}")

    @property
    def lower(self) -> int:
        return self.xm if self.form == "text" else max(self.xm - self.delta, 0)

    @property
    def max_total(self) -> int:
        return self.xm + self.delta

    def plus_mask(self, n_max: int) -> np.ndarray:
        m, k = np.indices((n_max + 1, n_max + 1))
        return (m >= self.xm) & self.total_mask(n_max)

    def total_mask(self, n_max: int) -> np.ndarray:
        m, k = np.indices((n_max + 1, n_max + 1))
        return (m + k >= self.lower) & (m + k <= self.xm + self.delta)


OutcomeRule = Union[FractionThreshold, ExactN, Window]

# --------------------------------------------------------------------------
# probability records


@dataclass(frozen=True)
class BellProbabilities:
    """The eight probabilities entering the strong and weak ratios.

    ``joint_ab`` is ``P++(theta, phi)``, ``joint_abp`` is ``P++(theta, phi')``
    and so on; the one-sided entries are ``P++(theta', -)`` and
    ``P++(-, phi)``.
    """

    joint_ab: float
    joint_abp: float
    joint_apb: float
    joint_apbp: float
    marginal_a: float
    marginal_b: float
    one_sided_a: float
    one_sided_b: float

    @property
    def numerator(self) -> float:
        return self.joint_ab - self.joint_abp + self.joint_apb + self.joint_apbp


@dataclass(frozen=True)
class BellScore:
    """Strong and weak ratios at one angle; ``None`` marks an undefined ratio."""

    s_strong: float | None
    s_weak: float | None
    psi: float
    probabilities: BellProbabilities


def strong_S(probs: BellProbabilities) -> float:
    den = probs.marginal_a + probs.marginal_b
    if not den > 0:
        raise UndefinedScoreError("strong ratio undefined: marginals vanish")
    return probs.numerator / den


def weak_S(probs: BellProbabilities) -> float:
    den = probs.one_sided_a + probs.one_sided_b
    if not den > 0:
        raise UndefinedScoreError("weak ratio undefined: one-sided probabilities vanish")
    return probs.numerator / den


def angles_from_psi(theta_base: float, psi: float) -> AngleConfig:
    """Settings with equal steps ``psi``: theta, phi, theta', phi' in order."""
    return AngleConfig(
        theta=theta_base,
        theta_prime=theta_base + 2 * psi,
        phi=theta_base + psi,
        phi_prime=theta_base + 3 * psi,
    )


# --------------------------------------------------------------------------
# engine


def as_weights(source, eps: float = 1e-12) -> WeightDistribution:
    if isinstance(source, WeightDistribution):
        return source
    if isinstance(source, (IdealSpin, VacuumPDC, Qiopa)):
        return source.weights(eps)
    raise TypeError(f"not a source model: {source!r}")


@lru_cache(maxsize=32)
def _response_vectors(rule, channel: LossChannel, n_max: int):
    plus = event_response(rule.plus_mask(n_max), channel)
    total = event_response(rule.total_mask(n_max), channel)
    out = []
    for n in range(n_max + 1):
        m0 = np.arange(n + 1)
        out.append((plus[m0, n - m0].copy(), total[m0, n - m0].copy()))
    return tuple(out)


def _check_truncation(weights: WeightDistribution, rule) -> None:
    if rule.max_total > weights.n_max and weights.tail_mass > 0:
        raise TruncationError(
            f"rule needs pair numbers up to {rule.max_total}, "
            f"weights are truncated at {weights.n_max}"
        )


def pair_statistics(
    source, rule: OutcomeRule, deltas, channel: LossChannel = LOSSLESS
) -> dict[str, np.ndarray]:
    """Event probabilities for polariser pairs with angle differences ``deltas``.

    For each difference ``delta = phi - theta`` returns the joint
    probability ``P++(theta, phi)``, the marginals ``P+(theta)`` and
    ``P+(phi)`` and the one-sided ``P++(theta, -)`` and ``P++(-, phi)``.
    """
    weights = as_weights(source, channel.eps)
    _check_truncation(weights, rule)
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    vectors = _response_vectors(rule, channel, weights.n_max)
    probs = weights.probabilities()

    scale = np.array([probs[n] * vectors[n][0].max() for n in range(weights.n_max + 1)])
    keys = ("joint", "marginal_a", "marginal_b", "one_sided_a", "one_sided_b")
    if not scale.max() > 0:
        return {k: np.zeros(deltas.size) for k in keys}
    relevant = np.nonzero(scale > _PRUNE_REL * scale.max())[0]
    n_top = int(relevant[-1])
    wanted = set(relevant.tolist())

    terms = {}
    batch = max(1, _BATCH_ENTRIES // (n_top + 1) ** 2)
    chunks = [deltas[i:i + batch] for i in range(0, deltas.size, batch)]
    per_chunk = []
    for chunk in chunks:
        acc = {k: [] for k in keys}
        for n, u in rotation_representations(chunk, n_top):
            if n not in wanted:
                continue
            w, g = vectors[n]
            table = u * u / (n + 1)
            weight = probs[n]
            row = table @ w  # A-side counts, B-side weighted by its +1 response
            col = np.einsum("i,gij->gj", w, table)
            acc["joint"].append(weight * (row @ w))
            acc["marginal_a"].append(weight * (table.sum(axis=2) @ w))
            acc["marginal_b"].append(weight * (table.sum(axis=1) @ w))
            acc["one_sided_a"].append(weight * (col @ g))
            acc["one_sided_b"].append(weight * (row @ g))
        per_chunk.append(acc)
    for k in keys:
        cols = []
        for acc in per_chunk:
            stacked = np.array(acc[k])
            cols.extend(math.fsum(stacked[:, j]) for j in range(stacked.shape[1]))
        terms[k] = np.array(cols)
    return terms


def event_probability(
    source,
    rule: OutcomeRule,
    theta: float,
    phi: float,
    channel: LossChannel = LOSSLESS,
    kind: str = "joint",
) -> float:
    """Probability of one designated ``+1`` event after loss.

    ``kind`` is ``joint``, ``marginal_A``, ``marginal_B``, ``one_sided_A`` or
    ``one_sided_B``; the angles not used by a kind are ignored.
    """
    names = {
        "joint": "joint",
        "marginal_A": "marginal_a",
        "marginal_B": "marginal_b",
        "one_sided_A": "one_sided_a",
        "one_sided_B": "one_sided_b",
    }
    if kind not in names:
        raise DomainError(f"unknown event kind {kind!r}")
    stats = pair_statistics(source, rule, [phi - theta], channel)
    return float(stats[names[kind]][0])


def _probabilities_batch(weights, rule, psis, channel) -> list[BellProbabilities]:
    psis = np.asarray(psis, dtype=float)
    g = psis.size
    # P(-psi) is the transpose of P(psi) and both sides share one rule, so
    # P++(theta', phi) equals P++(theta, phi): only psi and 3 psi are needed
    stats = pair_statistics(weights, rule, np.concatenate([psis, 3 * psis]), channel)
    j = stats["joint"]
    out = []
    for i in range(g):
        out.append(
            BellProbabilities(
                joint_ab=float(j[i]),
                joint_abp=float(j[g + i]),
                joint_apb=float(j[i]),
                joint_apbp=float(j[i]),
                # (theta', phi') and (theta, phi) both sit at difference psi
                marginal_a=float(stats["marginal_a"][i]),
                marginal_b=float(stats["marginal_b"][i]),
                one_sided_a=float(stats["one_sided_a"][i]),
                one_sided_b=float(stats["one_sided_b"][i]),
            )
        )
    return out


def bell_probabilities(
    source, rule: OutcomeRule, psi: float, channel: LossChannel = LOSSLESS
) -> BellProbabilities:
    weights = as_weights(source, channel.eps)
    return _probabilities_batch(weights, rule, [psi], channel)[0]


def _score(probs: BellProbabilities, psi: float) -> BellScore:
    try:
        s = strong_S(probs)
    except UndefinedScoreError:
        s = None
    try:
        sw = weak_S(probs)
    except UndefinedScoreError:
        sw = None
    return BellScore(s, sw, float(psi), probs)


def bell_score(
    source, rule: OutcomeRule, psi: float, channel: LossChannel = LOSSLESS
) -> BellScore:
    """Strong and weak ratios for the equal-step settings at ``psi``."""
    return _score(bell_probabilities(source, rule, psi, channel), psi)


def bell_scores(source, rule: OutcomeRule, psis, channel: LossChannel = LOSSLESS) -> list[BellScore]:
    weights = as_weights(source, channel.eps)
    psis = np.asarray(psis, dtype=float)
    return [_score(p, x) for p, x in zip(_probabilities_batch(weights, rule, psis, channel), psis)]


def _pick(score: BellScore, objective: str) -> float | None:
    if objective == "strong":
        return score.s_strong
    if objective == "weak":
        return score.s_weak
    raise DomainError(f"objective must be 'strong' or 'weak', got {objective!r}")


@dataclass(frozen=True)
class PsiOptimum:
    psi: float
    s: float
    score: BellScore


def optimize_psi(
    source,
    rule: OutcomeRule,
    channel: LossChannel = LOSSLESS,
    grid_step: float = DEFAULT_GRID_STEP,
    refine_tol: float = DEFAULT_REFINE_TOL,
    objective: str = "strong",
    domain: tuple[float, float] = DEFAULT_PSI_DOMAIN,
) -> PsiOptimum:
    """Maximise the chosen ratio over the step angle psi.

    Scans ``domain`` on a uniform grid, then refines around the best grid
    point with a bounded scalar search to ``refine_tol``.  Ties on the grid
    go to the smallest psi, so the result is deterministic.
    """
    if not grid_step > 0:
        raise DomainError("grid_step must be positive")
    lo, hi = domain
    if not hi > lo:
        raise DomainError("empty psi domain")
    weights = as_weights(source, channel.eps)
    n_pts = int(math.floor((hi - lo) / grid_step + 1e-9))
    grid = lo + grid_step * np.arange(n_pts + 1)
    scores = bell_scores(weights, rule, grid, channel)
    values = np.array([np.nan if _pick(s, objective) is None else _pick(s, objective)
                       for s in scores])
    if np.all(np.isnan(values)):
        raise UndefinedScoreError(f"{objective} ratio undefined at every grid angle")
    best = int(np.nanargmax(values))
    best_score = scores[best]

    def neg(x):
        v = _pick(bell_score(weights, rule, x, channel), objective)
        return np.inf if v is None else -v

    a = max(lo, grid[best] - grid_step)
    b = min(hi, grid[best] + grid_step)
    if b > a:
        res = minimize_scalar(neg, bounds=(a, b), method="bounded",
                              options={"xatol": refine_tol})
        if np.isfinite(res.fun) and -res.fun > values[best]:
            best_score = bell_score(weights, rule, float(res.x), channel)
    return PsiOptimum(best_score.psi, _pick(best_score, objective), best_score)


def critical_transmission(
    source,
    rule: OutcomeRule,
    psi: float,
    tol: float = 1e-10,
    eps: float = 1e-12,
) -> float:
    """Transmission at which the strong ratio falls to one.

    Bisects ``S(T) - 1`` on ``[0, 1]``; an undefined ratio counts as no
    violation.  Assumes ``S`` increases with ``T``.
    """
    weights = as_weights(source, eps)

    def excess(t: float) -> float:
        s = bell_score(weights, rule, psi, LossChannel(t, eps)).s_strong
        return -1.0 if s is None else s - 1.0

    top = excess(1.0)
    if not top > 0:
        raise NoRootError(f"no violation at T = 1 (S - 1 = {top:.6g})")
    return float(bisect(excess, 0.0, 1.0, xtol=tol))
