"""Photon-number amplitudes of the N-pair polarisation-entangled state.

The state is ``(N! sqrt(N+1))^-1 (a1+ a2+ + b1+ b2+)^N |0>``, with modes
``a1, b1`` at location A and ``a2, b2`` at location B.  Each side passes a
double-channel polariser,

    c+ =  a1 cos(theta) + b1 sin(theta)     d+ =  a2 cos(phi) + b2 sin(phi)
    c- = -a1 sin(theta) + b1 cos(theta)     d- = -a2 sin(phi) + b2 cos(phi)

and we need the amplitude of ``m`` photons in ``c+`` (``N - m`` in ``c-``)
together with ``m'`` in ``d+`` (``N - m'`` in ``d-``).

Because the polariser transform is a real rotation, the amplitude table is
``U_N(delta) / sqrt(N+1)`` where ``U_N`` is the N-photon (spin ``N/2``)
representation of a 2x2 rotation by the angle difference ``delta = phi -
theta``.  ``U_N`` is built from ``U_{N-1}`` by a recursion with weights
bounded by one, which stays orthogonal to rounding error well past N = 100;
the closed-form alternating sum for Wigner small-d elements and the naive
one-column recursion both lose all digits before N = 100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import DomainError

#: Largest N accepted by :func:`brute_force_state_oracle`.
ORACLE_MAX_N = 10

Outcome = tuple[int, int, int, int]


@dataclass(frozen=True)
class AngleConfig:
    """Polariser settings: ``theta, theta_prime`` at A, ``phi, phi_prime`` at B."""

    theta: float
    theta_prime: float
    phi: float
    phi_prime: float

    def __post_init__(self):
        for name in ("theta", "theta_prime", "phi", "phi_prime"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"angle {name} must be finite")


def _rotation_coefficients(deltas: np.ndarray):
    # a+ = u11 c+ + u21 c-, b+ = u12 c+ + u22 c-, written for the combined
    # (A then B) rotation so that only the angle difference survives.
    c = np.cos(deltas)[:, None, None]
    s = np.sin(deltas)[:, None, None]
    return c, s, -s, c


def rotation_representations(deltas, n_max: int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(N, U_N)`` for ``N = 0 .. n_max``.

    ``U_N`` has shape ``(len(deltas), N+1, N+1)``; entry ``[g, m, m']`` times
    ``1/sqrt(N+1)`` is the amplitude for ``m`` photons in ``c+`` and ``m'``
    in ``d+`` at angle difference ``deltas[g]``.

    Each step uses ``|s> = (a+ a + b+ b)|s> / N``: remove one photon from
    either input mode, rotate, and put it back.  All four weights are
    bounded by one, which keeps ``U_N`` orthogonal to ~N machine epsilons.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    u11, u21, u12, u22 = _rotation_coefficients(deltas)
    u = np.ones((deltas.size, 1, 1))
    yield 0, u
    for n in range(1, n_max + 1):
        counts = np.arange(n + 1, dtype=float)
        out_add = np.sqrt(counts)[:, None]       # c+ gains a photon
        out_keep = np.sqrt(n - counts)[:, None]  # c- gains a photon
        in_a = np.sqrt(counts)[None, :]
        in_b = np.sqrt(n - counts)[None, :]
        nxt = np.zeros((deltas.size, n + 1, n + 1))
        nxt[:, 1:, 1:] += (out_add[1:] * in_a[:, 1:]) * u11 * u
        nxt[:, :-1, 1:] += (out_keep[:-1] * in_a[:, 1:]) * u21 * u
        nxt[:, 1:, :-1] += (out_add[1:] * in_b[:, :-1]) * u12 * u
        nxt[:, :-1, :-1] += (out_keep[:-1] * in_b[:, :-1]) * u22 * u
        u = nxt / n
        yield n, u


def rotation_representation(n_total: int, deltas) -> np.ndarray:
    """Return ``U_N`` for every angle in ``deltas``; shape ``(G, N+1, N+1)``."""
    if n_total < 0:
        raise DomainError("n_total must be nonnegative")
    for n, u in rotation_representations(deltas, n_total):
        if n == n_total:
            return u
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class AmplitudeTable:
    """Amplitudes ``C[m, m']`` of the N-pair state for one angle difference."""

    n_total: int
    delta: float
    values: np.ndarray = field(repr=False)

    def amplitude(self, m: int, m_prime: int) -> float:
        _check_counts(self.n_total, m, m_prime)
        return float(self.values[m, m_prime])

    @property
    def probabilities(self) -> np.ndarray:
        return self.values**2


def _check_counts(n_total: int, m: int, m_prime: int) -> None:
    if not (0 <= m <= n_total and 0 <= m_prime <= n_total):
        raise DomainError(f"counts ({m}, {m_prime}) outside 0..{n_total}")


def amplitude_table(n_total: int, delta: float) -> AmplitudeTable:
    u = rotation_representation(n_total, [delta])[0]
    values = u / math.sqrt(n_total + 1)
    values.setflags(write=False)
    return AmplitudeTable(n_total, float(delta), values)


def joint_amplitude(n_total: int, delta: float, m: int, m_prime: int) -> float:
    """Amplitude for ``m`` photons in ``c+`` and ``m_prime`` in ``d+``."""
    if n_total < 0:
        raise DomainError("n_total must be nonnegative")
    _check_counts(n_total, m, m_prime)
    return amplitude_table(n_total, delta).amplitude(m, m_prime)


def probability_table(n_total: int, delta: float) -> np.ndarray:
    """Return ``P[m, m'] = |C[m, m']|^2`` as an ``(N+1, N+1)`` array.

    Row ``m`` is the count in ``c+`` (so ``N - m`` in ``c-``), column ``m'``
    the count in ``d+``.
    """
    return amplitude_table(n_total, delta).probabilities


def marginal_table(table: np.ndarray) -> np.ndarray:
    """Side-A marginal: ``sum over m'`` of the probability table."""
    table = np.asarray(table, dtype=float)
    return table.sum(axis=1)


def spin_z_expectation(marginal) -> float:
    """Mean of ``(c+ c+ - c- c-)/2`` given the side-A count distribution."""
    marginal = np.asarray(marginal, dtype=float)
    n = marginal.size - 1
    return float(np.dot(np.arange(n + 1) - n / 2, marginal))


def singlet_angle_map(theta: float, phi: float) -> tuple[float, float]:
    """Map polariser angles onto the equivalent spin-singlet measurement angles."""
    return -theta, phi + math.pi / 2


def brute_force_state_oracle(n_total: int, theta: float, phi: float) -> np.ndarray:
    """Probability table by direct polynomial expansion of the state.

    Substitutes the inverse polariser transform into each creation operator,
    raises the pair operator to the N-th power term by term and reads off the
    Fock coefficients.  Exponential cost; for testing only.
    """
    if not 0 <= n_total <= ORACLE_MAX_N:
        raise DomainError(f"oracle refuses n_total={n_total} (limit {ORACLE_MAX_N})")
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(phi), math.sin(phi)
    # linear forms over the exponent slots (c+, c-, d+, d-)
    a1 = {(1, 0, 0, 0): ct, (0, 1, 0, 0): -st}
    b1 = {(1, 0, 0, 0): st, (0, 1, 0, 0): ct}
    a2 = {(0, 0, 1, 0): cp, (0, 0, 0, 1): -sp}
    b2 = {(0, 0, 1, 0): sp, (0, 0, 0, 1): cp}
    pair = _poly_add(_poly_mul(a1, a2), _poly_mul(b1, b2))

    poly: dict[Outcome, float] = {(0, 0, 0, 0): 1.0}
    for _ in range(n_total):
        poly = _poly_mul(poly, pair)

    norm = math.factorial(n_total) * math.sqrt(n_total + 1)
    table = np.zeros((n_total + 1, n_total + 1))
    for (m, k, mp, kp), coef in poly.items():
        fock = math.sqrt(
            math.factorial(m) * math.factorial(k) * math.factorial(mp) * math.factorial(kp)
        )
        table[m, mp] += (coef * fock / norm) ** 2
    return table


def _poly_mul(p: Mapping[Outcome, float], q: Mapping[Outcome, float]) -> dict[Outcome, float]:
    out: dict[Outcome, float] = {}
    for ep, cp in p.items():
        for eq, cq in q.items():
            key = tuple(x + y for x, y in zip(ep, eq))
            out[key] = out.get(key, 0.0) + cp * cq
    return out


def _poly_add(p: Mapping[Outcome, float], q: Mapping[Outcome, float]) -> dict[Outcome, float]:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0.0) + c
    return out


@dataclass(frozen=True)
class JointPhotonDistribution:
    """Sparse distribution over outcomes ``(m, k, m', k')``.

    The counts refer to ``c+, c-, d+, d-``.  ``tail_mass`` is the probability
    removed by truncating the source.
    """

    probs: Mapping[Outcome, float]
    tail_mass: float = 0.0

    def total(self) -> float:
        return math.fsum(self.probs.values())

    def get(self, outcome: Outcome) -> float:
        return self.probs.get(tuple(outcome), 0.0)

    def marginal_a(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for (m, k, _, _), p in self.probs.items():
            out[(m, k)] = out.get((m, k), 0.0) + p
        return out

    def marginal_b(self) -> dict[tuple[int, int], float]:
        out: dict[tuple[int, int], float] = {}
        for (_, _, mp, kp), p in self.probs.items():
            out[(mp, kp)] = out.get((mp, kp), 0.0) + p
        return out

    @classmethod
    def from_weights(cls, weights, delta: float, tail_mass: float = 0.0) -> "JointPhotonDistribution":
        """Lossless distribution of ``sum_N c_N |phi_N>`` at angle difference ``delta``.

        Different N never interfere since the four counts fix N.
        """
        weights = np.asarray(weights, dtype=float)
        probs: dict[Outcome, float] = {}
        n_max = weights.size - 1
        for n, u in rotation_representations([delta], n_max):
            w = weights[n] ** 2
            if w == 0.0:
                continue
            table = u[0] ** 2 / (n + 1)
            for m in range(n + 1):
                for mp in range(n + 1):
                    probs[(m, n - m, mp, n - mp)] = w * table[m, mp]
        return cls(probs, tail_mass)
