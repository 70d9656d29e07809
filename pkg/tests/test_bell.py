import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multibell.bell import (
    BellProbabilities,
    ExactN,
    FractionThreshold,
    Window,
    angles_from_psi,
    bell_score,
    bell_scores,
    critical_transmission,
    event_probability,
    optimize_psi,
    strong_S,
    weak_S,
)
from multibell.errors import DomainError, NoRootError, TruncationError, UndefinedScoreError
from multibell.fock import brute_force_state_oracle
from multibell.loss import LossChannel
from multibell.sources import IdealSpin, Qiopa, VacuumPDC


def oracle_score(n, f, psi, base=0.3):
    """Strong ratio at T = 1 from the brute-force tables at all four settings."""
    cut = max(math.ceil(f * n - 1e-9), 1)
    ang = angles_from_psi(base, psi)

    def joint(theta, phi):
        return brute_force_state_oracle(n, theta, phi)[cut:, cut:].sum()

    def marg(theta):
        return brute_force_state_oracle(n, theta, theta)[cut:, :].sum()

    num = (
        joint(ang.theta, ang.phi)
        - joint(ang.theta, ang.phi_prime)
        + joint(ang.theta_prime, ang.phi)
        + joint(ang.theta_prime, ang.phi_prime)
    )
    return num / (marg(ang.theta_prime) + marg(ang.phi))


@pytest.mark.parametrize("n, f", [(1, 1.0), (2, 1.0), (3, 0.5), (4, 0.75), (5, 0.2)])
def test_score_matches_brute_force_at_all_settings(n, f):
    for psi in (0.1, 0.4, 2.2):
        got = bell_score(IdealSpin(n), FractionThreshold(f, n), psi).s_strong
        assert got == pytest.approx(oracle_score(n, f, psi), abs=1e-12)


def test_single_pair_optimum_is_closed_form():
    best = optimize_psi(IdealSpin(1), ExactN(1))
    assert best.s == pytest.approx((1 + math.sqrt(2)) / 2, abs=1e-9)
    assert best.psi == pytest.approx(math.pi / 8, abs=1e-6)


def test_two_pair_headline():
    best = optimize_psi(IdealSpin(2), FractionThreshold(1.0, 2))
    assert best.s == pytest.approx(1.181, abs=1e-3)
    # the other branch listed for two pairs
    assert bell_score(IdealSpin(2), ExactN(2), 3.4).s_strong <= best.s + 1e-12


def test_optimum_decreases_slowly_with_n():
    values = [optimize_psi(IdealSpin(n), ExactN(n)).s for n in (1, 2, 3, 4)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] > 1.16


def test_undefined_for_zero_pairs():
    score = bell_score(IdealSpin(0), ExactN(0), 0.3)
    assert score.s_strong is None and score.s_weak is None
    with pytest.raises(UndefinedScoreError):
        strong_S(score.probabilities)
    with pytest.raises(UndefinedScoreError):
        weak_S(score.probabilities)
    with pytest.raises(UndefinedScoreError):
        optimize_psi(IdealSpin(0), ExactN(0))


def test_ratio_functions():
    p = BellProbabilities(0.3, 0.1, 0.3, 0.3, 0.4, 0.4, 0.35, 0.35)
    assert strong_S(p) == pytest.approx(0.8 / 0.8)
    assert weak_S(p) == pytest.approx(0.8 / 0.7)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("t", [0.5, 0.9])
def test_loss_scaling_and_flat_weak_ratio(n, t):
    psi = 0.27
    ideal = bell_score(IdealSpin(n), ExactN(n), psi)
    lossy = bell_score(IdealSpin(n), ExactN(n), psi, LossChannel(t))
    assert lossy.s_strong == pytest.approx(t**n * ideal.s_strong, abs=1e-10)
    assert lossy.s_weak == pytest.approx(ideal.s_weak, abs=1e-10)


def test_weak_equals_strong_without_loss():
    for n in (1, 2, 5):
        s = bell_score(IdealSpin(n), FractionThreshold(0.6, n), 0.2)
        assert abs(s.s_weak - s.s_strong) < 1e-12


@pytest.mark.parametrize("n, t_star", [(1, 0.83), (2, 0.92)])
def test_critical_transmission(n, t_star):
    best = optimize_psi(IdealSpin(n), ExactN(n))
    got = critical_transmission(IdealSpin(n), ExactN(n), best.psi)
    assert got == pytest.approx(t_star, abs=5e-3)
    assert got == pytest.approx(best.s ** (-1.0 / n), abs=1e-8)


def test_no_root_without_violation():
    with pytest.raises(NoRootError):
        critical_transmission(IdealSpin(2), ExactN(2), math.pi / 2)


def test_s_non_decreasing_in_fraction():
    # raising the threshold never lowers the optimum at fixed N
    for n in (2, 3, 4, 6):
        fs = np.round(np.arange(0.5, 1.01, 0.1), 10)
        values = [optimize_psi(IdealSpin(n), FractionThreshold(f, n)).s for f in fs]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_complementary_thresholds(n):
    # "+1 iff m >= c" has complement "N - m >= N - c + 1", the same rule read
    # through the other polariser channel; so S_c - 1 = (S - 1) p / (1 - p)
    psi = 0.31
    for c in range(1, n + 1):
        c_dual = n - c + 1
        s = bell_score(IdealSpin(n), FractionThreshold(c / n, n), psi)
        s_dual = bell_score(IdealSpin(n), FractionThreshold(c_dual / n, n), psi)
        p = s.probabilities.marginal_a
        assert s_dual.s_strong - 1 == pytest.approx((s.s_strong - 1) * p / (1 - p), abs=1e-12)


def test_half_fraction_approaches_one_at_large_n():
    values = [optimize_psi(IdealSpin(n), FractionThreshold(0.5, n)).s for n in (20, 40)]
    assert 1 < values[1] < values[0] < 1.02


@pytest.mark.parametrize("xm, r", [(2, 0.9), (5, math.asinh(math.sqrt(2.5))), (13, 1.65)])
def test_zero_width_window_matches_ideal_source(xm, r):
    for psi in (0.1, 0.25):
        window = bell_score(VacuumPDC(r), Window(xm, 0), psi).s_strong
        ideal = bell_score(IdealSpin(xm), ExactN(xm), psi).s_strong
        assert abs(window - ideal) < 1e-10


def test_window_width_lowers_violation():
    values = [optimize_psi(VacuumPDC(1.65), Window(13, d)).s for d in range(6)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert min(values) > 1


def test_caption_window_changes_only_one_sided():
    for t in (1.0, 0.85):
        ch = LossChannel(t)
        text = bell_score(VacuumPDC(1.2), Window(6, 2, "text"), 0.12, ch)
        cap = bell_score(VacuumPDC(1.2), Window(6, 2, "caption"), 0.12, ch)
        assert cap.s_strong == pytest.approx(text.s_strong, abs=1e-14)
        assert cap.probabilities.one_sided_a >= text.probabilities.one_sided_a


def test_vacuum_weak_ratio_improves_with_transmission():
    src, rule = VacuumPDC(0.5), ExactN(2)
    values = [optimize_psi(src, rule, LossChannel(t), objective="weak").s for t in (0.4, 0.6, 0.8, 1.0)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_optimizer_beats_its_grid():
    grid = np.linspace(0, math.pi / 2, 200)
    scores = bell_scores(IdealSpin(3), ExactN(3), grid)
    best = optimize_psi(IdealSpin(3), ExactN(3))
    assert best.s >= max(s.s_strong for s in scores) - 1e-12
    again = optimize_psi(IdealSpin(3), ExactN(3))
    assert again == best


def test_truncation_guard():
    with pytest.raises(TruncationError):
        bell_score(VacuumPDC(0.3), ExactN(40), 0.2)


def test_rule_validation():
    with pytest.raises(DomainError):
        FractionThreshold(1.5, 2)
    with pytest.raises(DomainError):
        Window(0, 1)
    with pytest.raises(DomainError):
        Window(3, 1, "other")
    with pytest.raises(DomainError):
        event_probability(IdealSpin(2), ExactN(2), 0.0, 0.1, kind="both")


sources = st.one_of(
    st.builds(IdealSpin, st.integers(1, 6)),
    st.builds(VacuumPDC, st.floats(0.05, 0.8)),
    st.builds(Qiopa, st.floats(0.05, 0.8)),
)


@settings(max_examples=40, deadline=None)
@given(src=sources, n=st.integers(1, 5), t=st.floats(0.3, 1.0), psi=st.floats(0, math.pi))
def test_weak_ratio_dominates_strong(src, n, t, psi):
    if isinstance(src, IdealSpin):
        n = src.n_total
    s = bell_score(src, ExactN(n), psi, LossChannel(t))
    assert s.probabilities.one_sided_a <= s.probabilities.marginal_a + 1e-15
    if s.s_strong is not None and s.s_weak is not None:
        # shared numerator, smaller denominator: the weak ratio is the
        # strong one stretched away from zero
        assert abs(s.s_weak) >= abs(s.s_strong) - 1e-12
        assert s.s_weak * s.s_strong >= 0
        if s.probabilities.numerator >= 0:
            assert s.s_weak >= s.s_strong - 1e-12


@settings(max_examples=30, deadline=None)
@given(
    theta=st.floats(-3, 3),
    delta=st.floats(-3, 3),
    shift=st.floats(-6, 6),
    t=st.floats(0.3, 1.0),
    kind=st.sampled_from(["joint", "marginal_A", "marginal_B", "one_sided_A", "one_sided_B"]),
)
def test_event_probabilities_shift_invariant(theta, delta, shift, t, kind):
    src, rule, ch = VacuumPDC(0.4), FractionThreshold(0.5, 3), LossChannel(t)
    a = event_probability(src, rule, theta, theta + delta, ch, kind)
    b = event_probability(src, rule, theta + shift, theta + delta + shift, ch, kind)
    assert a == pytest.approx(b, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(psi=st.floats(0, math.pi))
def test_score_period_and_parity(psi):
    src, rule = IdealSpin(3), ExactN(3)
    s = bell_score(src, rule, psi).s_strong
    assert bell_score(src, rule, psi + math.pi).s_strong == pytest.approx(s, abs=1e-12)
    assert bell_score(src, rule, -psi).s_strong == pytest.approx(s, abs=1e-12)
