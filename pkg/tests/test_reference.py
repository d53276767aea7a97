import dataclasses
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from galerkin_vi.analysis import (ReferenceTrajectory, exact_discrete_lagrangian_oracle, harmonic_action,
                                  reference_solution, shoot_momentum)
from galerkin_vi.analysis.reference import H_REF
from galerkin_vi.errors import ShootingDivergence
from galerkin_vi.mechanics import make_system


def without_flow(system):
    """Same system, but forced through the numerical reference path."""
    return dataclasses.replace(system, exact_flow=None)


def test_reference_examples():
    ho = make_system("harmonic_oscillator")
    q, p = reference_solution(ho, [1.0], [0.0], math.pi / 2)
    assert_allclose([q[0], p[0]], [0.0, -1.0], atol=1e-12)
    q, p = reference_solution(without_flow(ho), [1.0], [0.0], math.pi / 2)
    assert_allclose([q[0], p[0]], [0.0, -1.0], atol=1e-12)
    free = make_system("free_particle", dim=2)
    q, p = reference_solution(free, [1.0, 2.0], [0.5, 0.25], 3.0)
    assert_allclose(q, [2.5, 2.75])
    assert_allclose(p, [0.5, 0.25])
    q, p = reference_solution(ho, [0.3], [0.1], 0.0)
    assert_allclose([q[0], p[0]], [0.3, 0.1])


def test_numerical_reference_matches_closed_form():
    ho = make_system("harmonic_oscillator")
    ref = ReferenceTrajectory(without_flow(ho), [1.0], [0.5], 10.0)
    for t in [0.37, 1.0, 5.5, 10.0]:
        q, p = ref.at(t)
        qe, pe = ho.exact_flow(np.array([1.0]), np.array([0.5]), t)
        assert abs(q[0] - qe[0]) <= 1e-12 and abs(p[0] - pe[0]) <= 1e-12


def test_pendulum_self_consistency():
    pend = make_system("pendulum")
    a = reference_solution(pend, [2.0], [0.0], 1.0, H_REF)
    b = reference_solution(pend, [2.0], [0.0], 1.0, H_REF / 2)
    assert np.max(np.abs(np.concatenate(a) - np.concatenate(b))) <= 1e-10


@pytest.mark.parametrize("label,q0,p0", [
    ("pendulum", [1.0], [0.5]),
    ("quartic_oscillator", [1.0], [0.5]),
    ("kepler", [1.0, 0.0], [0.0, 1.1]),
    ("harmonic_oscillator", [1.0], [0.5]),
    ("damped_oscillator", [1.0], [0.5]),
])
def test_halving_reference_step(label, q0, p0):
    sys = without_flow(make_system(label))
    coarse = ReferenceTrajectory(sys, q0, p0, 10.0, H_REF)
    fine = ReferenceTrajectory(sys, q0, p0, 10.0, H_REF / 2)
    for t in [1.0, 3.3, 10.0]:
        a, b = coarse.at(t), fine.at(t)
        assert np.max(np.abs(np.concatenate(a) - np.concatenate(b))) <= 1e-10


def test_alignment_and_states():
    pend = make_system("pendulum")
    ref = ReferenceTrajectory(pend, [1.0], [0.0], 1.0, H_REF, align=0.0125)
    assert ref.h <= H_REF
    assert abs(0.0125 / ref.h - round(0.0125 / ref.h)) <= 1e-9
    q, p = ref.states([0.0, 0.5, 1.0])
    assert q.shape == (3, 1) and p.shape == (3, 1)
    assert_allclose(q[0], [1.0])
    with pytest.raises(ValueError):
        ref.at(-0.1)
    with pytest.raises(ValueError):
        reference_solution(pend, [1.0], [0.0], -1.0)


def test_harmonic_action_closed_form():
    # the stable rewrite agrees with the textbook form where the latter is well conditioned
    for q0, q1, h in [(1.0, 0.3, 0.7), (-0.5, 2.0, 1.3), (0.2, 0.2, 2.5)]:
        textbook = ((q0 ** 2 + q1 ** 2) * math.cos(h) - 2 * q0 * q1) / (2 * math.sin(h))
        assert harmonic_action(q0, q1, h) == pytest.approx(textbook, rel=1e-13)
    assert harmonic_action(1.0, 1.0, 0.5, m=2.0, k=8.0) == pytest.approx(
        2 * 2 * ((2 * math.cos(1.0)) - 2) / (2 * math.sin(1.0)), rel=1e-13)


@pytest.mark.parametrize("q0,q1,h", [(1.0, 0.9, 0.1), (0.0, 0.5, 0.3), (-0.4, 0.6, 1.0)])
def test_oracle_free_particle(q0, q1, h):
    got = exact_discrete_lagrangian_oracle(make_system("free_particle"), [q0], [q1], h)
    assert abs(got - (q1 - q0) ** 2 / (2 * h)) <= 1e-10


@pytest.mark.parametrize("q0,q1,h", [(1.0, 0.9, 0.1), (1.0, 0.5, 0.5), (-0.4, 0.6, 1.0)])
def test_oracle_harmonic_shooting(q0, q1, h):
    ho = without_flow(make_system("harmonic_oscillator"))
    got = exact_discrete_lagrangian_oracle(ho, [q0], [q1], h)
    assert abs(got - harmonic_action(q0, q1, h)) <= 1e-9


def test_oracle_constant_solution():
    pend = make_system("pendulum")
    h = 0.05
    assert exact_discrete_lagrangian_oracle(pend, [0.0], [0.0], h) == pytest.approx(h * 1.0, abs=1e-12)


def test_shoot_momentum_kepler():
    kep = make_system("kepler")
    q0, p0 = np.array([1.0, 0.0]), np.array([0.0, 1.1])
    q1, _ = reference_solution(kep, q0, p0, 0.3)
    assert_allclose(shoot_momentum(kep, q0, q1, 0.3), p0, atol=1e-10)


def test_shooting_divergence():
    # q(pi) = -q(0) for every initial momentum, so q1 = 0.3 is unreachable from q0 = 1
    with pytest.raises(ShootingDivergence):
        shoot_momentum(make_system("harmonic_oscillator"), [1.0], [0.3], math.pi, max_iter=5)
