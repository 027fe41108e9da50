"""Tests for sublevel volumes, the quartic q and the elliptic machinery"""

import math
from itertools import permutations

import numpy as np
import pytest
from scipy import special

from nearres.errors import DegenerateConfigurationError, ValidationError
from nearres.sublevel import (
    MC_CHUNK,
    AngleTriple,
    SublevelProblem,
    annulus_volume,
    coset_representative,
    correspondence_check,
    descending_coset,
    elliptic_f,
    elliptic_identity_sweep,
    f_value,
    full_interval_integral,
    lambda_roots,
    lambda_roots_sine,
    log_plus,
    manifold_residual,
    pi_products,
    q_factored,
    q_integral,
    q_integral_bound_check,
    q_integral_direct,
    q_quartic,
    sign_relations,
    substitution_check,
    theorem_volume_bound,
    volume_mc,
)

GENERIC = AngleTriple(1.0, 0.7, 2.0)


def test_f_value_at_known_point():
    prob = SublevelProblem.build((0, 312, 25), delta=0.1)
    assert f_value(prob, (0.0, -156.0, -12.5)) == pytest.approx(-25.0 / 313.0, abs=1e-15)


def test_f_value_singular_points():
    prob = SublevelProblem.build((1, 2, 3))
    with pytest.raises(ValidationError):
        f_value(prob, (-1.0, -2.0, -3.0))
    with pytest.raises(ValidationError):
        f_value(prob, (0.0, 0.0, 0.0))


def test_problem_validation():
    with pytest.raises(ValidationError):
        SublevelProblem.build((1, 0, 1), delta=0.5)
    with pytest.raises(ValidationError):
        SublevelProblem.build((1, 0, 1), sigma1='?')
    assert SublevelProblem.build((1, 0, 1), delta=3.0, strict=False).delta == 3.0


def test_volume_of_empty_band():
    assert volume_mc(SublevelProblem.build((0, 0, 4), delta=0.0), seed=1) == (0.0, 0.0)


def test_wide_band_fills_the_annulus(stretched_geom):
    prob = SublevelProblem.build((0, 0, 4), delta=3.0, geom=stretched_geom, strict=False)
    estimate, error = volume_mc(prob, samples=200_000, seed=1)
    assert abs(estimate - annulus_volume(prob)) < 5 * error


def test_volume_is_monotone_in_delta():
    small = volume_mc(SublevelProblem.build((2, 1, 5), delta=0.05), samples=50_000, seed=9)[0]
    large = volume_mc(SublevelProblem.build((2, 1, 5), delta=0.2), samples=50_000, seed=9)[0]
    assert 0 < small <= large


def test_volume_ignores_thread_count():
    prob = SublevelProblem.build((3, 0, 4), '-', '+', delta=0.1)
    samples = 3 * MC_CHUNK + 5
    assert volume_mc(prob, samples, seed=2, threads=1) == volume_mc(prob, samples, seed=2, threads=3)


def test_volume_needs_enough_samples():
    with pytest.raises(ValidationError):
        volume_mc(SublevelProblem.build((1, 1, 1)), samples=100)


def test_theorem_volume_bound():
    assert log_plus(0.5) == 0.0
    assert log_plus(math.e) == pytest.approx(1.0)
    assert theorem_volume_bound(SublevelProblem.build((0, 0, 4), delta=0.0)) == 0.0
    flat = SublevelProblem.build((4, 0, 0), delta=0.01)
    assert theorem_volume_bound(flat) == pytest.approx(64 * 0.01 * (1 + math.log(100)))


def test_factored_quartic_and_manifold():
    rng = np.random.default_rng(0)
    lam, tk, tn = rng.uniform(0.5, 1.0, 20), rng.uniform(0, math.pi, 20), rng.uniform(0, math.pi, 20)
    cm = rng.uniform(-1, 1, 20)
    assert np.allclose(q_quartic(lam, tk, cm, tn), q_factored(lam, tk, cm, tn), atol=1e-12)
    phi = rng.uniform(0, 2 * math.pi, 20)
    assert np.max(np.abs(manifold_residual(lam, tk, phi, tn, 0.3))) < 1e-12


def test_roots_are_zeros_of_q_and_match_sine_form():
    roots = lambda_roots(GENERIC)
    for r in roots:
        assert abs(q_quartic(r, GENERIC.theta_k, GENERIC.c_m, GENERIC.theta_n)) < 1e-10 * (1 + abs(r)) ** 4
    assert np.allclose(roots, lambda_roots_sine(GENERIC), atol=1e-10)


def test_sign_relations_are_negative():
    assert all(v < 0 for v in sign_relations(GENERIC).values())


def test_degenerate_angles_rejected():
    with pytest.raises(DegenerateConfigurationError):
        lambda_roots(AngleTriple(math.pi / 2, 0.7, 2.0))
    with pytest.raises(DegenerateConfigurationError):
        lambda_roots(AngleTriple(1.0, 1.0, 2.0))
    with pytest.raises(ValidationError):
        AngleTriple(-0.1, 1.0, 1.0)


def test_pi_products_and_correspondence():
    assert pi_products(4, 3, 2, 1) == (4, 3, 1)
    first, second = correspondence_check(GENERIC)
    assert first < 1e-12
    assert second < 1e-12


def test_every_ordering_lands_in_its_coset():
    for perm in permutations((4.0, 3.0, 2.0, 1.0)):
        report = descending_coset(perm)
        assert report.member, perm


def test_impossible_sign_patterns():
    with pytest.raises(ValidationError):
        coset_representative((1, 1, -1))
    with pytest.raises(ValidationError):
        coset_representative((-1, -1, 1))
    with pytest.raises(ValidationError):
        descending_coset((1.0, 1.0, 2.0, 3.0))


@pytest.mark.parametrize('psi,k', [(0.3, 0.2), (1.2, 0.9), (math.pi / 2, 0.5)])
def test_elliptic_f_matches_library(psi, k):
    assert elliptic_f(psi, k) == pytest.approx(float(special.ellipkinc(psi, k * k)), rel=1e-10)


def test_elliptic_f_rejects_unit_modulus():
    with pytest.raises(ValidationError):
        elliptic_f(0.5, 1.0)


def test_substitution_identity():
    left, right = substitution_check(4.0, 2.5, 2.0, 1.0, 0.0)
    assert left == pytest.approx(right, rel=1e-8)
    with pytest.raises(ValidationError):
        substitution_check(1.0, 2.0, 3.0, 4.0, 5.0)


def test_full_interval_integral():
    parts = full_interval_integral(4.0, 3.0, 2.0, 1.0)
    assert parts['quadrature'] == pytest.approx(parts['closed_form'], rel=1e-8)
    assert parts['closed_form'] <= math.pi * parts['shape'] + 1e-12


def test_q_integral_matches_direct_quadrature():
    for tn, tk, cm in [(1.0, 0.7, math.cos(2.0)), (0.4, 2.2, 0.3), (2.5, 1.2, -0.6)]:
        assert q_integral(tn, tk, cm) == pytest.approx(q_integral_direct(tn, tk, cm), rel=1e-3, abs=1e-9)


def test_q_bound_check():
    grid = [(1.0, 0.7, math.cos(2.0)), (0.4, 2.2, 0.3), (2.5, 1.2, -0.6), (math.pi / 2, 1.0, 0.5)]
    report = q_integral_bound_check(grid)
    assert report.skipped == 1
    assert len(report.table) == 3
    assert (report.table['q_value'] <= report.table['ceiling'] * (1 + 1e-6)).all()
    assert (report.table['ratio_general'] <= math.pi).all()
    assert report.holds


def test_identity_sweep():
    table = elliptic_identity_sweep(50, seed=3)
    assert len(table) == 50
    assert table['first_correspondence'].max() < 1e-10
    assert table['root_residual'].max() < 1e-10
    assert table['sine_form_gap'].max() < 1e-6
    assert table['substitution_gap'].max() < 1e-8


@pytest.mark.slow
def test_volume_stays_under_linear_bound():
    prob = SublevelProblem.build((0, 0, 64), delta=0.01)
    estimate, error = volume_mc(prob, samples=2_000_000, seed=11, threads=4)
    assert estimate - 3 * error <= 10 * prob.delta * prob.n.norm ** 3


@pytest.mark.slow
def test_identity_sweep_at_full_size():
    table = elliptic_identity_sweep(1000, seed=5)
    assert len(table) == 1000
    # |Π| is at most 4 for cosines in [-1, 1]
    assert table['first_correspondence'].max() < 4e-12
    assert table['second_correspondence'].max() < 4e-12
    assert table['root_residual'].max() < 1e-10
    assert table['substitution_gap'].max() < 1e-8
