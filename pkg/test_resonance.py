"""Tests for bandwidth rules, membership and triad enumeration"""

import math
from itertools import permutations

import numpy as np
import pytest

from nearres.errors import ConvolutionError, ValidationError
from nearres.lattice import adjust
from nearres.resonance import (
    REPORT_COLUMNS,
    TIE_MARGIN,
    BandwidthSpec,
    bandwidth,
    count_report,
    count_triads_for,
    enumerate_triads_for,
    fit_counting_constant,
    is_near_resonant,
    min_triplet,
    triplet_value,
    solve_theorem_delta,
)


def _triad(geom, n, k):
    m = tuple(-a - b for a, b in zip(n, k))
    return adjust(n, geom), adjust(k, geom), adjust(m, geom)


@pytest.mark.parametrize('rhs', [1e-4, 0.01, 0.05, 0.2])
def test_theorem_delta_solves_its_equation(rhs):
    delta = solve_theorem_delta(rhs)
    assert delta * math.log(1.0 / delta) == pytest.approx(rhs, abs=1e-10)


def test_theorem_delta_edges():
    assert solve_theorem_delta(0.0) == 0.0
    assert solve_theorem_delta(0.5) == 0.49
    assert solve_theorem_delta(0.3, cap=0.1) == 0.1


def test_spec_validation():
    with pytest.raises(ValidationError):
        BandwidthSpec.theorem(0.0)
    with pytest.raises(ValidationError):
        BandwidthSpec('bogus')
    with pytest.raises(ValidationError):
        BandwidthSpec.constant(0.5)


def test_horizontal_triad_is_resonant(unit_geom):
    triad = _triad(unit_geom, (1, 0, 0), (0, 1, 0))
    assert min_triplet(*triad) == 0.0
    assert is_near_resonant(*triad, BandwidthSpec.zero())


def test_triplet_value_signs(unit_geom):
    triad = _triad(unit_geom, (0, 3, 4), (0, 0, 1))
    assert triplet_value(*triad, ('+', '+', '+')) == pytest.approx(0.8 + 1.0 - 5.0 / math.sqrt(34.0))
    assert triplet_value(*triad, ('-', '+', '-')) == pytest.approx(-0.8 + 1.0 + 5.0 / math.sqrt(34.0))
    assert min_triplet(*triad) == pytest.approx(abs(-0.8 + 1.0 - 5.0 / math.sqrt(34.0)))


def test_vertical_triad_is_not(unit_geom):
    triad = _triad(unit_geom, (0, 0, 1), (0, 0, 1))
    assert min_triplet(*triad) == pytest.approx(1.0)
    assert not is_near_resonant(*triad, BandwidthSpec.constant(0.4))
    assert is_near_resonant(*triad, BandwidthSpec.all_pass())


def test_convolution_violation(unit_geom):
    n, k = adjust((1, 0, 0), unit_geom), adjust((0, 1, 0), unit_geom)
    with pytest.raises(ConvolutionError):
        is_near_resonant(n, k, adjust((0, 0, 1), unit_geom), BandwidthSpec.zero())


def test_theorem_bandwidth_uses_largest_norm(unit_geom):
    triad = _triad(unit_geom, (3, 0, 4), (0, 1, 0))
    n_max = max(w.norm for w in triad)
    assert bandwidth(*triad, BandwidthSpec.theorem(2.0)) == solve_theorem_delta(2.0 / n_max)


def test_membership_symmetric_even_and_monotone(stretched_geom):
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = tuple(int(x) for x in rng.integers(-4, 5, size=3))
        k = tuple(int(x) for x in rng.integers(-4, 5, size=3))
        triad = _triad(stretched_geom, n, k)
        if any(w.is_zero for w in triad):
            continue
        spec = BandwidthSpec.constant(0.1)
        base = is_near_resonant(*triad, spec)
        for perm in permutations(triad):
            assert is_near_resonant(*perm, spec) == base
        assert is_near_resonant(*(-w for w in triad), spec) == base
        if base:
            assert is_near_resonant(*triad, BandwidthSpec.constant(0.3))


def test_enumeration_matches_brute_force(stretched_geom):
    n = adjust((2, 1, 1), stretched_geom)
    spec = BandwidthSpec.constant(0.1)
    found = {w.n for w in enumerate_triads_for(n, spec)}
    expected = set()
    for k1 in range(-4, 5):
        for k2 in range(-4, 5):
            for k3 in range(-4, 5):
                k = (k1, k2, k3)
                m = tuple(-a - b for a, b in zip(n.n, k))
                if k == (0, 0, 0) or m == (0, 0, 0):
                    continue
                kw, mw = adjust(k, stretched_geom), adjust(m, stretched_geom)
                if kw.norm_sq_exact > n.norm_sq_exact or mw.norm_sq_exact > kw.norm_sq_exact:
                    continue
                if is_near_resonant(n, kw, mw, spec):
                    expected.add(k)
    assert found == expected


def test_exact_resonances_of_horizontal_wavevector(unit_geom):
    n = adjust((-8, 0, 0), unit_geom)
    for k in enumerate_triads_for(n, BandwidthSpec.zero()):
        if k.n[2] != 0:
            m = adjust(tuple(-a - b for a, b in zip(n.n, k.n)), unit_geom)
            assert k.norm_sq_exact == m.norm_sq_exact


def test_counts_do_not_depend_on_threads(unit_geom, theorem_spec):
    n = adjust((6, 2, 3), unit_geom)
    assert count_triads_for(n, theorem_spec, threads=1) == count_triads_for(n, theorem_spec, threads=3)


def test_ordering_none_needs_radius(unit_geom):
    n = adjust((1, 1, 1), unit_geom)
    with pytest.raises(ValidationError):
        enumerate_triads_for(n, BandwidthSpec.zero(), ordering='none')
    assert count_triads_for(n, BandwidthSpec.all_pass(), ordering='none', radius=2) == 25


def test_count_report(unit_geom):
    assert list(count_report([], BandwidthSpec.zero()).columns) == REPORT_COLUMNS
    table = count_report([(4, 0, 0), (8, 0, 0)], BandwidthSpec.zero(), unit_geom)
    assert list(table.columns) == REPORT_COLUMNS
    assert table['count'].iloc[0] == count_triads_for(adjust((4, 0, 0), unit_geom), BandwidthSpec.zero())
    c = fit_counting_constant(table)
    assert table['bound'].iloc[0] == pytest.approx(c * 4.0)
    assert table['ratio'].iloc[0] == pytest.approx(1.0)


def test_tie_margin_is_tiny():
    assert 0 < TIE_MARGIN < 1e-9


def test_membership_margin_is_configurable(unit_geom):
    n, k, m = _triad(unit_geom, (3, 0, 1), (0, 2, 1))
    gap = min_triplet(n, k, m)
    spec = BandwidthSpec.constant(gap - 1e-6)
    assert not is_near_resonant(n, k, m, spec)
    assert is_near_resonant(n, k, m, spec, margin=1e-5)


def test_wide_margin_admits_every_triad(unit_geom):
    n = adjust((4, 0, 3), unit_geom)
    everything = count_triads_for(n, BandwidthSpec.all_pass())
    assert count_triads_for(n, BandwidthSpec.zero()) < everything
    assert count_triads_for(n, BandwidthSpec.zero(), margin=1.5) == everything
    table = count_report([(4, 0, 3)], BandwidthSpec.zero(), unit_geom, margin=1.5)
    assert table['count'].tolist() == [everything]


@pytest.mark.slow
def test_counting_constant_carries_to_larger_wavevectors(unit_geom, theorem_spec):
    table = count_report([(16, 0, 0), (32, 0, 0), (64, 0, 0)], theorem_spec, unit_geom, threads=4)
    c = fit_counting_constant(table)
    assert (table['count'] <= 2.0 * c * table['norm']).all()
