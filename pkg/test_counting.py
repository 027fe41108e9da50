"""Tests for exact lattice counts, the lower-bound constructions and the planar checks"""

import math

import numpy as np
import pytest

from nearres.counting import (
    JORDAN_COLUMNS,
    SLICE_COLUMNS,
    CountInterval,
    CurveFamily,
    Ellipse,
    aspect_ratio_sweep,
    count_sublevel_integers,
    fit_slice_constants,
    jordan_count_check,
    jordan_trials,
    lower_bound_fast_fast,
    lower_bound_slow_fast,
    lower_bound_table,
    planar_slice_check,
    random_disjoint_family,
    slice_table,
    slow_fast_scaling,
    sublevel_count_table,
)
from nearres.errors import ResourceLimitError, ValidationError
from nearres.lattice import adjust
from nearres.resonance import TIE_MARGIN, BandwidthSpec, count_triads_for
from nearres.sublevel import SublevelProblem, f_value


def test_count_interval_arithmetic():
    total = CountInterval(3, 5) + CountInterval(1, 1)
    assert total == CountInterval(4, 6)
    assert total.ties == 2


def test_sublevel_count_edges():
    assert count_sublevel_integers(SublevelProblem.build((1, 1, 1), delta=-0.1, strict=False)) == CountInterval(0, 0)
    with pytest.raises(ResourceLimitError):
        count_sublevel_integers(SublevelProblem.build((300, 0, 0)))


def test_sublevel_counts_cover_n0_triads(unit_geom):
    n = adjust((3, 2, 4), unit_geom)
    delta = 0.1
    total = CountInterval(0, 0)
    for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        total = total + count_sublevel_integers(SublevelProblem(n, s1, s2, delta), threads=2)
    assert total.relaxed >= count_triads_for(n, BandwidthSpec.constant(delta))


def test_sublevel_count_table(stretched_geom):
    table = sublevel_count_table((2, 1, 3), 0.1, stretched_geom, samples=20_000, seed=1)
    assert len(table) == 4
    assert (table['count_strict'] <= table['count_relaxed']).all()
    assert (table['bound'] > 0).all()


@pytest.mark.parametrize('big_n,delta,expected', [(4, 0, 72), (16, '0.01', 1056), (32, '0.01', 4810)])
def test_slow_fast_construction(big_n, delta, expected):
    result = lower_bound_slow_fast(big_n, delta)
    assert result.exact_count == expected
    assert result.reference == expected
    assert len(result.points) == expected


def test_slow_fast_grows_like_its_scaling():
    small, large = lower_bound_slow_fast(16, '0.01'), lower_bound_slow_fast(32, '0.01')
    ratio = large.exact_count / small.exact_count
    scaling_ratio = slow_fast_scaling(32, 0.01) / slow_fast_scaling(16, 0.01)
    assert 0.5 * scaling_ratio < ratio < 2.0 * scaling_ratio


@pytest.mark.parametrize('big_n,expected', [(16, 38), (32, 816)])
def test_fast_fast_construction(big_n, expected):
    result = lower_bound_fast_fast(big_n, '0.01')
    assert result.exact_count == expected
    assert result.extras['flat_max'] <= TIE_MARGIN
    assert result.extras['sharp_min'] >= -TIE_MARGIN
    assert result.reference > 0


def test_construction_arguments():
    with pytest.raises(ValidationError):
        lower_bound_slow_fast(3, '0.01')
    with pytest.raises(ValidationError):
        lower_bound_slow_fast(8, '0.5')
    with pytest.raises(ValidationError):
        lower_bound_fast_fast(8, '0.001')
    with pytest.raises(ValidationError):
        lower_bound_table('sideways', [8], ['0.01'])


def test_lower_bound_table():
    table = lower_bound_table('slow-fast', [4, 8], ['0', '0.01'])
    assert list(table.columns) == ['variant', 'N', 'delta', 'exact_count', 'reference', 'scaling', 'matches']
    assert len(table) == 4
    assert table['matches'].all()


def test_single_circle_family():
    report = jordan_count_check(CurveFamily((Ellipse(0, 0, '0.4', '0.4'),)))
    assert report.lattice_count == 1
    assert report.exceptional == 0
    assert report.holds


def test_tiny_circle_needs_the_exceptional_set():
    report = jordan_count_check(CurveFamily((Ellipse(0, 0, '0.05', '0.05'),)))
    assert report.lattice_count == 1
    assert report.area + report.length < 1
    assert report.exceptional == 1
    assert report.holds


def test_annulus_family():
    family = CurveFamily.tagged([Ellipse(0, 0, '20.5', '20.5'), Ellipse(0, 0, '10.5', '10.5')])
    assert [e.interior for e in family.curves] == [True, False]
    report = jordan_count_check(family)
    assert report.area == pytest.approx(math.pi * (20.5 ** 2 - 10.5 ** 2))
    assert report.holds
    expected = sum(1 for x in range(-21, 22) for y in range(-21, 22) if 10.5 ** 2 <= x * x + y * y <= 20.5 ** 2)
    assert report.lattice_count == expected


def test_family_validation():
    with pytest.raises(ValidationError):
        CurveFamily((Ellipse(0, 0, 5, 5), Ellipse(0, 0, 2, 2)))
    with pytest.raises(ValidationError):
        CurveFamily((Ellipse(0, 0, 2, 2), Ellipse(1, 0, 2, 2)))
    with pytest.raises(ValidationError):
        Ellipse(0, 0, 0, 1)


def test_random_families_are_disjoint():
    rng = np.random.default_rng(8)
    for _ in range(20):
        family = random_disjoint_family(rng, size=5, adversarial=True)
        assert len(family.curves) >= 1
        assert family.length > 0


def test_jordan_trials():
    table = jordan_trials(60, seed=1, adversarial_share=0.1)
    assert list(table.columns) == JORDAN_COLUMNS
    assert int(table['adversarial'].sum()) == 6
    assert table['holds'].all()


def test_planar_hypothesis():
    with pytest.raises(ValidationError):
        planar_slice_check((0, 312, 25), '-12.5', 0.1)
    with pytest.raises(ValidationError):
        planar_slice_check((0, 0, 8), 0, 0.1)
    with pytest.raises(ValidationError):
        planar_slice_check((0, 0, 8), 8, 0.1)


def test_slice_count_matches_brute_force():
    report = planar_slice_check((0, 0, 8), -3, 0.1, samples=20_000, seed=1)
    prob = SublevelProblem.build((0, 0, 8), delta=0.1)
    strict = relaxed = 0
    for k1 in range(-8, 9):
        for k2 in range(-8, 9):
            s = k1 * k1 + k2 * k2 + 9
            if not 16 <= s <= 64:
                continue
            value = abs(f_value(prob, (k1, k2, -3)))
            strict += value <= 0.1 - TIE_MARGIN
            relaxed += value <= 0.1 + TIE_MARGIN
    assert report.count == CountInterval(strict, relaxed)
    assert report.scale == pytest.approx(2.0 * math.sqrt(55.0))


def test_empty_band_has_no_area():
    report = planar_slice_check((0, 0, 8), -3, 0.0, samples=20_000, seed=1)
    assert report.area == 0.0


def test_fitted_constants_bound_every_slice(stretched_geom):
    reports = [planar_slice_check((1, 2, 8), k3, 0.1, samples=20_000, seed=2, geom=stretched_geom)
               for k3 in (-3, -2, 2, 3)]
    c, c_prime = fit_slice_constants(reports)
    assert c >= 0 and c_prime == 1.0
    for r in reports:
        assert r.count.relaxed <= r.bound(c, c_prime) + 1e-9
    table = slice_table(reports)
    assert list(table.columns) == SLICE_COLUMNS
    assert len(table) == 4


@pytest.mark.slow
def test_aspect_ratio_sweep():
    table = aspect_ratio_sweep((0, 0, 8), [-3, -2, 2, 3], 0.1, samples=50_000, seed=3)
    assert len(table) == 3
    assert np.isfinite(table['c']).all()


@pytest.mark.slow
def test_jordan_trials_at_full_size():
    table = jordan_trials(1000, seed=5, adversarial_share=0.05)
    assert len(table) == 1000
    adversarial = table[table['adversarial']]
    assert len(adversarial) == 50
    assert (adversarial['exceptional'] > 0).sum() >= 25
    assert table['holds'].all()
