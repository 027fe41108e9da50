"""Tests for torus geometry and mode enumeration"""

from fractions import Fraction

import numpy as np
import pytest

from nearres.errors import ResourceLimitError, ValidationError, ZeroWaveVectorError
from nearres.lattice import (
    TorusGeometry,
    adjust,
    annulus_index,
    as_fraction,
    box_half_widths,
    mode_set,
    modes_in_ball,
    torus_volume,
)


def test_as_fraction_reads_decimal_text_exactly():
    assert as_fraction('1.1') == Fraction(11, 10)
    assert as_fraction(0.1) == Fraction(1, 10)
    assert as_fraction('1e-3') == Fraction(1, 1000)
    assert as_fraction(3) == 3


@pytest.mark.parametrize('bad', ['abc', True, None, float('nan')])
def test_as_fraction_rejects_non_numbers(bad):
    with pytest.raises(ValidationError):
        as_fraction(bad)


def test_geometry_rejects_nonpositive_aspect_ratio():
    with pytest.raises(ValidationError):
        TorusGeometry(0, 1)
    with pytest.raises(ValidationError):
        TorusGeometry('1', '-2')


def test_adjusted_wavevector():
    w = adjust((2, 3, 4), TorusGeometry('2', '1'))
    assert w.adjusted == (1.0, 3.0, 4.0)
    assert w.norm == pytest.approx(np.sqrt(26.0))


def test_exact_norm_on_stretched_torus(stretched_geom):
    assert adjust((11, 0, 0), stretched_geom).norm_sq_exact == 100
    assert adjust((0, 0, 0), stretched_geom).is_zero


def test_non_integer_components_rejected(unit_geom):
    with pytest.raises(ValidationError):
        adjust((0.5, 0, 1), unit_geom)
    with pytest.raises(ValidationError):
        adjust((1, 2), unit_geom)


def test_torus_volume():
    assert torus_volume(TorusGeometry('2', '1.5')) == pytest.approx((2 * np.pi) ** 3 * 3.0)


def test_ball_of_radius_two_has_26_modes(unit_geom):
    modes = modes_in_ball(2, unit_geom)
    assert len(modes) == 26
    assert all(0 < m.norm < 2 for m in modes)


def test_mode_set_is_lexicographic_and_closed_under_negation(stretched_geom):
    modes = mode_set(stretched_geom, 4)
    keys = [tuple(row) for row in modes.ints.tolist()]
    assert keys == sorted(keys)
    assert np.array_equal(modes.ints[modes.neg], -modes.ints)
    assert modes.index(keys[5]) == 5


def test_mode_set_ball_boundary_is_exact():
    modes = mode_set(TorusGeometry('1.1', '1'), 2)
    assert (0, 0, 2) not in {tuple(r) for r in modes.ints.tolist()}
    assert (2, 0, 0) in {tuple(r) for r in modes.ints.tolist()}


def test_mode_set_limits(unit_geom):
    with pytest.raises(ValidationError):
        mode_set(unit_geom, Fraction(1, 2))
    with pytest.raises(ResourceLimitError):
        mode_set(unit_geom, 100, 1000)


def test_box_half_widths():
    assert box_half_widths(Fraction(5), TorusGeometry('1.5', '1')) == (8, 5, 5)


def test_annulus_index(unit_geom):
    assert annulus_index(adjust((1, 0, 0), unit_geom)) == 1
    assert annulus_index(adjust((2, 0, 0), unit_geom)) == 2
    assert annulus_index(adjust((2, 2, 2), unit_geom)) == 2
    assert annulus_index(adjust((4, 0, 0), unit_geom)) == 3
    with pytest.raises(ZeroWaveVectorError):
        annulus_index(adjust((0, 0, 0), unit_geom))
