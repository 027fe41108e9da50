"""Tests for per-mode Coriolis algebra"""

import math

import numpy as np
import pytest

from nearres.errors import DivergenceError, ValidationError, ZeroWaveVectorError
from nearres.helical import (
    HelicalSign,
    check_divergence,
    coriolis_apply,
    dispersion,
    helical_basis,
    helical_basis_many,
    helical_project,
    leray_project,
    wave_exponential,
    wave_exponential_many,
)
from nearres.lattice import adjust, mode_set

MODES = [(1, 2, 3), (0, 0, 3), (-2, 1, 0), (3, -1, -2)]


@pytest.fixture(params=MODES)
def wave(request, stretched_geom):
    return adjust(request.param, stretched_geom)


def test_leray_projection_is_idempotent_and_transverse(wave):
    v = np.array([1.0 + 2.0j, -0.5, 3.0j])
    p = leray_project(wave, v)
    assert abs(np.dot(wave.adjusted, p)) < 1e-12
    assert np.allclose(leray_project(wave, p), p)


def test_helical_basis_is_orthonormal(wave):
    basis = helical_basis(wave)
    plus, minus = basis[HelicalSign.PLUS], basis[HelicalSign.MINUS]
    assert np.vdot(plus, plus) == pytest.approx(1.0)
    assert np.vdot(minus, minus) == pytest.approx(1.0)
    assert abs(np.vdot(plus, minus)) < 1e-14
    assert abs(np.dot(wave.adjusted, plus)) < 1e-12


@pytest.mark.parametrize('sigma', [HelicalSign.PLUS, HelicalSign.MINUS])
def test_helical_vectors_are_coriolis_eigenvectors(wave, sigma):
    r = helical_basis(wave)[sigma]
    assert np.allclose(coriolis_apply(wave, r), 1j * dispersion(wave, sigma) * r, atol=1e-14)


@pytest.mark.parametrize('sigma', [HelicalSign.PLUS, HelicalSign.MINUS])
def test_wave_exponential_acts_as_phase(wave, sigma):
    r = helical_basis(wave)[sigma]
    tau = 0.7
    expected = np.exp(1j * tau * dispersion(wave, sigma)) * r
    assert np.allclose(wave_exponential(wave, tau, r), expected, atol=1e-14)


def test_helical_projections_sum_to_identity_on_transverse_vectors(wave):
    v = leray_project(wave, np.array([0.3, -1.0 + 1.0j, 2.0]))
    total = helical_project(wave, '+', v) + helical_project(wave, '-', v)
    assert np.allclose(total, v, atol=1e-13)


def test_wave_exponential_preserves_length_and_inverts(wave):
    v = leray_project(wave, np.array([1.0, 2.0j, -1.0]))
    w = wave_exponential(wave, 2.5, v)
    assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v))
    assert np.allclose(wave_exponential(wave, -2.5, w), v, atol=1e-13)


def test_vectorised_forms_match_per_mode(stretched_geom):
    modes = mode_set(stretched_geom, 3)
    rng = np.random.default_rng(4)
    v = rng.standard_normal((len(modes), 3)) + 1j * rng.standard_normal((len(modes), 3))
    out = wave_exponential_many(modes.adjusted, modes.norms, 1.3, v)
    plus, _ = helical_basis_many(modes.adjusted, modes.norms)
    for i in (0, 7, len(modes) - 1):
        w = adjust(modes.ints[i], stretched_geom)
        assert np.allclose(out[i], wave_exponential(w, 1.3, v[i]))
        assert np.allclose(plus[i], helical_basis(w)[HelicalSign.PLUS])


def test_zero_time_exponential_is_a_copy(stretched_geom):
    modes = mode_set(stretched_geom, 3)
    v = np.ones((len(modes), 3), dtype=complex)
    out = wave_exponential_many(modes.adjusted, modes.norms, 0.0, v)
    assert np.array_equal(out, v) and out is not v


def test_divergent_input_rejected(unit_geom):
    n = adjust((1, 0, 0), unit_geom)
    with pytest.raises(DivergenceError):
        check_divergence(n, [1.0, 0.0, 0.0])
    with pytest.raises(DivergenceError):
        coriolis_apply(n, [1.0, 1.0, 0.0])


def test_bad_inputs(unit_geom):
    with pytest.raises(ValidationError):
        HelicalSign.parse('x')
    with pytest.raises(ZeroWaveVectorError):
        helical_basis(adjust((0, 0, 0), unit_geom))
    with pytest.raises(ValidationError):
        leray_project(adjust((1, 0, 0), unit_geom), [1.0, 2.0])


def test_dispersion_of_vertical_mode(unit_geom):
    assert dispersion(adjust((0, 0, 2), unit_geom), '-') == -1.0
    assert dispersion(adjust((3, 4, 0), unit_geom), '+') == 0.0
    assert math.isclose(dispersion(adjust((0, 3, 4), unit_geom), '+'), 0.8)
