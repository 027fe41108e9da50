"""
Per-mode linear algebra on ℂ³: Leray projection, the Coriolis symbol,
its helical eigenbasis and the wave exponential e^{τℒ}.

Every operation comes twice: a per-mode form taking a WaveVector and a
vectorised `*_many` form taking (M, 3) arrays of adjusted wavevectors,
which is what fields and the solver use.
"""

import math
from enum import IntEnum
from typing import Dict, Tuple

import numpy as np

from .errors import DivergenceError, ValidationError
from .lattice import WaveVector

DIVERGENCE_TOL = 1e-10
_SQRT_HALF = 1.0 / math.sqrt(2.0)


class HelicalSign(IntEnum):
    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, value) -> 'HelicalSign':
        if isinstance(value, HelicalSign):
            return value
        if value in ('+', 1, '1', '+1', 'plus'):
            return cls.PLUS
        if value in ('-', -1, '-1', 'minus'):
            return cls.MINUS
        raise ValidationError(f"helical sign must be + or -, got {value!r}")

    def __str__(self) -> str:
        return '+' if self is HelicalSign.PLUS else '-'


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.shape != (3,):
        raise ValidationError(f"expected a 3-component vector, got shape {arr.shape}")
    return arr


def _axis(n: WaveVector) -> np.ndarray:
    n.require_nonzero()
    return np.array(n.adjusted, dtype=float)


def check_divergence(n: WaveVector, v, tol: float = DIVERGENCE_TOL) -> None:
    k = _axis(n)
    v = _as_vector(v)
    residual = abs(k @ v)
    if residual > tol * n.norm * np.linalg.norm(v):
        raise DivergenceError(
            f"mode {n.n}: |ň·v| = {residual:.3e} exceeds {tol:g}·|ň||v|"
        )


def leray_project(n: WaveVector, v) -> np.ndarray:
    """v − ň(ň·v)/|ň|²"""
    k = _axis(n)
    v = _as_vector(v)
    return v - k * ((k @ v) / (k @ k))


def coriolis_apply(n: WaveVector, v, tol: float = DIVERGENCE_TOL) -> np.ndarray:
    """Symbol of ℒ on divergence-free input: (ň₃/|ň|²)(ň × v)"""
    check_divergence(n, v, tol)
    k = _axis(n)
    return (k[2] / (k @ k)) * np.cross(k, _as_vector(v))


def dispersion(n: WaveVector, sigma: HelicalSign) -> float:
    """ω_n^σ = σň₃/|ň|"""
    n.require_nonzero()
    return int(HelicalSign.parse(sigma)) * n.adjusted[2] / n.norm


def helical_basis(n: WaveVector) -> Dict[HelicalSign, np.ndarray]:
    """
    Orthonormal eigenvectors r^± of the Coriolis symbol.

    r̃ = (ň×ẑ)/|ň×ẑ| off the polar axis and x̂ on it, r̃̃ = (ň/|ň|)×r̃,
    r^∓ = (r̃ ± i r̃̃)/√2, so (ň/|ň|)×r^σ = iσ r^σ.
    """
    k = _axis(n)
    e = k / n.norm
    if k[0] == 0.0 and k[1] == 0.0:
        r1 = np.array([1.0, 0.0, 0.0])
    else:
        r1 = np.array([k[1], -k[0], 0.0])
        r1 /= np.linalg.norm(r1)
    r2 = np.cross(e, r1)
    return {
        HelicalSign.PLUS: _SQRT_HALF * (r1 - 1j * r2),
        HelicalSign.MINUS: _SQRT_HALF * (r1 + 1j * r2),
    }


def helical_project(n: WaveVector, sigma: HelicalSign, v) -> np.ndarray:
    """𝒫_n^σ v = (v·conj(r^σ)) r^σ"""
    r = helical_basis(n)[HelicalSign.parse(sigma)]
    return np.vdot(r, _as_vector(v)) * r


def wave_exponential(n: WaveVector, tau: float, v) -> np.ndarray:
    """e^{τℒ}v: rotation about ň/|ň| by the angle τň₃/|ň|"""
    k = _axis(n)
    v = _as_vector(v)
    e = k / n.norm
    theta = tau * k[2] / n.norm
    c, s = math.cos(theta), math.sin(theta)
    return v * c + np.cross(e, v) * s + e * ((e @ v) * (1.0 - c))


# -- vectorised forms over (M, 3) arrays ---------------------------------

def norms_of(adjusted: np.ndarray) -> np.ndarray:
    a = adjusted
    return np.sqrt(a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1] + a[:, 2] * a[:, 2])


def leray_project_many(adjusted: np.ndarray, v: np.ndarray) -> np.ndarray:
    a = adjusted
    nsq = a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1] + a[:, 2] * a[:, 2]
    dot = a[:, 0] * v[:, 0] + a[:, 1] * v[:, 1] + a[:, 2] * v[:, 2]
    return v - a * (dot / nsq)[:, None]


def divergence_residual_many(adjusted: np.ndarray, norms: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|ň·v|/(|ň||v|) per row, 0 where v vanishes"""
    a = adjusted
    dot = np.abs(a[:, 0] * v[:, 0] + a[:, 1] * v[:, 1] + a[:, 2] * v[:, 2])
    size = norms * np.sqrt(np.sum(np.abs(v) ** 2, axis=1))
    out = np.zeros(len(a))
    nz = size > 0
    out[nz] = dot[nz] / size[nz]
    return out


def coriolis_apply_many(adjusted: np.ndarray, v: np.ndarray) -> np.ndarray:
    a = adjusted
    nsq = a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1] + a[:, 2] * a[:, 2]
    return (a[:, 2] / nsq)[:, None] * np.cross(a, v)


def dispersion_many(adjusted: np.ndarray, norms: np.ndarray, sigma: int = 1) -> np.ndarray:
    return int(sigma) * adjusted[:, 2] / norms


def helical_basis_many(adjusted: np.ndarray, norms: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(r⁺, r⁻) rows for every wavevector, same convention as helical_basis"""
    e = adjusted / norms[:, None]
    r1 = np.stack([adjusted[:, 1], -adjusted[:, 0], np.zeros(len(adjusted))], axis=1)
    polar = (adjusted[:, 0] == 0.0) & (adjusted[:, 1] == 0.0)
    r1[polar] = (1.0, 0.0, 0.0)
    r1 /= np.linalg.norm(r1, axis=1)[:, None]
    r2 = np.cross(e, r1)
    return _SQRT_HALF * (r1 - 1j * r2), _SQRT_HALF * (r1 + 1j * r2)


def helical_amplitudes_many(adjusted: np.ndarray, norms: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficients (a⁺, a⁻) with v = a⁺r⁺ + a⁻r⁻ on divergence-free rows"""
    r_plus, r_minus = helical_basis_many(adjusted, norms)
    a_plus = np.sum(np.conj(r_plus) * v, axis=1)
    a_minus = np.sum(np.conj(r_minus) * v, axis=1)
    return a_plus, a_minus


def wave_exponential_many(adjusted: np.ndarray, norms: np.ndarray, tau: float, v: np.ndarray) -> np.ndarray:
    if tau == 0.0:
        return v.copy()
    e = adjusted / norms[:, None]
    theta = tau * adjusted[:, 2] / norms
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    ev = (e[:, 0] * v[:, 0] + e[:, 1] * v[:, 1] + e[:, 2] * v[:, 2])[:, None]
    return v * c + np.cross(e, v) * s + e * (ev * (1.0 - c))
