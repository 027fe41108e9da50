"""
Galerkin-truncated advection B(U, V) = P(U·∇V), its near-resonant
restriction B̃, the transformed forms B̃(τ; u, v) and trilinear pairings.

Sums are direct over convolution triads p = k + m inside the truncation
ball, so there is no aliasing. Triads are tabulated once per
(geometry, R, bandwidth spec) and reused.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import DivergenceError, ValidationError
from .field import SpectralField, hs_norm, random_field, rotate
from .helical import DIVERGENCE_TOL, helical_basis_many, leray_project_many
from .lattice import DEFAULT_MAX_MODES, ModeSet, Number, TorusGeometry, as_fraction, mode_set, torus_volume
from .resonance import BandwidthMode, BandwidthSpec, membership_many

logger = logging.getLogger(__name__)

_PAIR_BUDGET = 2_000_000


@dataclass(frozen=True)
class TriadTable:
    """Active triads (p, k, m) with p = k + m, sorted by p then k"""
    p: np.ndarray
    k: np.ndarray
    m: np.ndarray
    total: int
    spec: BandwidthSpec

    @property
    def active(self) -> int:
        return int(len(self.p))


def _build_table(modes: ModeSet, spec: BandwidthSpec) -> TriadTable:
    size = len(modes)
    ratios = modes.adjusted[:, 2] / modes.norms if size else np.zeros(0)
    chunk = max(1, _PAIR_BUDGET // max(size, 1))
    ps, ks, ms = [], [], []
    total = 0
    all_m = np.arange(size)
    for start in range(0, size, chunk):
        kk = np.arange(start, min(size, start + chunk))
        sums = (modes.ints[kk][:, None, :] + modes.ints[None, :, :]).reshape(-1, 3)
        p_idx, found = modes.lookup(sums)
        k_idx = np.repeat(kk, size)[found]
        m_idx = np.tile(all_m, len(kk))[found]
        p_idx = p_idx[found]
        total += len(p_idx)
        n_max = np.maximum(np.maximum(modes.norms[p_idx], modes.norms[k_idx]), modes.norms[m_idx])
        # indicator 1(−p, k, m): the ratio of −p is minus that of p
        keep = membership_many(-ratios[p_idx], ratios[k_idx], ratios[m_idx], n_max, spec)
        ps.append(p_idx[keep])
        ks.append(k_idx[keep])
        ms.append(m_idx[keep])
    p = np.concatenate(ps).astype(np.int32) if ps else np.zeros(0, dtype=np.int32)
    k = np.concatenate(ks).astype(np.int32) if ks else np.zeros(0, dtype=np.int32)
    m = np.concatenate(ms).astype(np.int32) if ms else np.zeros(0, dtype=np.int32)
    order = np.argsort(p, kind='stable')
    p, k, m = p[order], k[order], m[order]
    for arr in (p, k, m):
        arr.setflags(write=False)
    return TriadTable(p, k, m, total, spec)


@lru_cache(maxsize=8)
def triad_table(geom: TorusGeometry, radius: Number, spec: BandwidthSpec,
                max_modes: int = DEFAULT_MAX_MODES) -> TriadTable:
    modes = mode_set(geom, as_fraction(radius), max_modes)
    table = _build_table(modes, spec)
    logger.info(
        f"triad table R={modes.radius} mode={spec.mode.value}: {table.active}/{table.total} triads active"
    )
    return table


def table_for(field: SpectralField, spec: BandwidthSpec) -> TriadTable:
    return triad_table(field.geom, field.radius, spec)


def _accumulate(size: int, p: np.ndarray, contrib: np.ndarray) -> np.ndarray:
    out = np.empty((size, 3), dtype=complex)
    for c in range(3):
        out[:, c] = np.bincount(p, weights=contrib[:, c].real, minlength=size)
        out[:, c] += 1j * np.bincount(p, weights=contrib[:, c].imag, minlength=size)
    return out


def convolve(modes: ModeSet, table: TriadTable, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unprojected Σ_{k+m=p} i(u_k·m̌)v_m over the table's triads"""
    if table.active == 0:
        return np.zeros((len(modes), 3), dtype=complex)
    m_adj = modes.adjusted[table.m]
    uk = u[table.k]
    a = 1j * (uk[:, 0] * m_adj[:, 0] + uk[:, 1] * m_adj[:, 1] + uk[:, 2] * m_adj[:, 2])
    return _accumulate(len(modes), table.p, a[:, None] * v[table.m])


def bilinear_coeffs(modes: ModeSet, table: TriadTable, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return leray_project_many(modes.adjusted, convolve(modes, table, u, v))


def bilinear(u: SpectralField, v: SpectralField, spec: BandwidthSpec) -> SpectralField:
    """B̃(U, V); with the all_pass spec this is the full truncated B(U, V)"""
    u.require_compatible(v)
    table = table_for(u, spec)
    return u.with_coeffs(bilinear_coeffs(u.modes, table, u.coeffs, v.coeffs))


def bilinear_transformed(tau: float, u: SpectralField, v: SpectralField, spec: BandwidthSpec) -> SpectralField:
    """B̃(τ; u, v) = e^{−τℒ} B̃(e^{τℒ}u, e^{τℒ}v)"""
    if tau == 0.0:
        return bilinear(u, v, spec)
    return rotate(bilinear(rotate(u, tau), rotate(v, tau), spec), -tau)


def bilinear_helical(tau: float, u: SpectralField, v: SpectralField, spec: BandwidthSpec) -> SpectralField:
    """
    B̃(τ; u, v) through the helical eigen-expansion: every sign triple
    contributes 𝒫^{σ₁}B(𝒫^{σ₂}u, 𝒫^{σ₃}v) with phase e^{iω^σ⃗τ}.
    """
    u.require_compatible(v)
    modes = u.modes
    table = table_for(u, spec)
    r_plus, r_minus = helical_basis_many(modes.adjusted, modes.norms)
    ratios = modes.adjusted[:, 2] / modes.norms
    bases = {1: r_plus, -1: r_minus}
    inner = np.zeros((len(modes), 3), dtype=complex)
    for s2, rk in bases.items():
        u_s = np.sum(np.conj(rk) * u.coeffs, axis=1)[:, None] * rk
        for s3, rm in bases.items():
            v_s = np.sum(np.conj(rm) * v.coeffs, axis=1)[:, None] * rm
            if table.active == 0:
                continue
            m_adj = modes.adjusted[table.m]
            uk = u_s[table.k]
            a = 1j * (uk[:, 0] * m_adj[:, 0] + uk[:, 1] * m_adj[:, 1] + uk[:, 2] * m_adj[:, 2])
            phase = np.exp(1j * tau * (s2 * ratios[table.k] + s3 * ratios[table.m]))
            inner += _accumulate(len(modes), table.p, (a * phase)[:, None] * v_s[table.m])
    out = np.zeros_like(inner)
    for s1, rp in bases.items():
        # output mode p = −n carries ω_n^{σ₁} = −σ₁p̌₃/|p̌|
        phase = np.exp(-1j * tau * s1 * ratios)
        out += (phase * np.sum(np.conj(rp) * inner, axis=1))[:, None] * rp
    return u.with_coeffs(out)


def trilinear(u: SpectralField, v: SpectralField, w: SpectralField, s: float, spec: BandwidthSpec) -> float:
    """⟨D^s B̃(u, v), D^s w⟩ = |𝕋³| Σ |p̌|^{2s} i(u_k·m̌)(v_m·conj(w_p)) over active triads"""
    u.require_compatible(v)
    u.require_compatible(w)
    residual = w.divergence_residual()
    if residual > DIVERGENCE_TOL:
        raise DivergenceError(f"test field w is not divergence-free: residual {residual:.3e}")
    table = table_for(u, spec)
    if table.active == 0:
        return 0.0
    modes = u.modes
    m_adj = modes.adjusted[table.m]
    uk = u.coeffs[table.k]
    a = 1j * (uk[:, 0] * m_adj[:, 0] + uk[:, 1] * m_adj[:, 1] + uk[:, 2] * m_adj[:, 2])
    vm = v.coeffs[table.m]
    wp = np.conj(w.coeffs[table.p])
    pair = vm[:, 0] * wp[:, 0] + vm[:, 1] * wp[:, 1] + vm[:, 2] * wp[:, 2]
    weights = modes.norms[table.p] ** (2.0 * s)
    return float(torus_volume(u.geom) * np.sum(weights * a * pair).real)


def estimate_rhs_2d(u: SpectralField, v: SpectralField, w: SpectralField, s: float) -> float:
    """
    2^s(‖u‖₀‖v‖_{s+1} + ‖u‖_s‖v‖₁)‖w‖_{s+1}
      + 2^s(‖u‖₁‖v‖_{s+1} + ‖u‖_{s+1}‖v‖₁)‖w‖_s
    """
    h = hs_norm
    first = (h(u, 0) * h(v, s + 1) + h(u, s) * h(v, 1)) * h(w, s + 1)
    second = (h(u, 1) * h(v, s + 1) + h(u, s + 1) * h(v, 1)) * h(w, s)
    return 2.0 ** s * (first + second)


def estimate_rhs_commutator(u: SpectralField, w: SpectralField, s: float) -> float:
    h = hs_norm
    if s <= 0:
        raise ValidationError(f"the identical-argument estimate needs s > 0, got {s}")
    if s <= 1:
        return s * h(u, 1) * h(w, s) * h(w, s + 1)
    return s * 2.0 ** s * (
        h(u, 1) * h(w, s) * h(w, s + 1) + h(u, s) * h(w, 1) * h(w, s + 1) + h(u, s + 1) * h(w, 1) * h(w, s)
    )


def _ratio(numerator: float, denominator: float) -> float:
    if denominator > 0:
        return numerator / denominator
    if numerator == 0:
        return 0.0
    raise ValidationError("estimate denominator vanishes for a nonzero pairing")


def _warn_unless_theorem(spec: BandwidthSpec) -> None:
    if spec.mode is not BandwidthMode.THEOREM:
        logger.warning(f"2D-like estimates are stated for theorem-mode bandwidths, got {spec.mode.value}")


def estimate_ratio_2d(u: SpectralField, v: SpectralField, w: SpectralField, s: float,
                      spec: BandwidthSpec) -> float:
    """|⟨D^s B̃(u, v), D^s w⟩| over the 2D-like right side with unit constant"""
    if not (np.any(u.coeffs) or np.any(v.coeffs) or np.any(w.coeffs)):
        raise ValidationError("estimate ratio is undefined for all-zero fields")
    _warn_unless_theorem(spec)
    return _ratio(abs(trilinear(u, v, w, s, spec)), estimate_rhs_2d(u, v, w, s))


def estimate_ratio_commutator(u: SpectralField, w: SpectralField, s: float,
                              spec: BandwidthSpec) -> float:
    """|⟨D^s B̃(u, w), D^s w⟩| over the identical-argument right side"""
    if not (np.any(u.coeffs) or np.any(w.coeffs)):
        raise ValidationError("estimate ratio is undefined for all-zero fields")
    _warn_unless_theorem(spec)
    return _ratio(abs(trilinear(u, w, w, s, spec)), estimate_rhs_commutator(u, w, s))


def estimate_sweep(geom: TorusGeometry, radius: Number, s: float, spec: BandwidthSpec, trials: int,
                   seed: Optional[int] = None, smoothness: float = 1.0):
    """Ratios of the 2D-like estimate over random field triples"""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        seeds = rng.integers(0, 2 ** 63 - 1, size=3)
        u, v, w = (random_field(geom, radius, smoothness, seed=int(x)) for x in seeds)
        ratios.append(estimate_ratio_2d(u, v, w, s, spec))
    return np.array(ratios)
