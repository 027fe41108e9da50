"""
Time integration of the truncated rotating Navier-Stokes system and its
near-resonant approximation.

Both systems are integrated in the rotating-wave variable u = e^{−Ωtℒ}U,
where the Coriolis term disappears and Ω only enters through the phases
of B̃(Ωt; u, u). The viscous term is handled exactly by an integrating
factor and the nonlinearity by classical RK4 (Lawson's scheme). The
dissipation integral 2μ∫‖∇u‖² rides along as an extra scalar on the same
RK stages so the energy balance can be checked to integrator accuracy.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .bilinear import bilinear_coeffs, triad_table
from .errors import BlowUpError, GeometryMismatchError, NonFiniteError, NumericalFailure, ValidationError
from .field import (
    SpectralField,
    from_transformed,
    hs_norm,
    hs_norm_sq,
    normalized,
    random_field,
)
from .helical import DIVERGENCE_TOL, wave_exponential_many
from .lattice import DEFAULT_MAX_MODES, TorusGeometry, as_fraction, mode_set, torus_volume
from .resonance import BandwidthSpec

logger = logging.getLogger(__name__)

# (tau, u) -> B̃(tau; u, u) coefficients
NonlinearTerm = Callable[[float, np.ndarray], np.ndarray]


class Integrator(str, Enum):
    IFRK4 = 'ifrk4'


class System(str, Enum):
    FULL = 'full'
    NR = 'nr'


@dataclass(frozen=True)
class SimConfig:
    geom: TorusGeometry = field(default_factory=TorusGeometry)
    radius: Fraction = Fraction(6)
    omega: float = 0.0
    mu: float = 0.01
    spec: BandwidthSpec = field(default_factory=BandwidthSpec)
    t_end: float = 1.0
    dt: float = 1e-3
    integrator: Integrator = Integrator.IFRK4
    seed: Optional[int] = None
    record_stride: int = 1
    hs_orders: Tuple[float, ...] = (2.0,)
    smoothness: float = 4.0
    amplitude: float = 1.0
    blowup_factor: float = 1e6
    reality_tol: float = 1e-10
    divergence_tol: float = DIVERGENCE_TOL
    max_modes: int = DEFAULT_MAX_MODES
    keep_snapshots: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'radius', as_fraction(self.radius))
        object.__setattr__(self, 'integrator', Integrator(self.integrator))
        object.__setattr__(self, 'hs_orders', tuple(float(s) for s in self.hs_orders))
        for name in ('omega', 'mu', 't_end', 'dt'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ValidationError(f"t_end must be nonnegative, got {self.t_end}")
        if self.radius < 2:
            raise ValidationError(f"truncation radius must be at least 2, got {self.radius}")
        if self.omega < 0:
            raise ValidationError(f"omega must be nonnegative, got {self.omega}")
        if self.mu < 0:
            raise ValidationError(f"mu must be nonnegative, got {self.mu}")
        if self.record_stride < 1:
            raise ValidationError(f"record_stride must be at least 1, got {self.record_stride}")
        if any(s < 0 for s in self.hs_orders):
            raise ValidationError("Sobolev orders must be nonnegative")
        if self.max_modes < 1:
            raise ValidationError(f"max_modes must be at least 1, got {self.max_modes}")
        if not self.reality_tol >= 0 or not self.divergence_tol >= 0:
            raise ValidationError("tolerances must be nonnegative")

    @property
    def n_steps(self) -> int:
        if self.t_end == 0:
            return 0
        return max(1, math.ceil(self.t_end / self.dt - 1e-9))

    def step_sizes(self) -> List[float]:
        n = self.n_steps
        if n == 0:
            return []
        last = self.t_end - (n - 1) * self.dt
        return [self.dt] * (n - 1) + [last]


def hs_column(s: float) -> str:
    return f"hs_sq_{s:g}"


@dataclass
class Trajectory:
    """Sampled solution U(t) with per-sample diagnostics"""
    times: List[float]
    snapshots: List[SpectralField]
    diagnostics: Dict[str, List[float]]
    mu: float
    system: System
    dissipation_on_grid: bool = True

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.diagnostics)
        frame.insert(0, 't', self.times)
        return frame

    @property
    def final(self) -> SpectralField:
        if not self.snapshots:
            raise ValidationError("trajectory was recorded without snapshots")
        return self.snapshots[-1]


class _Stepper:
    """Lawson integrating-factor RK4 for ∂_t u = −B̃(Ωt; u, u) + μΔu"""

    def __init__(self, cfg: SimConfig, spec: BandwidthSpec, nonlinear: Optional[NonlinearTerm] = None):
        self.cfg = cfg
        self.modes = mode_set(cfg.geom, cfg.radius, cfg.max_modes)
        self.decay = cfg.mu * self.modes.norms ** 2
        self.grad_weights = torus_volume(cfg.geom) * self.modes.norms ** 2
        self._factors: Dict[float, Tuple[np.ndarray, np.ndarray]] = {}
        if nonlinear is None:
            table = triad_table(cfg.geom, cfg.radius, spec, cfg.max_modes)
            nonlinear = self._make_nonlinear(table)
        self.nonlinear = nonlinear

    def _make_nonlinear(self, table) -> NonlinearTerm:
        modes = self.modes

        def term(tau: float, u: np.ndarray) -> np.ndarray:
            if tau == 0.0:
                return bilinear_coeffs(modes, table, u, u)
            rotated = wave_exponential_many(modes.adjusted, modes.norms, tau, u)
            out = bilinear_coeffs(modes, table, rotated, rotated)
            return wave_exponential_many(modes.adjusted, modes.norms, -tau, out)

        return term

    def factors(self, h: float) -> Tuple[np.ndarray, np.ndarray]:
        if h not in self._factors:
            self._factors[h] = (np.exp(-self.decay * h)[:, None], np.exp(-self.decay * h / 2)[:, None])
        return self._factors[h]

    def rhs(self, t: float, u: np.ndarray) -> np.ndarray:
        return -self.nonlinear(self.cfg.omega * t, u)

    def dissipation_rate(self, u: np.ndarray) -> float:
        """2μ‖∇u‖₀²"""
        return 2.0 * self.cfg.mu * float(np.sum(self.grad_weights * np.sum(np.abs(u) ** 2, axis=1)))

    def step(self, t: float, u: np.ndarray, h: float) -> Tuple[np.ndarray, float]:
        e_full, e_half = self.factors(h)
        k1 = self.rhs(t, u)
        u2 = e_half * (u + 0.5 * h * k1)
        k2 = self.rhs(t + 0.5 * h, u2)
        u3 = e_half * u + 0.5 * h * k2
        k3 = self.rhs(t + 0.5 * h, u3)
        u4 = e_full * u + h * (e_half * k3)
        k4 = self.rhs(t + h, u4)
        new = e_full * u + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
        d = (h / 6.0) * (
            self.dissipation_rate(u) + 2.0 * self.dissipation_rate(u2)
            + 2.0 * self.dissipation_rate(u3) + self.dissipation_rate(u4)
        )
        return new, d


def _check_finite(u: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(u)):
        logger.error(f"non-finite coefficients at t={t:.6g}")
        raise NonFiniteError(f"solution became non-finite at t={t:.6g}")


def step(u: SpectralField, t: float, dt: float, cfg: SimConfig, spec: Optional[BandwidthSpec] = None,
         nonlinear: Optional[NonlinearTerm] = None) -> SpectralField:
    """One IF-RK4 step of the transformed variable from t to t + dt"""
    _require_truncation(u, cfg)
    stepper = _Stepper(cfg, spec or cfg.spec, nonlinear)
    new, _ = stepper.step(t, u.coeffs, dt)
    _check_finite(new, t + dt)
    return u.with_coeffs(new)


def _require_truncation(u: SpectralField, cfg: SimConfig) -> None:
    if u.geom != cfg.geom or u.radius != cfg.radius:
        raise GeometryMismatchError(
            f"field truncation (R={u.radius}, L=({u.geom.l1},{u.geom.l2})) does not match the "
            f"configuration (R={cfg.radius}, L=({cfg.geom.l1},{cfg.geom.l2}))"
        )


def initial_field(cfg: SimConfig) -> SpectralField:
    """Seeded random data normalised to ‖U₀‖₀² = amplitude"""
    raw = random_field(cfg.geom, cfg.radius, cfg.smoothness, seed=cfg.seed, max_modes=cfg.max_modes)
    return normalized(raw, 0.0, cfg.amplitude)


def run(cfg: SimConfig, u0: SpectralField, system='nr', nonlinear: Optional[NonlinearTerm] = None) -> Trajectory:
    """
    Integrate from U₀ to t_end and sample every record_stride steps.

    system='full' uses the all-pass indicator (the truncated rotating
    Navier-Stokes equations); system='nr' uses the configured bandwidth.
    """
    system = System(system)
    _require_truncation(u0, cfg)
    u0.validate(reality_tol=cfg.reality_tol, divergence_tol=cfg.divergence_tol)
    spec = BandwidthSpec.all_pass() if system is System.FULL else cfg.spec
    stepper = _Stepper(cfg, spec, nonlinear)
    modes = stepper.modes
    neg = modes.neg

    columns = ['l2_sq', 'grad_sq'] + [hs_column(s) for s in cfg.hs_orders] + ['dissipation', 'energy_residual']
    diagnostics: Dict[str, List[float]] = {c: [] for c in columns}
    times: List[float] = []
    snapshots: List[SpectralField] = []
    l2_0 = hs_norm_sq(u0, 0.0)
    norm_0 = math.sqrt(l2_0)

    def record(t: float, u: np.ndarray, dissipation: float) -> None:
        field_u = u0.with_coeffs(u)
        l2 = hs_norm_sq(field_u, 0.0)
        diagnostics['l2_sq'].append(l2)
        diagnostics['grad_sq'].append(hs_norm_sq(field_u, 1.0))
        for s in cfg.hs_orders:
            diagnostics[hs_column(s)].append(hs_norm_sq(field_u, s))
        diagnostics['dissipation'].append(dissipation)
        diagnostics['energy_residual'].append(abs(l2 + dissipation - l2_0) / l2_0 if l2_0 > 0 else 0.0)
        times.append(t)
        if cfg.keep_snapshots:
            snapshots.append(from_transformed(field_u, cfg.omega, t))

    logger.info(
        f"run system={system.value} R={cfg.radius} M={len(modes)} omega={cfg.omega:g} mu={cfg.mu:g} "
        f"dt={cfg.dt:g} t_end={cfg.t_end:g}"
    )
    u = u0.coeffs.copy()
    dissipation = 0.0
    record(0.0, u, dissipation)
    sizes = cfg.step_sizes()
    t = 0.0
    for i, h in enumerate(sizes, start=1):
        u, d = stepper.step(t, u, h)
        u = 0.5 * (u + np.conj(u[neg]))
        dissipation += d
        t = cfg.t_end if i == len(sizes) else i * cfg.dt
        _check_finite(u, t)
        if norm_0 > 0:
            ratio = math.sqrt(float(np.sum(np.abs(u) ** 2)) * torus_volume(cfg.geom)) / norm_0
            if ratio > cfg.blowup_factor:
                logger.error(f"{system.value} run blew up at t={t:.6g}: norm grew by {ratio:.3e}")
                raise BlowUpError(f"norm grew by {ratio:.3e} before t={t:.6g}", time=t, ratio=ratio)
        if i % cfg.record_stride == 0 or i == len(sizes):
            current = u0.with_coeffs(u)
            if current.divergence_residual() > cfg.divergence_tol:
                raise NumericalFailure(f"divergence constraint lost at t={t:.6g}")
            record(t, u, dissipation)
    logger.info(f"run finished: {len(times)} samples, final energy residual {diagnostics['energy_residual'][-1]:.3e}")
    return Trajectory(times, snapshots, diagnostics, cfg.mu, system)


def energy_report(traj: Trajectory) -> pd.DataFrame:
    """‖U(T)‖₀² + 2μ∫₀ᵀ‖∇U‖₀² against ‖U₀‖₀² per sample"""
    l2 = np.asarray(traj.diagnostics['l2_sq'], dtype=float)
    times = np.asarray(traj.times, dtype=float)
    if traj.dissipation_on_grid and 'dissipation' in traj.diagnostics:
        dissipation = np.asarray(traj.diagnostics['dissipation'], dtype=float)
    else:
        grad = np.asarray(traj.diagnostics['grad_sq'], dtype=float)
        increments = 0.5 * (grad[1:] + grad[:-1]) * np.diff(times) * 2.0 * traj.mu
        dissipation = np.concatenate([[0.0], np.cumsum(increments)])
    left = l2 + dissipation
    right = np.full_like(left, l2[0] if len(l2) else 0.0)
    residual = np.where(right > 0, np.abs(left - right) / np.where(right > 0, right, 1.0), 0.0)
    return pd.DataFrame({'T': times, 'left_side': left, 'right_side': right, 'residual': residual})


def fit_global_bound(traj: Trajectory, s: float) -> float:
    """Smallest Ĉ ≥ 0 with max_t ‖U‖_s² ≤ exp(Ĉ E₀₀/μ²) E_s0"""
    if not traj.snapshots:
        raise ValidationError("global bound needs snapshots")
    values = [hs_norm_sq(f, s) for f in traj.snapshots]
    e_s0, e_00 = values[0], hs_norm_sq(traj.snapshots[0], 0.0)
    if e_s0 == 0 or e_00 == 0:
        return 0.0
    growth = max(values) / e_s0
    if growth <= 1.0:
        return 0.0
    return traj.mu ** 2 * math.log(growth) / e_00


def check_global_bound(traj: Trajectory, s: float, c_hat: float, slack: float = 1e-9) -> bool:
    """Both global bounds: the sup of ‖U‖_s² and μ∫‖U‖_{s+1}² (trapezoid)"""
    values = np.array([hs_norm_sq(f, s) for f in traj.snapshots])
    e_s0, e_00 = values[0], hs_norm_sq(traj.snapshots[0], 0.0)
    growth = math.exp(c_hat * e_00 / traj.mu ** 2) if traj.mu > 0 else math.inf
    sup_ok = values.max() <= growth * e_s0 * (1 + slack) + slack
    upper = np.array([hs_norm_sq(f, s + 1) for f in traj.snapshots])
    integral = traj.mu * float(np.sum(0.5 * (upper[1:] + upper[:-1]) * np.diff(traj.times)))
    integral_bound = e_s0 + (c_hat * e_00 / traj.mu ** 2 if traj.mu > 0 else math.inf) * growth * e_s0
    return bool(sup_ok and integral <= integral_bound * (1 + slack) + slack)


# -- Ω scans -------------------------------------------------------------------

SCAN_COLUMNS = ['omega', 'sup_error', 'status', 'slope']


def _sup_error(cfg: SimConfig, u0: SpectralField, s_prime: float) -> Tuple[float, str]:
    try:
        full = run(cfg, u0, System.FULL)
    except BlowUpError as e:
        logger.warning(f"omega={cfg.omega:g}: full system blew up at t={e.time:.4g}")
        return math.nan, 'blowup'
    nr = run(cfg, u0, System.NR)
    errors = [hs_norm(a - b, s_prime) for a, b in zip(full.snapshots, nr.snapshots)]
    return max(errors), 'ok'


def fit_slope(omegas: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(Ω) over usable rows"""
    pts = [(math.log(o), math.log(e)) for o, e in zip(omegas, errors)
           if o > 0 and e is not None and math.isfinite(e) and e > 0]
    if len(pts) < 2:
        return math.nan
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def error_scan(cfg_base: SimConfig, omegas: Sequence[float], s_prime: float = 0.0,
               u0: Optional[SpectralField] = None, threads: int = 1) -> pd.DataFrame:
    """sup_t ‖U − Ũ‖_{s'} between full and NR runs from identical data, per Ω"""
    if u0 is None:
        u0 = initial_field(cfg_base)
    cfg_base = replace(cfg_base, keep_snapshots=True)
    configs = [replace(cfg_base, omega=float(o)) for o in omegas]

    def work(cfg):
        return _sup_error(cfg, u0, s_prime)

    if threads > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(work, configs))
    else:
        results = [work(cfg) for cfg in configs]

    table = pd.DataFrame({
        'omega': [c.omega for c in configs],
        'sup_error': [r[0] for r in results],
        'status': [r[1] for r in results],
    })
    table['slope'] = fit_slope(table['omega'].tolist(), table['sup_error'].tolist())
    return table[SCAN_COLUMNS]
