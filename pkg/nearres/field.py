"""
Truncated spectral velocity fields.

A SpectralField stores one complex 3-vector per mode of a ModeSet, in
the mode set's lexicographic order. Fields are immutable values: every
transformation returns a new field.
"""

import logging
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DivergenceError, GeometryMismatchError, NumericalFailure, ValidationError
from .helical import (
    DIVERGENCE_TOL,
    divergence_residual_many,
    helical_amplitudes_many,
    leray_project_many,
    wave_exponential_many,
)
from .lattice import DEFAULT_MAX_MODES, ModeSet, Number, TorusGeometry, mode_set, torus_volume

logger = logging.getLogger(__name__)

REALITY_TOL = 1e-12


class SpectralField:
    """Fourier coefficients u_n for 0 < |ň| < R"""

    def __init__(self, modes: ModeSet, coeffs: np.ndarray):
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != (len(modes), 3):
            raise ValidationError(f"expected coefficients of shape {(len(modes), 3)}, got {coeffs.shape}")
        coeffs.setflags(write=False)
        self.modes = modes
        self.coeffs = coeffs

    # construction --------------------------------------------------------

    @classmethod
    def zeros(cls, geom: TorusGeometry, radius: Number, max_modes: int = DEFAULT_MAX_MODES) -> 'SpectralField':
        modes = mode_set(geom, radius, max_modes)
        return cls(modes, np.zeros((len(modes), 3), dtype=complex))

    @classmethod
    def from_modes(cls, geom: TorusGeometry, radius: Number,
                   values: Dict[Tuple[int, int, int], Sequence[complex]]) -> 'SpectralField':
        """Field with the given coefficients; unspecified modes are zero"""
        modes = mode_set(geom, radius)
        coeffs = np.zeros((len(modes), 3), dtype=complex)
        for n, value in values.items():
            try:
                coeffs[modes.index(n)] = value
            except KeyError:
                raise ValidationError(f"mode {tuple(n)} lies outside the truncation ball") from None
        return cls(modes, coeffs)

    def with_coeffs(self, coeffs: np.ndarray) -> 'SpectralField':
        return SpectralField(self.modes, coeffs)

    # mapping-like access ---------------------------------------------------

    @property
    def geom(self) -> TorusGeometry:
        return self.modes.geom

    @property
    def radius(self):
        return self.modes.radius

    def __len__(self) -> int:
        return len(self.modes)

    def __getitem__(self, n: Sequence[int]) -> np.ndarray:
        return self.coeffs[self.modes.index(n)]

    def __contains__(self, n) -> bool:
        try:
            self.modes.index(n)
        except (KeyError, ValidationError):
            return False
        return True

    def items(self) -> Iterator[Tuple[Tuple[int, int, int], np.ndarray]]:
        for row, value in zip(self.modes.ints.tolist(), self.coeffs):
            yield tuple(row), value

    def support(self) -> Dict[Tuple[int, int, int], np.ndarray]:
        return {n: v for n, v in self.items() if np.any(v != 0)}

    def __repr__(self) -> str:
        return f"SpectralField(M={len(self)}, R={self.radius}, nonzero={int(np.any(self.coeffs != 0, axis=1).sum())})"

    # arithmetic -------------------------------------------------------------

    def require_compatible(self, other: 'SpectralField') -> None:
        if self.geom != other.geom or self.radius != other.radius:
            raise GeometryMismatchError(
                f"fields live on different truncations: {self.modes!r} vs {other.modes!r}"
            )

    def __add__(self, other: 'SpectralField') -> 'SpectralField':
        self.require_compatible(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: 'SpectralField') -> 'SpectralField':
        self.require_compatible(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> 'SpectralField':
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> 'SpectralField':
        return self.with_coeffs(-self.coeffs)

    def is_bitwise_equal(self, other: 'SpectralField') -> bool:
        return self.modes is other.modes and np.array_equal(self.coeffs, other.coeffs)

    # constraints ------------------------------------------------------------

    def reality_residual(self) -> float:
        """max |u_n − conj(u_{−n})| relative to the largest coefficient"""
        scale = float(np.max(np.abs(self.coeffs), initial=0.0))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[self.modes.neg])))) / scale

    def divergence_residual(self) -> float:
        """max |ň·u_n|/(|ň||u_n|)"""
        if len(self) == 0:
            return 0.0
        return float(np.max(divergence_residual_many(self.modes.adjusted, self.modes.norms, self.coeffs)))

    def validate(self, reality_tol: float = REALITY_TOL, divergence_tol: float = DIVERGENCE_TOL) -> 'SpectralField':
        if not np.all(np.isfinite(self.coeffs)):
            raise NumericalFailure("field holds non-finite coefficients")
        reality = self.reality_residual()
        if reality > reality_tol:
            raise ValidationError(f"field is not real: conjugate-pair residual {reality:.3e}")
        divergence = self.divergence_residual()
        if divergence > divergence_tol:
            raise DivergenceError(f"field is not divergence-free: residual {divergence:.3e}")
        return self

    def symmetrized(self) -> 'SpectralField':
        """Closest field with exact conjugate pairing"""
        return self.with_coeffs(0.5 * (self.coeffs + np.conj(self.coeffs[self.modes.neg])))

    def helical_amplitudes(self) -> Tuple[np.ndarray, np.ndarray]:
        return helical_amplitudes_many(self.modes.adjusted, self.modes.norms, self.coeffs)


def hs_norm_sq(f: SpectralField, s: float) -> float:
    weights = f.modes.norms ** (2.0 * s)
    return torus_volume(f.geom) * float(np.sum(weights * np.sum(np.abs(f.coeffs) ** 2, axis=1)))


def hs_norm(f: SpectralField, s: float) -> float:
    """‖f‖_s = (|𝕋³| Σ |ň|^{2s} |u_n|²)^{1/2}"""
    if s < 0:
        raise ValidationError(f"Sobolev index must be nonnegative, got {s}")
    return float(np.sqrt(hs_norm_sq(f, s)))


def inner(f: SpectralField, g: SpectralField, s: float = 0.0) -> complex:
    """⟨D^s f, D^s g⟩ = |𝕋³| Σ |ň|^{2s} f_n·conj(g_n)"""
    f.require_compatible(g)
    weights = f.modes.norms ** (2.0 * s)
    return torus_volume(f.geom) * complex(np.sum(weights * np.sum(f.coeffs * np.conj(g.coeffs), axis=1)))


def random_field(geom: TorusGeometry, radius: Number, s: float, amplitude: float = 1.0,
                 seed: Optional[int] = None, max_modes: int = DEFAULT_MAX_MODES) -> SpectralField:
    """
    Real, divergence-free random field with |u_n| ∝ |ň|^(−s−2).

    Each conjugate pair (n, −n) is drawn once from a complex Gaussian,
    Leray-projected, and mirrored.
    """
    modes = mode_set(geom, radius, max_modes)
    if modes.radius < 2:
        raise ValidationError(f"random fields need R ≥ 2, got {modes.radius}")
    rng = np.random.default_rng(seed)
    # the lexicographically larger member of each pair owns the draw
    owner = np.arange(len(modes)) > modes.neg
    draws = rng.standard_normal((len(modes), 3)) + 1j * rng.standard_normal((len(modes), 3))
    draws = leray_project_many(modes.adjusted, draws)
    draws *= (amplitude * modes.norms ** (-s - 2.0))[:, None]
    coeffs = np.where(owner[:, None], draws, np.conj(draws[modes.neg]))
    return SpectralField(modes, coeffs)


def normalized(f: SpectralField, s: float = 0.0, target: float = 1.0) -> SpectralField:
    """Rescale so that ‖f‖_s² = target"""
    current = hs_norm_sq(f, s)
    if current == 0.0:
        raise ValidationError("cannot normalize the zero field")
    return f * float(np.sqrt(target / current))


def rotate(f: SpectralField, tau: float) -> SpectralField:
    """e^{τℒ} applied mode by mode"""
    return f.with_coeffs(wave_exponential_many(f.modes.adjusted, f.modes.norms, tau, f.coeffs))


def to_transformed(field: SpectralField, omega: float, t: float) -> SpectralField:
    """u = e^{−Ωtℒ}U"""
    return rotate(field, -omega * t)


def from_transformed(field: SpectralField, omega: float, t: float) -> SpectralField:
    """U = e^{Ωtℒ}u"""
    return rotate(field, omega * t)


# snapshot text format ------------------------------------------------------

def write_snapshot(f: SpectralField, path: Union[str, Path]) -> Path:
    """One line per mode: n1 n2 n3 reU1 imU1 reU2 imU2 reU3 imU3, lexicographic"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    c = f.coeffs
    values = np.column_stack([c[:, 0].real, c[:, 0].imag, c[:, 1].real, c[:, 1].imag, c[:, 2].real, c[:, 2].imag])
    with open(path, 'w', newline='\n') as out:
        for n, row in zip(f.modes.ints.tolist(), values):
            out.write(' '.join(str(x) for x in n) + ' ' + ' '.join(f"{x:.17g}" for x in row) + '\n')
    return path


def read_snapshot(path: Union[str, Path], geom: TorusGeometry, radius: Number) -> SpectralField:
    data = np.loadtxt(path, ndmin=2)
    if data.size and data.shape[1] != 9:
        raise ValidationError(f"{path}: expected 9 columns per line, got {data.shape[1]}")
    values = {}
    for row in data:
        n = tuple(int(x) for x in row[:3])
        values[n] = (row[3] + 1j * row[4], row[5] + 1j * row[6], row[7] + 1j * row[8])
    return SpectralField.from_modes(geom, radius, values)
