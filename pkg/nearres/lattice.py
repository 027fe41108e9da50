"""
Torus geometry, domain-adjusted wavevectors and lattice enumeration.

The torus is [0, 2πL₁) × [0, 2πL₂) × [0, 2π). A lattice point n ∈ ℤ³ has
domain-adjusted wavevector ň = (n₁/L₁, n₂/L₂, n₃). Aspect ratios are held
as exact fractions parsed from their decimal text, so |ň|² is an exact
rational and every ordering or ball-membership decision is made without
floating-point fuzz.
"""

import math
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import ResourceLimitError, ValidationError, ZeroWaveVectorError

logger = logging.getLogger(__name__)

DEFAULT_MAX_MODES = 200_000
_INT64_SAFE = 2 ** 62

Number = Union[int, float, str, Fraction]
IntTriple = Tuple[int, int, int]


def as_fraction(value: Number) -> Fraction:
    """Exact rational from an int, a Fraction, a decimal string or a float's repr"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError(f"not a number: {value!r}")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite value: {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"cannot parse number '{value}'") from e
    raise ValidationError(f"not a number: {value!r}")


def _int_dtype(max_value: int):
    return np.int64 if max_value < _INT64_SAFE else object


@dataclass(frozen=True)
class TorusGeometry:
    """Aspect ratios (L₁, L₂); the x₃ period is fixed to 2π"""
    l1: Fraction = Fraction(1)
    l2: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, 'l1', as_fraction(self.l1))
        object.__setattr__(self, 'l2', as_fraction(self.l2))
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValidationError(f"aspect ratios must be positive, got L1={self.l1}, L2={self.l2}")

    @cached_property
    def lengths(self) -> np.ndarray:
        arr = np.array([float(self.l1), float(self.l2), 1.0])
        arr.setflags(write=False)
        return arr

    @cached_property
    def exact_weights(self) -> Tuple[int, int, int, int]:
        """Integers (A₁, A₂, A₃, D) with |ň|² = (n₁²A₁ + n₂²A₂ + n₃²A₃)/D"""
        p1, q1 = self.l1.numerator, self.l1.denominator
        p2, q2 = self.l2.numerator, self.l2.denominator
        d = (p1 * p2) ** 2
        return (q1 * p2) ** 2, (q2 * p1) ** 2, d, d

    @property
    def volume(self) -> float:
        return torus_volume(self)

    def adjust_array(self, ints: np.ndarray) -> np.ndarray:
        return np.asarray(ints, dtype=float) / self.lengths

    def norm_sq_exact(self, n: Sequence[int]) -> Fraction:
        a1, a2, a3, d = self.exact_weights
        return Fraction(n[0] * n[0] * a1 + n[1] * n[1] * a2 + n[2] * n[2] * a3, d)

    def scaled_norm_sq(self, ints: np.ndarray, extra: int = 1) -> np.ndarray:
        """D·|ň|² as integers; int64 when `extra`·max fits, else Python ints"""
        ints = np.asarray(ints)
        a1, a2, a3, _ = self.exact_weights
        top = max(1, int(np.abs(ints).max(initial=0))) ** 2 * (a1 + a2 + a3) * max(1, extra)
        arr = ints.astype(_int_dtype(top))
        return arr[..., 0] * arr[..., 0] * a1 + arr[..., 1] * arr[..., 1] * a2 + arr[..., 2] * arr[..., 2] * a3

    def norm_sq_below(self, ints: np.ndarray, bound_sq: Fraction, strict: bool = True) -> np.ndarray:
        """Mask of |ň|² < bound_sq (or ≤ when strict is False), exactly"""
        bound_sq = as_fraction(bound_sq)
        d = self.exact_weights[3]
        scale = bound_sq.denominator
        rhs = bound_sq.numerator * d
        scaled = self.scaled_norm_sq(ints, extra=scale) * scale
        if isinstance(rhs, int) and rhs >= _INT64_SAFE and scaled.dtype != object:
            scaled = scaled.astype(object)
        return scaled < rhs if strict else scaled <= rhs


def torus_volume(geom: TorusGeometry) -> float:
    """|𝕋³| = (2π)³L₁L₂"""
    return (2.0 * math.pi) ** 3 * float(geom.l1) * float(geom.l2)


@dataclass(frozen=True)
class WaveVector:
    """Integer lattice point with its domain-adjusted coordinates"""
    n: IntTriple
    adjusted: Tuple[float, float, float] = field(compare=False)
    norm: float = field(compare=False)
    geom: TorusGeometry = field(default_factory=TorusGeometry, repr=False)

    @property
    def is_zero(self) -> bool:
        return self.n == (0, 0, 0)

    @property
    def norm_sq_exact(self) -> Fraction:
        return self.geom.norm_sq_exact(self.n)

    def __neg__(self) -> 'WaveVector':
        return adjust((-self.n[0], -self.n[1], -self.n[2]), self.geom)

    def __add__(self, other: 'WaveVector') -> 'WaveVector':
        return adjust(tuple(a + b for a, b in zip(self.n, other.n)), self.geom)

    def require_nonzero(self) -> 'WaveVector':
        if self.is_zero:
            raise ZeroWaveVectorError("zero wavevector is not a mode")
        return self


def _int_triple(n: Iterable) -> IntTriple:
    values = tuple(n)
    if len(values) != 3:
        raise ValidationError(f"wavevector needs 3 components, got {values!r}")
    out = []
    for v in values:
        if isinstance(v, (float, np.floating)) and float(v).is_integer():
            v = int(v)
        if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
            raise ValidationError(f"wavevector components must be integers, got {values!r}")
        out.append(int(v))
    return out[0], out[1], out[2]


def adjust(n: Iterable, geom: TorusGeometry) -> WaveVector:
    """ň = (n₁/L₁, n₂/L₂, n₃) and |ň|"""
    triple = _int_triple(n)
    lengths = geom.lengths
    a = (triple[0] / lengths[0], triple[1] / lengths[1], float(triple[2]))
    norm = math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    return WaveVector(triple, (float(a[0]), float(a[1]), a[2]), norm, geom)


def box_half_widths(radius: Fraction, geom: TorusGeometry) -> IntTriple:
    """Per-axis bounds of the integer box containing |ň| < R"""
    return math.ceil(radius * geom.l1), math.ceil(radius * geom.l2), math.ceil(radius)


class ModeSet:
    """
    All n ∈ ℤ³∖{0} with |ň| < R, in lexicographic order.

    Holds the vectorised views (integer triples, adjusted coordinates,
    norms) and an index of −n for every row. Instances are shared through
    `mode_set`, so treat them as read-only.
    """

    def __init__(self, geom: TorusGeometry, radius: Fraction, ints: np.ndarray):
        self.geom = geom
        self.radius = radius
        self.ints = np.ascontiguousarray(ints, dtype=np.int64)
        self.adjusted = geom.adjust_array(self.ints)
        a = self.adjusted
        self.norms = np.sqrt(a[:, 0] * a[:, 0] + a[:, 1] * a[:, 1] + a[:, 2] * a[:, 2])
        self.half_widths = box_half_widths(radius, geom)
        self._keys = self.encode(self.ints)
        for arr in (self.ints, self.adjusted, self.norms, self._keys):
            arr.setflags(write=False)
        neg, found = self.lookup(-self.ints)
        if not found.all():
            raise AssertionError("mode set is not closed under negation")
        self.neg = neg
        self.neg.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ints)

    def __repr__(self) -> str:
        return f"ModeSet(R={self.radius}, L1={self.geom.l1}, L2={self.geom.l2}, M={len(self)})"

    def encode(self, ints: np.ndarray) -> np.ndarray:
        w1, w2, w3 = self.half_widths
        ints = np.asarray(ints, dtype=np.int64)
        return ((ints[..., 0] + w1) * (2 * w2 + 1) + (ints[..., 1] + w2)) * (2 * w3 + 1) + (ints[..., 2] + w3)

    def lookup(self, ints: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Row indices of the given triples and a mask of which were found"""
        ints = np.asarray(ints, dtype=np.int64)
        w = np.array(self.half_widths)
        inside = np.all(np.abs(ints) <= w, axis=-1)
        keys = np.where(inside, self.encode(np.where(inside[..., None], ints, 0)), -1)
        idx = np.searchsorted(self._keys, keys)
        idx = np.clip(idx, 0, max(len(self._keys) - 1, 0))
        found = inside & (len(self._keys) > 0)
        if len(self._keys):
            found &= self._keys[idx] == keys
        return idx, found

    def index(self, n: Sequence[int]) -> int:
        idx, found = self.lookup(np.array([_int_triple(n)]))
        if not found[0]:
            raise KeyError(tuple(n))
        return int(idx[0])

    def wavevectors(self) -> List[WaveVector]:
        return [adjust(row, self.geom) for row in self.ints.tolist()]


def _scan_ball(geom: TorusGeometry, radius: Fraction, max_modes: int) -> np.ndarray:
    estimate = 4.0 / 3.0 * math.pi * float(radius) ** 3 * float(geom.l1) * float(geom.l2)
    if estimate > 1.2 * max_modes + 100:
        raise ResourceLimitError(
            f"radius {radius} gives about {int(estimate)} modes, above the cap of {max_modes}"
        )
    w1, w2, w3 = box_half_widths(radius, geom)
    rows = []
    for n1 in range(-w1, w1 + 1):
        g2, g3 = np.mgrid[-w2:w2 + 1, -w3:w3 + 1]
        slab = np.stack([np.full(g2.size, n1), g2.ravel(), g3.ravel()], axis=1).astype(np.int64)
        keep = geom.norm_sq_below(slab, radius * radius) & np.any(slab != 0, axis=1)
        rows.append(slab[keep])
    ints = np.concatenate(rows) if rows else np.zeros((0, 3), dtype=np.int64)
    if len(ints) > max_modes:
        raise ResourceLimitError(f"{len(ints)} modes exceed the cap of {max_modes}")
    return ints


@lru_cache(maxsize=16)
def mode_set(geom: TorusGeometry, radius: Number, max_modes: int = DEFAULT_MAX_MODES) -> ModeSet:
    """Cached ModeSet for (geometry, R)"""
    radius = as_fraction(radius)
    if radius < 1:
        raise ValidationError(f"truncation radius must be at least 1, got {radius}")
    ints = _scan_ball(geom, radius, max_modes)
    logger.debug(f"mode set R={radius} L=({geom.l1},{geom.l2}): {len(ints)} modes")
    return ModeSet(geom, radius, ints)


def modes_in_ball(radius: Number, geom: TorusGeometry, max_modes: int = DEFAULT_MAX_MODES) -> List[WaveVector]:
    """Nonzero n with |ň| < R, lexicographic in (n₁, n₂, n₃)"""
    return mode_set(geom, as_fraction(radius), max_modes).wavevectors()


def annulus_index(k: WaveVector) -> int:
    """Dyadic shell i with 2^(i−1) ≤ |ǩ| < 2^i; 0 for |ǩ| < 1"""
    k.require_nonzero()
    norm_sq = k.norm_sq_exact
    if norm_sq < 1:
        return 0
    i = 1
    while norm_sq >= 4 ** i:
        i += 1
    return i
