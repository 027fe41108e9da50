"""
Exact lattice-point counting for near-resonant sets.

Counts are integers obtained by scanning boxes. Ball, annulus and
construction constraints are decided in exact integer or rational
arithmetic; only the triplet test |F| ≤ δ is floating point, and points
within a tiny margin of the threshold are reported on both sides through
a CountInterval.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import special

from .errors import ResourceLimitError, ValidationError, VerificationError
from .lattice import Number, TorusGeometry, adjust, as_fraction
from .resonance import TIE_MARGIN
from .sublevel import SublevelProblem, f_value_many, theorem_volume_bound, volume_mc

logger = logging.getLogger(__name__)

MAX_COUNT_NORM = 256


@dataclass(frozen=True)
class CountInterval:
    """Lattice count with threshold ties excluded (strict) and included (relaxed)"""
    strict: int
    relaxed: int

    @property
    def ties(self) -> int:
        return self.relaxed - self.strict

    def __add__(self, other: 'CountInterval') -> 'CountInterval':
        return CountInterval(self.strict + other.strict, self.relaxed + other.relaxed)


def _as_int_array(values, top: int) -> np.ndarray:
    return np.asarray(values, dtype=np.int64 if top < 2 ** 62 else object)


def _tally(values: np.ndarray, delta: float, margin: float) -> CountInterval:
    mags = np.abs(values)
    return CountInterval(int(np.count_nonzero(mags <= delta - margin)),
                         int(np.count_nonzero(mags <= delta + margin)))


# -- 3D sublevel counts ---------------------------------------------------------

def _sublevel_slab(prob: SublevelProblem, k3: int, box: Tuple[int, int], s_n: int,
                   margin: float) -> CountInterval:
    geom = prob.geom
    w1, w2 = box
    g1, g2 = np.mgrid[-w1:w1 + 1, -w2:w2 + 1]
    k = np.stack([g1.ravel(), g2.ravel(), np.full(g1.size, k3)], axis=1).astype(np.int64)
    s_k = geom.scaled_norm_sq(k, extra=4)
    keep = (4 * s_k >= s_n) & (s_k <= s_n)
    keep &= np.any(k != -np.array(prob.n.n), axis=1)
    k = k[keep]
    if len(k) == 0:
        return CountInterval(0, 0)
    return _tally(f_value_many(prob, geom.adjust_array(k)), prob.delta, margin)


def count_sublevel_integers(prob: SublevelProblem, margin: float = TIE_MARGIN, threads: int = 1) -> CountInterval:
    """
    #{k ∈ ℤ³ : ½|ň| ≤ |ǩ| ≤ |ň|, k ≠ −n, |F(ǩ)| ≤ δ}.

    Annulus membership is exact; F is compared with δ ∓ margin.
    """
    if prob.n.norm > MAX_COUNT_NORM:
        raise ResourceLimitError(f"|n| = {prob.n.norm:.6g} exceeds the counting limit {MAX_COUNT_NORM}")
    if prob.delta < 0:
        return CountInterval(0, 0)
    geom = prob.geom
    r = prob.n.norm
    box = (math.ceil(r * float(geom.l1)), math.ceil(r * float(geom.l2)))
    w3 = math.ceil(r)
    s_n = geom.scaled_norm_sq(np.array([prob.n.n]), extra=4)[0]

    def work(k3):
        return _sublevel_slab(prob, k3, box, s_n, margin)

    slabs = range(-w3, w3 + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(work, slabs))
    else:
        parts = [work(k3) for k3 in slabs]
    total = CountInterval(0, 0)
    for part in parts:
        total = total + part
    logger.debug(f"sublevel count n={prob.n.n} signs=({prob.sigma1},{prob.sigma2}) delta={prob.delta:g}: {total}")
    return total


# -- lower-bound constructions --------------------------------------------------

@dataclass
class LowerBoundResult:
    exact_count: int
    reference: float
    points: np.ndarray = field(repr=False)
    extras: dict = field(default_factory=dict)


def _verify_points(n: Tuple[int, int, int], points: np.ndarray, delta: float, margin: float = TIE_MARGIN) -> None:
    """|n| ≥ |k| ≥ |n+k| ≥ |n|/3 exactly and |ω₊₊₊(n, k, −n−k)| ≤ δ"""
    if len(points) == 0:
        return
    n_arr = np.array(n, dtype=np.int64)
    m = -n_arr - points
    s_n = int(n_arr @ n_arr)
    s_k = np.sum(points * points, axis=1)
    s_m = np.sum(m * m, axis=1)
    ordered = (s_k <= s_n) & (s_m <= s_k) & (9 * s_m >= s_n)
    norm_n = math.sqrt(s_n)
    value = n[2] / norm_n + points[:, 2] / np.sqrt(s_k) + m[:, 2] / np.sqrt(s_m)
    ok = ordered & (np.abs(value) <= delta + margin)
    if not ok.all():
        bad = points[~ok][0]
        raise VerificationError(f"constructed point k={tuple(bad.tolist())} violates the near-resonance constraints")


def _delta_fraction(delta: Number) -> Fraction:
    d = as_fraction(delta)
    if not 0 <= d < Fraction(1, 2):
        raise ValidationError(f"bandwidth must lie in [0, 1/2), got {delta}")
    return d


def lower_bound_slow_fast(big_n: int, delta: Number) -> LowerBoundResult:
    """
    Slow–fast construction with n = (−2N, 0, 0).

    Enumerates k with k₁ ∈ [N, N + (N/3)·min(δN/|k₃|, 1)], |k₂| ≤ N and
    1 ≤ |k₃| ≤ N, compares the count with Σ(2N+1)(1 + ⌊(N/3)min(δN/|k₃|, 1)⌋)
    and checks every point against the near-resonance constraints.
    """
    big_n = int(big_n)
    if big_n < 4:
        raise ValidationError(f"N must be at least 4, got {big_n}")
    d = _delta_fraction(delta)
    p, q = d.numerator, d.denominator
    n = (-2 * big_n, 0, 0)
    rows = []
    k2 = np.arange(-big_n, big_n + 1)
    for k3 in list(range(-big_n, 0)) + list(range(1, big_n + 1)):
        a = abs(k3)
        for step in range(0, big_n // 3 + 1):
            # step ≤ (N/3)·δN/a and step ≤ N/3, exactly
            if 3 * step > big_n or 3 * q * a * step > p * big_n * big_n:
                break
            block = np.stack([np.full(k2.size, big_n + step), k2, np.full(k2.size, k3)], axis=1)
            rows.append(block)
    points = np.concatenate(rows).astype(np.int64) if rows else np.zeros((0, 3), dtype=np.int64)
    _verify_points(n, points, float(d))

    formula = 0
    for a in range(1, big_n + 1):
        reach = Fraction(big_n, 3) * min(d * big_n / a, Fraction(1))
        formula += 2 * (2 * big_n + 1) * (1 + math.floor(reach))
    logger.info(f"slow-fast N={big_n} delta={d}: {len(points)} points, formula {formula}")
    return LowerBoundResult(int(len(points)), float(formula), points)


def slow_fast_scaling(big_n: int, delta: float) -> float:
    """N² + N³δ log(1/δ), with 0·log 0 = 0"""
    tail = delta * math.log(1.0 / delta) if delta > 0 else 0.0
    return big_n ** 2 + big_n ** 3 * tail


def fast_fast_scaling(norm: float, delta: float) -> float:
    """|n|² min{1, (δ|n|)^{3/2}} + |n|³δ min{log(1/δ), δ|n| log|n|}"""
    return (norm ** 2 * min(1.0, (delta * norm) ** 1.5)
            + norm ** 3 * delta * min(math.log(1.0 / delta), delta * norm * math.log(norm)))


def lower_bound_fast_fast(big_n: int, delta: Number) -> LowerBoundResult:
    """
    Fast–fast construction with n = (−2N, 0, −1).

    Keeps k with |n|/(1 + δ|n|) ≤ |k| ≤ |n|, k₁ ∈ [N, N + (N/3)min(δ|n|/(2(k₃−1)), 1)]
    and k₃ ∈ [2, (N/3)min(√(δ|n|), 1)]. All conditions involving |n| are
    squared into integer inequalities. Each point is verified and its
    triplet value split as f♭ + f♯ with f♭ = 1/|n| − 1/|k| ≤ 0 and
    f♯ = (k₃ − 1)(1/|m| − 1/|k|) ≥ 0.
    """
    big_n = int(big_n)
    if big_n < 8:
        raise ValidationError(f"N must be at least 8, got {big_n}")
    d = _delta_fraction(delta)
    if d < Fraction(1, 4 * big_n * big_n):
        raise ValidationError(f"bandwidth {delta} is below 1/(2N)² = {1 / (4 * big_n * big_n):.3g}")
    p, q = d.numerator, d.denominator
    s_n = 4 * big_n * big_n + 1
    n = (-2 * big_n, 0, -1)

    def above_inner_shell(s_k: int) -> bool:
        # |k|(1 + δ|n|) ≥ |n| ⇔ A + B ≥ 0 with B = 2δ|k|²|n| ≥ 0 (scaled by q²)
        a = s_k * (q * q + p * p * s_n) - s_n * q * q
        return a >= 0 or 4 * p * p * q * q * s_k * s_k * s_n >= a * a

    rows = []
    for k3 in range(2, big_n // 3 + 1):
        if 81 * k3 ** 4 * q * q > big_n ** 4 * p * p * s_n:
            break
        for step in range(0, big_n // 3 + 1):
            if 3 * step > big_n or (6 * step * (k3 - 1) * q) ** 2 > big_n ** 2 * p * p * s_n:
                break
            k1 = big_n + step
            reach = math.isqrt(max(0, s_n - k1 * k1 - k3 * k3))
            for k2 in range(-reach, reach + 1):
                s_k = k1 * k1 + k2 * k2 + k3 * k3
                if s_k <= s_n and above_inner_shell(s_k):
                    rows.append((k1, k2, k3))
    points = np.array(rows, dtype=np.int64).reshape(-1, 3)
    _verify_points(n, points, float(d))

    flat_max, sharp_min = 0.0, 0.0
    if len(points):
        norm_n = math.sqrt(s_n)
        m = -np.array(n) - points
        norm_k = np.sqrt(np.sum(points * points, axis=1))
        norm_m = np.sqrt(np.sum(m * m, axis=1))
        flat = 1.0 / norm_n - 1.0 / norm_k
        sharp = (points[:, 2] - 1) * (1.0 / norm_m - 1.0 / norm_k)
        flat_max, sharp_min = float(flat.max()), float(sharp.min())
        if flat_max > TIE_MARGIN or sharp_min < -TIE_MARGIN:
            raise VerificationError(
                f"f♭/f♯ split has the wrong sign: max f♭={flat_max:.3e}, min f♯={sharp_min:.3e}")
    reference = fast_fast_scaling(math.sqrt(s_n), float(d))
    logger.info(f"fast-fast N={big_n} delta={d}: {len(points)} points, scaling {reference:.6g}")
    return LowerBoundResult(int(len(points)), reference, points, {'flat_max': flat_max, 'sharp_min': sharp_min})


def lower_bound_table(variant: str, n_values: Sequence[int], deltas: Sequence[Number]) -> pd.DataFrame:
    rows = []
    for big_n in n_values:
        for delta in deltas:
            if variant == 'slow-fast':
                result = lower_bound_slow_fast(big_n, delta)
                scaling = slow_fast_scaling(big_n, float(delta))
            elif variant == 'fast-fast':
                result = lower_bound_fast_fast(big_n, delta)
                scaling = result.reference
            else:
                raise ValidationError(f"unknown construction '{variant}'")
            rows.append({'variant': variant, 'N': big_n, 'delta': float(delta), 'exact_count': result.exact_count,
                         'reference': result.reference, 'scaling': scaling,
                         'matches': result.exact_count == result.reference if variant == 'slow-fast' else True})
    return pd.DataFrame(rows, columns=['variant', 'N', 'delta', 'exact_count', 'reference', 'scaling', 'matches'])


# -- disjoint Jordan curves -----------------------------------------------------

@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse with rational centre and semi-axes"""
    cx: Fraction
    cy: Fraction
    a: Fraction
    b: Fraction
    interior: bool = True

    def __post_init__(self):
        for name in ('cx', 'cy', 'a', 'b'):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.a <= 0 or self.b <= 0:
            raise ValidationError(f"semi-axes must be positive, got ({self.a}, {self.b})")

    @property
    def area(self) -> float:
        return math.pi * float(self.a) * float(self.b)

    @property
    def length(self) -> float:
        big, small = max(self.a, self.b), min(self.a, self.b)
        return 4.0 * float(big) * float(special.ellipe(1.0 - float(small / big) ** 2))

    def level(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Sign of (x−cx)²b² + (y−cy)²a² − a²b² in exact integers"""
        den = math.lcm(self.cx.denominator, self.cy.denominator, self.a.denominator, self.b.denominator)
        cx, cy = int(self.cx * den), int(self.cy * den)
        a, b = int(self.a * den), int(self.b * den)
        top = (max(abs(int(np.abs(x).max(initial=0)) * den) + abs(cx),
                   abs(int(np.abs(y).max(initial=0)) * den) + abs(cy)) + 1) ** 2 * (a * a + b * b) + (a * b) ** 2
        dx = _as_int_array(x, top) * den - cx
        dy = _as_int_array(y, top) * den - cy
        return np.sign(dx * dx * (b * b) + dy * dy * (a * a) - (a * a) * (b * b)).astype(int)

    def inside_box(self, px: int, py: int) -> bool:
        """Entirely inside the open unit box centred at (px, py)"""
        half = Fraction(1, 2)
        return (self.cx - self.a > px - half and self.cx + self.a < px + half
                and self.cy - self.b > py - half and self.cy + self.b < py + half)


def _separated(e: Ellipse, f: Ellipse) -> bool:
    dist_sq = (e.cx - f.cx) ** 2 + (e.cy - f.cy) ** 2
    return dist_sq > (max(e.a, e.b) + max(f.a, f.b)) ** 2


def _nested(inner: Ellipse, outer: Ellipse) -> bool:
    gap = min(outer.a, outer.b) - max(inner.a, inner.b)
    if gap <= 0:
        return False
    return (inner.cx - outer.cx) ** 2 + (inner.cy - outer.cy) ** 2 < gap * gap


@dataclass(frozen=True)
class CurveFamily:
    """
    Disjoint ellipses bounding S, the points inside an odd number of them.

    A curve is tagged `interior` when S lies just inside it, which is the
    case exactly for curves nested inside an even number of others.
    """
    curves: Tuple[Ellipse, ...]

    def __post_init__(self):
        curves = tuple(self.curves)
        object.__setattr__(self, 'curves', curves)
        if not curves:
            raise ValidationError("a curve family needs at least one curve")
        for i, e in enumerate(curves):
            for f in curves[i + 1:]:
                if not (_separated(e, f) or _nested(e, f) or _nested(f, e)):
                    raise ValidationError(f"cannot certify that {e} and {f} are disjoint")
        for e, depth in zip(curves, self.depths()):
            if e.interior != (depth % 2 == 0):
                raise ValidationError(f"{e} is at nesting depth {depth}; its tag must be "
                                      f"{'interior' if depth % 2 == 0 else 'exterior'}")

    @classmethod
    def tagged(cls, curves: Sequence[Ellipse]) -> 'CurveFamily':
        """Family with tags derived from nesting depth"""
        curves = [replace(e, interior=True) for e in curves]
        depths = [sum(_nested(e, f) for f in curves if f is not e) for e in curves]
        return cls(tuple(replace(e, interior=d % 2 == 0) for e, d in zip(curves, depths)))

    def depths(self) -> List[int]:
        return [sum(_nested(e, f) for f in self.curves if f is not e) for e in self.curves]

    @property
    def area(self) -> float:
        return sum(e.area if e.interior else -e.area for e in self.curves)

    @property
    def length(self) -> float:
        return sum(e.length for e in self.curves)


@dataclass
class JordanReport:
    lattice_count: int
    area: float
    length: float
    exceptional: int
    holds: bool


def _lattice_closure(family: CurveFamily) -> np.ndarray:
    """Integer points of cl(S), sorted"""
    x_lo = math.floor(min(e.cx - e.a for e in family.curves))
    x_hi = math.ceil(max(e.cx + e.a for e in family.curves))
    y_lo = math.floor(min(e.cy - e.b for e in family.curves))
    y_hi = math.ceil(max(e.cy + e.b for e in family.curves))
    gx, gy = np.mgrid[x_lo:x_hi + 1, y_lo:y_hi + 1]
    x, y = gx.ravel(), gy.ravel()
    inside = np.zeros(x.size, dtype=int)
    on_curve = np.zeros(x.size, dtype=bool)
    for e in family.curves:
        level = e.level(x, y)
        inside += level < 0
        on_curve |= level == 0
    keep = on_curve | (inside % 2 == 1)
    return np.stack([x[keep], y[keep]], axis=1)


def jordan_count_check(family: CurveFamily) -> JordanReport:
    """#(ℤ² ∩ cl S) against Area(S) + Len(∂S) + |E|"""
    points = _lattice_closure(family)
    small = [e for e in family.curves if e.area + e.length < 1.0]
    exceptional = 0
    for px, py in points.tolist():
        for e in small:
            if e.inside_box(px, py) and e.level(np.array([px]), np.array([py]))[0] <= 0:
                exceptional += 1
                break
    area, length = family.area, family.length
    count = int(len(points))
    holds = count <= area + length + exceptional + 1e-9
    return JordanReport(count, area, length, exceptional, bool(holds))


def _grid_fraction(rng: np.random.Generator, lo: float, hi: float, den: int = 8) -> Fraction:
    return Fraction(int(rng.integers(int(lo * den), int(hi * den) + 1)), den)


def random_disjoint_family(rng: np.random.Generator, size: int = 4, adversarial: bool = False) -> CurveFamily:
    """
    Random certified-disjoint ellipses, some nested inside others.

    Adversarial families add tiny circles around lattice points, which
    only the exceptional set can pay for.
    """
    curves: List[Ellipse] = []
    attempts = 0
    tiny_left = int(rng.integers(1, 3)) if adversarial else 0
    while (len(curves) < size or tiny_left) and attempts < 500:
        attempts += 1
        if tiny_left:
            px, py = (int(v) for v in rng.integers(-6, 7, size=2))
            r = Fraction(int(rng.integers(1, 10)), 100)
            candidate = Ellipse(Fraction(px), Fraction(py), r, r)
        elif curves and rng.random() < 0.35:
            parent = curves[int(rng.integers(len(curves)))]
            room = min(parent.a, parent.b)
            if room < Fraction(1, 2):
                continue
            a = room * Fraction(int(rng.integers(3, 11)), 16)
            b = a * Fraction(int(rng.integers(8, 17)), 16)
            slack = (room - max(a, b)) / 2
            candidate = Ellipse(parent.cx + slack * Fraction(int(rng.integers(-4, 5)), 8),
                                parent.cy + slack * Fraction(int(rng.integers(-4, 5)), 8), a, b)
        else:
            candidate = Ellipse(_grid_fraction(rng, -8, 8), _grid_fraction(rng, -8, 8),
                                _grid_fraction(rng, 0.25, 5), _grid_fraction(rng, 0.25, 5))
        if all(_separated(candidate, e) or _nested(candidate, e) or _nested(e, candidate) for e in curves):
            curves.append(candidate)
            if tiny_left:
                tiny_left -= 1
    return CurveFamily.tagged(curves)


JORDAN_COLUMNS = ['trial', 'adversarial', 'curves', 'lattice_count', 'area', 'length', 'exceptional', 'holds']


def jordan_trials(trials: int, seed: Optional[int] = None, adversarial_share: float = 0.05,
                  size: int = 4) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    adversarial_count = int(round(trials * adversarial_share))
    rows = []
    for trial in range(trials):
        adversarial = trial < adversarial_count
        family = random_disjoint_family(rng, size, adversarial)
        report = jordan_count_check(family)
        rows.append({'trial': trial, 'adversarial': adversarial, 'curves': len(family.curves),
                     'lattice_count': report.lattice_count, 'area': report.area, 'length': report.length,
                     'exceptional': report.exceptional, 'holds': report.holds})
        if not report.holds:
            logger.warning(f"Jordan trial {trial}: inequality fails for {family}")
    return pd.DataFrame(rows, columns=JORDAN_COLUMNS)


# -- planar slices --------------------------------------------------------------

@dataclass
class SliceReport:
    n: Tuple[int, int, int]
    k3: Fraction
    delta: float
    count: CountInterval
    area: float
    area_error: float
    scale: float
    geom: TorusGeometry = field(default_factory=TorusGeometry, repr=False)

    def bound(self, c: float, c_prime: float) -> float:
        return self.area + c * self.scale + c_prime


def _slice_points(prob: SublevelProblem, k3: Fraction) -> Tuple[np.ndarray, np.ndarray]:
    """Integer k_H in the annulus section at height k₃ (exact) and their adjusted coordinates"""
    geom = prob.geom
    a1, a2, _, d = geom.exact_weights
    s_n = int(geom.scaled_norm_sq(np.array([prob.n.n]))[0])
    p, q = k3.numerator, k3.denominator
    r = prob.n.norm
    w1, w2 = math.ceil(r * float(geom.l1)), math.ceil(r * float(geom.l2))
    g1, g2 = np.mgrid[-w1:w1 + 1, -w2:w2 + 1]
    k1, k2 = g1.ravel(), g2.ravel()
    top = (max(w1, w2) ** 2 * (a1 + a2) + d * p * p) * q * q * 4 + s_n * q * q * 4
    k1i, k2i = _as_int_array(k1, top), _as_int_array(k2, top)
    s_k = (k1i * k1i * a1 + k2i * k2i * a2) * (q * q) + d * p * p
    limit = s_n * q * q
    keep = (4 * s_k >= limit) & (s_k <= limit)
    k_h = np.stack([k1[keep], k2[keep]], axis=1)
    adjusted = np.column_stack([k_h[:, 0] / float(geom.l1), k_h[:, 1] / float(geom.l2),
                                np.full(len(k_h), float(k3))])
    return k_h, adjusted


def planar_slice_check(n: Sequence[int], k3: Number, delta: float, sigma1='+', sigma2='+',
                       samples: int = 200_000, seed: Optional[int] = None,
                       geom: Optional[TorusGeometry] = None) -> SliceReport:
    """
    Lattice count of the section S(k₃) = {k_H : (k_H, k₃) ∈ V} with its
    Monte Carlo area and the boundary scale (L₁ + L₂)√(|ň|² − k₃²).
    """
    prob = SublevelProblem.build(n, sigma1, sigma2, delta, geom)
    geom = prob.geom
    k3 = as_fraction(k3)
    n3 = prob.n.n[2]
    if k3 * (k3 + n3) * (2 * k3 + n3) == 0:
        raise ValidationError(f"slice k3={k3} violates k3(k3+n3)(2k3+n3) ≠ 0 for n={prob.n.n}")
    if k3 * k3 >= prob.n.norm_sq_exact:
        raise ValidationError(f"slice k3={k3} lies outside (−|n|, |n|)")

    _, adjusted = _slice_points(prob, k3)
    count = _tally(f_value_many(prob, adjusted), prob.delta, TIE_MARGIN) if len(adjusted) else CountInterval(0, 0)

    r_out = math.sqrt(prob.n.norm ** 2 - float(k3) ** 2)
    r_in_sq = max(0.0, prob.n.norm ** 2 / 4.0 - float(k3) ** 2)
    area, area_error = 0.0, 0.0
    if prob.delta > 0:
        rng = np.random.default_rng(seed)
        h = rng.uniform(-r_out, r_out, size=(int(samples), 2))
        rad_sq = np.sum(h * h, axis=1)
        inside = (rad_sq >= r_in_sq) & (rad_sq <= r_out * r_out)
        pts = np.column_stack([h[inside], np.full(int(inside.sum()), float(k3))])
        hits = int(np.count_nonzero(np.abs(f_value_many(prob, pts)) <= prob.delta))
        box = (2.0 * r_out) ** 2 * float(geom.l1) * float(geom.l2)
        frac = hits / samples
        area = box * frac
        area_error = box * math.sqrt(frac * (1.0 - frac) / samples)
    scale = (float(geom.l1) + float(geom.l2)) * r_out
    return SliceReport(prob.n.n, k3, prob.delta, count, area, area_error, scale, geom)


SLICE_COLUMNS = ['n1', 'n2', 'n3', 'k3', 'delta', 'count_strict', 'count_relaxed', 'area', 'area_error', 'scale']


def slice_table(reports: Sequence[SliceReport]) -> pd.DataFrame:
    rows = [{'n1': r.n[0], 'n2': r.n[1], 'n3': r.n[2], 'k3': float(r.k3), 'delta': r.delta,
             'count_strict': r.count.strict, 'count_relaxed': r.count.relaxed,
             'area': r.area, 'area_error': r.area_error, 'scale': r.scale} for r in reports]
    return pd.DataFrame(rows, columns=SLICE_COLUMNS)


def fit_slice_constants(reports: Sequence[SliceReport], c_prime: float = 1.0) -> Tuple[float, float]:
    """Smallest C with count ≤ Area + C·scale + C′ on every slice, for the given C′"""
    c = 0.0
    for r in reports:
        if r.scale > 0:
            c = max(c, (r.count.relaxed - r.area - c_prime) / r.scale)
    return c, c_prime


def aspect_ratio_sweep(n: Sequence[int], k3_values: Sequence[Number], delta: float,
                       l1_values: Sequence[Number] = ('1', '1.1', '1.4142135623730951'),
                       samples: int = 100_000, seed: Optional[int] = None, c_prime: float = 1.0) -> pd.DataFrame:
    """Slice constants re-fitted per L₁; `spread` is max/min − 1 over the fitted C"""
    rows = []
    for l1 in l1_values:
        geom = TorusGeometry(l1, 1)
        reports = [planar_slice_check(n, k3, delta, samples=samples, seed=seed, geom=geom) for k3 in k3_values]
        c, _ = fit_slice_constants(reports, c_prime)
        rows.append({'l1': float(geom.l1), 'c': c, 'c_prime': c_prime})
    table = pd.DataFrame(rows, columns=['l1', 'c', 'c_prime'])
    low = table['c'].min()
    table['spread'] = table['c'].max() / low - 1.0 if low > 0 else math.inf
    return table


def sublevel_count_table(n: Sequence[int], delta: float, geom: Optional[TorusGeometry] = None,
                         samples: int = 100_000, seed: Optional[int] = None, threads: int = 1,
                         margin: float = TIE_MARGIN) -> pd.DataFrame:
    """Per sign pair: exact count interval next to the Monte Carlo volume and its bound"""
    rows = []
    wave = adjust(n, geom or TorusGeometry())
    for s1, s2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        prob = SublevelProblem(wave, s1, s2, delta)
        count = count_sublevel_integers(prob, margin, threads)
        volume, error = volume_mc(prob, samples, seed, threads)
        rows.append({'sigma1': s1, 'sigma2': s2, 'count_strict': count.strict, 'count_relaxed': count.relaxed,
                     'volume': volume, 'volume_error': error, 'bound': theorem_volume_bound(prob)})
    return pd.DataFrame(rows)
