"""
Triplet values, bandwidth rules and near-resonant triad enumeration.

A convolution triad n + k + m = 0 is near-resonant when the smallest
|σ₁ň₃/|ň| + σ₂ǩ₃/|ǩ| + σ₃m̌₃/|m̌|| over sign triples is at most the
bandwidth δ. Only the four sign triples with σ₃ = + are evaluated; the
other four are their negatives.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import bisect

from .errors import ConvolutionError, ValidationError
from .helical import HelicalSign, norms_of
from .lattice import Number, TorusGeometry, WaveVector, adjust, as_fraction

logger = logging.getLogger(__name__)

SignTriple = Tuple[HelicalSign, HelicalSign, HelicalSign]
ALL_SIGN_TRIPLES: List[SignTriple] = [tuple(s) for s in product(HelicalSign, repeat=3)]
REDUCED_SIGN_PAIRS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]

# Floating slack on the |ω| ≤ δ test so exact resonances survive rounding.
TIE_MARGIN = 1e-12
DEFAULT_CAP = 0.49
ALL_PASS = math.inf
_INV_E = math.exp(-1.0)


class BandwidthMode(str, Enum):
    THEOREM = 'theorem'
    CONSTANT = 'constant'
    ZERO = 'zero'
    ALL_PASS = 'all_pass'


class Ordering(str, Enum):
    NONE = 'none'
    N0 = 'N0'


@dataclass(frozen=True)
class BandwidthSpec:
    """Rule producing δ(n, k, m); hashable so triad tables can be cached on it"""
    mode: BandwidthMode = BandwidthMode.THEOREM
    c_hat: float = 1.0
    cap: float = DEFAULT_CAP
    const_delta: float = 0.0

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mode', BandwidthMode(self.mode))
        except ValueError as e:
            raise ValidationError(f"unknown bandwidth mode: {self.mode!r}") from e
        object.__setattr__(self, 'c_hat', float(self.c_hat))
        object.__setattr__(self, 'cap', float(self.cap))
        object.__setattr__(self, 'const_delta', float(self.const_delta))
        if not self.c_hat > 0:
            raise ValidationError(f"c_hat must be positive, got {self.c_hat}")
        if not 0 < self.cap < 0.5:
            raise ValidationError(f"cap must lie in (0, 1/2), got {self.cap}")
        if not 0 <= self.const_delta < 0.5:
            raise ValidationError(f"const_delta must lie in [0, 1/2), got {self.const_delta}")

    @classmethod
    def theorem(cls, c_hat: float = 1.0, cap: float = DEFAULT_CAP) -> 'BandwidthSpec':
        return cls(BandwidthMode.THEOREM, c_hat=c_hat, cap=cap)

    @classmethod
    def constant(cls, delta: float) -> 'BandwidthSpec':
        return cls(BandwidthMode.CONSTANT, const_delta=delta)

    @classmethod
    def zero(cls) -> 'BandwidthSpec':
        return cls(BandwidthMode.ZERO)

    @classmethod
    def all_pass(cls) -> 'BandwidthSpec':
        return cls(BandwidthMode.ALL_PASS)


@dataclass(frozen=True)
class Triad:
    n: WaveVector
    k: WaveVector
    m: WaveVector
    min_abs_triplet: float
    delta: float

    @property
    def is_near_resonant(self) -> bool:
        return self.min_abs_triplet <= self.delta + TIE_MARGIN


def _ratio(w: WaveVector) -> float:
    w.require_nonzero()
    return w.adjusted[2] / w.norm


def triplet_value(n: WaveVector, k: WaveVector, m: WaveVector, sigma: Sequence) -> float:
    """σ₁ň₃/|ň| + σ₂ǩ₃/|ǩ| + σ₃m̌₃/|m̌|; no convolution condition required"""
    s1, s2, s3 = (int(HelicalSign.parse(s)) for s in sigma)
    return s1 * _ratio(n) + s2 * _ratio(k) + s3 * _ratio(m)


def min_triplet(n: WaveVector, k: WaveVector, m: WaveVector) -> float:
    cn, ck, cm = _ratio(n), _ratio(k), _ratio(m)
    return min(abs(s1 * cn + s2 * ck + cm) for s1, s2 in REDUCED_SIGN_PAIRS)


def min_triplet_many(cn: np.ndarray, ck: np.ndarray, cm: np.ndarray) -> np.ndarray:
    """Vectorised min_triplet on the ratios ň₃/|ň|"""
    out = np.abs(cn + ck + cm)
    for s1, s2 in REDUCED_SIGN_PAIRS[1:]:
        np.minimum(out, np.abs(s1 * cn + s2 * ck + cm), out=out)
    return out


@lru_cache(maxsize=4096)
def solve_theorem_delta(rhs: float, cap: float = DEFAULT_CAP) -> float:
    """δ on the increasing branch (0, 1/e) with δ·log(1/δ) = rhs, clamped to cap"""
    if rhs <= 0:
        return 0.0
    if rhs >= _INV_E:
        return cap
    lo = 1e-300
    if lo * math.log(1.0 / lo) >= rhs:
        return lo
    delta = bisect(lambda x: x * math.log(1.0 / x) - rhs, lo, _INV_E, xtol=1e-300, rtol=1e-12, maxiter=2000)
    return min(delta, cap)


def delta_for_nmax(n_max: float, spec: BandwidthSpec) -> float:
    if spec.mode is BandwidthMode.THEOREM:
        return solve_theorem_delta(spec.c_hat / n_max, spec.cap)
    if spec.mode is BandwidthMode.CONSTANT:
        return spec.const_delta
    if spec.mode is BandwidthMode.ZERO:
        return 0.0
    return ALL_PASS


def bandwidth(n: WaveVector, k: WaveVector, m: WaveVector, spec: BandwidthSpec) -> float:
    """δ(n, k, m); theorem mode depends only on N_max = max(|ň|, |ǩ|, |m̌|)"""
    for w in (n, k, m):
        w.require_nonzero()
    return delta_for_nmax(max(n.norm, k.norm, m.norm), spec)


def bandwidth_many(n_max: np.ndarray, spec: BandwidthSpec) -> np.ndarray:
    n_max = np.asarray(n_max, dtype=float)
    if spec.mode is not BandwidthMode.THEOREM:
        return np.full(n_max.shape, delta_for_nmax(1.0, spec))
    unique, inverse = np.unique(n_max, return_inverse=True)
    deltas = np.array([solve_theorem_delta(spec.c_hat / float(x), spec.cap) for x in unique])
    return deltas[inverse].reshape(n_max.shape)


def membership_many(cn: np.ndarray, ck: np.ndarray, cm: np.ndarray, n_max: np.ndarray, spec: BandwidthSpec,
                    margin: float = TIE_MARGIN) -> np.ndarray:
    if spec.mode is BandwidthMode.ALL_PASS:
        return np.ones(np.shape(cn), dtype=bool)
    return min_triplet_many(cn, ck, cm) <= bandwidth_many(n_max, spec) + margin


def make_triad(n: WaveVector, k: WaveVector, m: WaveVector, spec: BandwidthSpec) -> Triad:
    if tuple(a + b + c for a, b, c in zip(n.n, k.n, m.n)) != (0, 0, 0):
        raise ConvolutionError(f"n + k + m must vanish, got {n.n}, {k.n}, {m.n}")
    return Triad(n, k, m, min_triplet(n, k, m), bandwidth(n, k, m, spec))


def is_near_resonant(n: WaveVector, k: WaveVector, m: WaveVector, spec: BandwidthSpec,
                     margin: float = TIE_MARGIN) -> bool:
    triad = make_triad(n, k, m, spec)
    return triad.min_abs_triplet <= triad.delta + margin


# -- enumeration ----------------------------------------------------------

def _search_box(n: WaveVector, ordering: Ordering, radius: Optional[Fraction]) -> Tuple[int, int, int]:
    geom = n.geom
    if ordering is Ordering.N0:
        w = math.ceil(n.norm * max(float(geom.l1), float(geom.l2), 1.0))
        return w, w, w
    return math.ceil(radius * geom.l1), math.ceil(radius * geom.l2), math.ceil(radius)


def _slab_members(n: WaveVector, k3: int, box: Tuple[int, int, int], spec: BandwidthSpec,
                  ordering: Ordering, radius: Optional[Fraction], margin: float = TIE_MARGIN) -> np.ndarray:
    """Integer k with the given k₃ for which (n, k, −n−k) qualifies"""
    geom = n.geom
    w1, w2, _ = box
    g1, g2 = np.mgrid[-w1:w1 + 1, -w2:w2 + 1]
    k = np.stack([g1.ravel(), g2.ravel(), np.full(g1.size, k3)], axis=1).astype(np.int64)
    n_int = np.array(n.n, dtype=np.int64)
    m = -n_int - k
    keep = np.any(k != 0, axis=1) & np.any(m != 0, axis=1)

    if ordering is Ordering.N0:
        both = np.concatenate([k, m, n_int[None, :]])
        s_all = geom.scaled_norm_sq(both)
        s_k, s_m, s_n = s_all[:len(k)], s_all[len(k):2 * len(k)], s_all[-1]
        keep &= (s_k <= s_n) & (s_m <= s_k)
    else:
        keep &= geom.norm_sq_below(k, radius * radius)
    k, m = k[keep], m[keep]
    if len(k) == 0:
        return k

    k_adj = geom.adjust_array(k)
    m_adj = geom.adjust_array(m)
    k_norm = norms_of(k_adj)
    m_norm = norms_of(m_adj)
    cn = np.full(len(k), n.adjusted[2] / n.norm)
    n_max = np.maximum(np.maximum(k_norm, m_norm), n.norm)
    member = membership_many(cn, k_adj[:, 2] / k_norm, m_adj[:, 2] / m_norm, n_max, spec, margin)
    return k[member]


def _scan(n: WaveVector, spec: BandwidthSpec, ordering, radius, threads: int,
          margin: float = TIE_MARGIN) -> np.ndarray:
    n.require_nonzero()
    ordering = Ordering(ordering)
    if ordering is Ordering.NONE:
        if radius is None:
            raise ValidationError("a search radius is required when ordering is 'none'")
        radius = as_fraction(radius)
    box = _search_box(n, ordering, radius)
    slabs = range(-box[2], box[2] + 1)

    def work(k3):
        return _slab_members(n, k3, box, spec, ordering, radius, margin)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(work, slabs))
    else:
        parts = [work(k3) for k3 in slabs]
    found = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
    order = np.lexsort((found[:, 2], found[:, 1], found[:, 0]))
    return found[order]


def enumerate_triads_for(n: WaveVector, spec: BandwidthSpec, ordering='N0',
                         radius: Optional[Number] = None, threads: int = 1,
                         margin: float = TIE_MARGIN) -> List[WaveVector]:
    """
    All k ∉ {0, −n} with (n, k, −n−k) near-resonant, lexicographic.

    With ordering 'N0' the triad must also satisfy |ň| ≥ |ǩ| ≥ |ǩ+ň|
    (ties included, compared exactly). With ordering 'none' the caller
    supplies the radius |ǩ| < R of the search ball. `margin` is the slack
    added to δ in the membership test.
    """
    rows = _scan(n, spec, ordering, radius, threads, margin)
    return [adjust(row, n.geom) for row in rows.tolist()]


def count_triads_for(n: WaveVector, spec: BandwidthSpec, ordering='N0',
                     radius: Optional[Number] = None, threads: int = 1, margin: float = TIE_MARGIN) -> int:
    return int(len(_scan(n, spec, ordering, radius, threads, margin)))


REPORT_COLUMNS = ['n1', 'n2', 'n3', 'norm', 'count', 'bound', 'ratio']


def _safe_ratio(count: float, bound: float) -> float:
    if bound > 0:
        return float(count) / float(bound)
    return 0.0 if count == 0 else math.inf


def fit_counting_constant(table: pd.DataFrame) -> float:
    """C from count = C·|ň| at the smallest |ň| in the table"""
    if table.empty:
        raise ValidationError("cannot fit a constant on an empty table")
    row = table.loc[table['norm'].idxmin()]
    return float(row['count']) / float(row['norm'])


def count_report(n_list: Sequence[Sequence[int]], spec: BandwidthSpec, geom: Optional[TorusGeometry] = None,
                 c_bound: Optional[float] = None, threads: int = 1, margin: float = TIE_MARGIN) -> pd.DataFrame:
    """
    N0 triad counts per n against the linear bound C·|ň|.

    C is taken from `c_bound` when given, else fitted on the smallest |ň|.
    """
    geom = geom or TorusGeometry()
    rows = []
    for raw in n_list:
        n = adjust(raw, geom).require_nonzero()
        count = count_triads_for(n, spec, 'N0', threads=threads, margin=margin)
        logger.info(f"n={n.n} |n|={n.norm:.6g}: {count} near-resonant N0 triads")
        rows.append({'n1': n.n[0], 'n2': n.n[1], 'n3': n.n[2], 'norm': n.norm, 'count': count})
    table = pd.DataFrame(rows, columns=REPORT_COLUMNS[:5])
    if table.empty:
        return pd.DataFrame(columns=REPORT_COLUMNS)
    c = c_bound if c_bound is not None else fit_counting_constant(table)
    table['bound'] = c * table['norm']
    table['ratio'] = [_safe_ratio(c, b) for c, b in zip(table['count'], table['bound'])]
    return table[REPORT_COLUMNS]
