"""
Continuous geometry behind the triad counts.

For fixed n and signs (σ₁, σ₂) the triplet value becomes a function of a
continuous k,

    F(k) = σ₁ň₃/|ň| + σ₂k₃/|k| + m₃/|m|,   m = −ň − k,

and the sublevel set V = {k : |F(k)| ≤ δ, ½|ň| ≤ |k| ≤ |ň|} controls how
many lattice points can be near-resonant with n. This module measures V
by Monte Carlo and evaluates the algebra used to bound it: the quartic q
in the rescaled radius λ_k, its four roots Λ, the pairwise-difference
products Π and the elliptic integrals they feed.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, special

from .errors import DegenerateConfigurationError, ValidationError
from .helical import HelicalSign
from .lattice import TorusGeometry, WaveVector, adjust

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-9
MC_CHUNK = 1 << 16
MIN_SAMPLES = 10_000

SIGN_ORDER = [(1, 1), (1, -1), (-1, 1), (-1, -1)]


@dataclass(frozen=True)
class SublevelProblem:
    """n, the sign pair (σ₁, σ₂) and the bandwidth δ"""
    n: WaveVector
    sigma1: HelicalSign = HelicalSign.PLUS
    sigma2: HelicalSign = HelicalSign.PLUS
    delta: float = 0.1
    strict: bool = True

    def __post_init__(self):
        self.n.require_nonzero()
        object.__setattr__(self, 'sigma1', HelicalSign.parse(self.sigma1))
        object.__setattr__(self, 'sigma2', HelicalSign.parse(self.sigma2))
        delta = float(self.delta)
        if not math.isfinite(delta):
            raise ValidationError(f"bandwidth must be finite, got {self.delta}")
        if self.strict and not 0.0 <= delta < 0.5:
            raise ValidationError(f"bandwidth must lie in [0, 1/2), got {delta}")
        object.__setattr__(self, 'delta', delta)

    @classmethod
    def build(cls, n: Sequence[int], sigma1='+', sigma2='+', delta: float = 0.1,
              geom: Optional[TorusGeometry] = None, strict: bool = True) -> 'SublevelProblem':
        return cls(adjust(n, geom or TorusGeometry()), sigma1, sigma2, delta, strict)

    @property
    def geom(self) -> TorusGeometry:
        return self.n.geom

    @property
    def n_ratio(self) -> float:
        return self.n.adjusted[2] / self.n.norm


@dataclass(frozen=True)
class AngleTriple:
    """Polar angles (θ_n, θ_k, θ_m) in [0, π]"""
    theta_n: float
    theta_k: float
    theta_m: float

    def __post_init__(self):
        for name in ('theta_n', 'theta_k', 'theta_m'):
            value = float(getattr(self, name))
            if not 0.0 <= value <= math.pi:
                raise ValidationError(f"{name} must lie in [0, π], got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_cosines(cls, c_n: float, c_k: float, c_m: float) -> 'AngleTriple':
        for c in (c_n, c_k, c_m):
            if not -1.0 <= c <= 1.0:
                raise ValidationError(f"cosines must lie in [-1, 1], got {c}")
        return cls(math.acos(c_n), math.acos(c_k), math.acos(c_m))

    @property
    def c_n(self) -> float:
        return math.cos(self.theta_n)

    @property
    def c_k(self) -> float:
        return math.cos(self.theta_k)

    @property
    def c_m(self) -> float:
        return math.cos(self.theta_m)

    @property
    def squares(self) -> np.ndarray:
        """(1, c_n², c_k², c_m²)"""
        return np.array([1.0, self.c_n ** 2, self.c_k ** 2, self.c_m ** 2])


# -- the function F and its sublevel set --------------------------------------

def f_value_many(prob: SublevelProblem, k: np.ndarray) -> np.ndarray:
    """F on rows of continuous adjusted k; NaN where k or m vanishes"""
    k = np.asarray(k, dtype=float)
    n = np.array(prob.n.adjusted)
    m = -n[None, :] - k
    k_norm = np.sqrt(np.sum(k * k, axis=1))
    m_norm = np.sqrt(np.sum(m * m, axis=1))
    with np.errstate(divide='ignore', invalid='ignore'):
        value = int(prob.sigma1) * prob.n_ratio + int(prob.sigma2) * k[:, 2] / k_norm + m[:, 2] / m_norm
    value[(k_norm == 0) | (m_norm == 0)] = np.nan
    return value


def f_value(prob: SublevelProblem, k: Sequence[float]) -> float:
    k = np.asarray(k, dtype=float)
    if k.shape != (3,):
        raise ValidationError(f"expected a 3-vector, got shape {k.shape}")
    value = f_value_many(prob, k[None, :])[0]
    if math.isnan(value):
        raise ValidationError(f"F is singular at k = {tuple(k)} (k = 0 or k = −n)")
    return float(value)


def annulus_volume(prob: SublevelProblem) -> float:
    """Volume of ½|ň| ≤ |k| ≤ |ň| mapped back to k-space"""
    geom = prob.geom
    return (4.0 * math.pi / 3.0) * (7.0 / 8.0) * prob.n.norm ** 3 * float(geom.l1) * float(geom.l2)


def _mc_chunk(prob: SublevelProblem, count: int, seq: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(seq)
    r = prob.n.norm
    k = rng.uniform(-r, r, size=(count, 3))
    k_sq = np.sum(k * k, axis=1)
    inside = (4.0 * k_sq >= r * r) & (k_sq <= r * r)
    values = f_value_many(prob, k[inside])
    return int(np.count_nonzero(np.abs(values) <= prob.delta))


def volume_mc(prob: SublevelProblem, samples: int = 100_000, seed: Optional[int] = None,
              threads: int = 1) -> Tuple[float, float]:
    """
    Monte Carlo estimate of vol(V) and its standard error.

    Samples are uniform in the adjusted box [−|ň|, |ň|]³; the hit fraction
    is scaled by the box volume and the Jacobian L₁L₂. The stream is split
    into fixed-size chunks seeded from one SeedSequence, so the estimate
    does not depend on the thread count.
    """
    samples = int(samples)
    if samples < MIN_SAMPLES:
        raise ValidationError(f"volume estimates need at least {MIN_SAMPLES} samples, got {samples}")
    if prob.delta <= 0.0:
        return 0.0, 0.0
    sizes = [MC_CHUNK] * (samples // MC_CHUNK)
    if samples % MC_CHUNK:
        sizes.append(samples % MC_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def work(i):
        return _mc_chunk(prob, sizes[i], seeds[i])

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            hits = sum(executor.map(work, range(len(sizes))))
    else:
        hits = sum(work(i) for i in range(len(sizes)))

    geom = prob.geom
    box = (2.0 * prob.n.norm) ** 3 * float(geom.l1) * float(geom.l2)
    p = hits / samples
    estimate = box * p
    error = box * math.sqrt(p * (1.0 - p) / samples)
    logger.debug(f"volume_mc n={prob.n.n} delta={prob.delta:g}: {hits}/{samples} hits")
    return estimate, error


def log_plus(x: float) -> float:
    return max(0.0, math.log(x)) if x > 0 else 0.0


def theorem_volume_bound(prob: SublevelProblem) -> float:
    """L₁L₂|ň|³(δ + δ log⁺(1/(δ + 2|n₃|/|ň|))) with unit constant"""
    delta = prob.delta
    if delta <= 0:
        return 0.0
    geom = prob.geom
    tilt = 2.0 * abs(prob.n.adjusted[2]) / prob.n.norm
    return float(geom.l1) * float(geom.l2) * prob.n.norm ** 3 * (delta + delta * log_plus(1.0 / (delta + tilt)))


# -- the quartic and its roots ------------------------------------------------

def q_quartic(lam, theta_k, c_m, theta_n):
    """q(λ_k, θ_k, c_m) at fixed θ_n: difference of two squared brackets"""
    c_k, c_n = np.cos(theta_k), np.cos(theta_n)
    first = 2.0 * lam * np.sin(theta_k) * np.sin(theta_n) * c_m ** 2
    second = (lam ** 2 + 1.0 + 2.0 * lam * c_n * c_k) * c_m ** 2 - (lam * c_k + c_n) ** 2
    return first ** 2 - second ** 2


def q_factored(lam, theta_k, c_m, theta_n):
    """q as minus the product of its two quadratic factors in λ_k"""
    c_k, c_n = np.cos(theta_k), np.cos(theta_n)
    a = c_m ** 2 - c_k ** 2
    tail = c_m ** 2 - c_n ** 2
    plus = a * lam ** 2 + 2.0 * (np.cos(theta_k + theta_n) * c_m ** 2 - c_n * c_k) * lam + tail
    minus = a * lam ** 2 + 2.0 * (np.cos(theta_k - theta_n) * c_m ** 2 - c_n * c_k) * lam + tail
    return -plus * minus


def manifold_cm(lam, theta_k, phi_k, theta_n, phi_n=0.0):
    """c_m = −(λ_k c_k + c_n)/λ_m for k at (λ_k|ň|, θ_k, φ_k)"""
    c_k, c_n = np.cos(theta_k), np.cos(theta_n)
    lam_m = np.sqrt(lam ** 2 + 1.0 + 2.0 * lam * c_k * c_n
                    + 2.0 * lam * np.sin(theta_k) * np.sin(theta_n) * np.cos(phi_k - phi_n))
    return -(lam * c_k + c_n) / lam_m


def manifold_residual(lam, theta_k, phi_k, theta_n, phi_n=0.0):
    """q − [2λ_k sinθ_k sinθ_n sin(φ_k − φ_n) c_m²]² on c_m = manifold_cm(...)"""
    c_m = manifold_cm(lam, theta_k, phi_k, theta_n, phi_n)
    extra = 2.0 * lam * np.sin(theta_k) * np.sin(theta_n) * np.sin(phi_k - phi_n) * c_m ** 2
    return q_quartic(lam, theta_k, c_m, theta_n) - extra ** 2


def check_admissible(angles: AngleTriple, gap: float = DEGENERACY_GAP) -> None:
    """Reject vanishing cosines and near-coincident entries of (1, c_n², c_k², c_m²)"""
    cosines = (angles.c_n, angles.c_k, angles.c_m)
    if min(abs(c) for c in cosines) < gap:
        raise DegenerateConfigurationError(f"a cosine vanishes: {cosines}")
    sq = angles.squares
    for i in range(4):
        for j in range(i + 1, 4):
            if abs(sq[i] - sq[j]) < gap:
                raise DegenerateConfigurationError(
                    f"entries {i} and {j} of (1, c_n², c_k², c_m²) = {tuple(sq)} coincide"
                )


def coriolis_cosines(angles: AngleTriple) -> np.ndarray:
    """𝒞^{σ_k,σ_n} = cos(θ_m + σ_kθ_k + σ_nθ_n) in the order ++, +−, −+, −−"""
    return np.array([math.cos(angles.theta_m + sk * angles.theta_k + sn * angles.theta_n)
                     for sk, sn in SIGN_ORDER])


def lambda_roots(angles: AngleTriple) -> np.ndarray:
    """λ_k-zeros Λ^{σ_k,σ_n} of q in the order ++, +−, −+, −−"""
    check_admissible(angles)
    c_n, c_k, c_m = angles.c_n, angles.c_k, angles.c_m
    return (c_n * c_k - coriolis_cosines(angles) * c_m) / (c_m ** 2 - c_k ** 2)


def lambda_roots_sine(angles: AngleTriple) -> np.ndarray:
    """Same roots as −sin(θ_m + σ_nθ_n)/sin(θ_m − σ_kθ_k)"""
    check_admissible(angles)
    tm, tk, tn = angles.theta_m, angles.theta_k, angles.theta_n
    return np.array([-math.sin(tm + sn * tn) / math.sin(tm - sk * tk) for sk, sn in SIGN_ORDER])


def sign_relations(angles: AngleTriple) -> Dict[str, float]:
    """
    Λ^{+,σ}Λ^{−,σ}(c_m² − c_k²) and Λ^{σ,+}Λ^{σ,−}(c_m² − c_n²); all four are negative.
    """
    roots = dict(zip(SIGN_ORDER, lambda_roots(angles)))
    dk = angles.c_m ** 2 - angles.c_k ** 2
    dn = angles.c_m ** 2 - angles.c_n ** 2
    return {
        'k_pair_plus': roots[(1, 1)] * roots[(-1, 1)] * dk,
        'k_pair_minus': roots[(1, -1)] * roots[(-1, -1)] * dk,
        'n_pair_plus': roots[(1, 1)] * roots[(1, -1)] * dn,
        'n_pair_minus': roots[(-1, 1)] * roots[(-1, -1)] * dn,
    }


# -- pairwise-difference products -----------------------------------------------

def pi_products(a: float, b: float, c: float, d: float) -> Tuple[float, float, float]:
    """(Π_IL, Π_EC, Π_SP) = ((a−c)(b−d), (a−d)(b−c), (a−b)(c−d))"""
    return (a - c) * (b - d), (a - d) * (b - c), (a - b) * (c - d)


def _require_descending(*values: float) -> None:
    if not all(x > y for x, y in zip(values, values[1:])):
        raise ValidationError(f"expected strictly descending values, got {values}")


def elliptic_k_parameters(a: float, b: float, c: float, d: float) -> Tuple[float, float]:
    """(𝗄², 𝗀) = (Π_SP/Π_IL, 2/√Π_IL) for a > b > c > d"""
    _require_descending(a, b, c, d)
    il, _, sp = pi_products(a, b, c, d)
    return sp / il, 2.0 / math.sqrt(il)


def correspondence_check(angles: AngleTriple) -> Tuple[float, float]:
    """
    Residuals of Π(π𝒞) = 4Π(πς): the first over all 24 orderings applied to
    both vectors, the second after sorting each vector independently.
    """
    cc = coriolis_cosines(angles)
    sq = angles.squares
    first = 0.0
    for perm in permutations(range(4)):
        left = pi_products(*cc[list(perm)])
        right = pi_products(*sq[list(perm)])
        first = max(first, max(abs(x - 4.0 * y) for x, y in zip(left, right)))
    left = pi_products(*np.sort(cc)[::-1])
    right = pi_products(*np.sort(sq)[::-1])
    second = max(abs(x - 4.0 * y) for x, y in zip(left, right))
    return float(first), float(second)


# Double transpositions as relabellings of positions 0..3.
K4 = [(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]

# Signs of (Π_EC, Π_SP, Π_IL) -> stabiliser of the first entry listing the descending order.
_COSET_TABLE = {
    (1, 1, 1): 'abcd',
    (-1, -1, -1): 'adcb',
    (1, -1, -1): 'adbc',
    (-1, 1, 1): 'acbd',
    (-1, 1, -1): 'acdb',
    (1, -1, 1): 'abdc',
}


def coset_representative(signs: Tuple[int, int, int]) -> str:
    """Representative of the sorting coset for the signs of (Π_EC, Π_SP, Π_IL)"""
    key = tuple(int(np.sign(s)) for s in signs)
    if key not in _COSET_TABLE:
        raise ValidationError(f"no descending order produces the signs {key}")
    return _COSET_TABLE[key]


@dataclass(frozen=True)
class CosetReport:
    signs: Tuple[int, int, int]
    representative: str
    order: Tuple[int, int, int, int]
    member: bool


def descending_coset(v: Sequence[float]) -> CosetReport:
    """Classify the descending sort of four distinct reals by the signs of their Π products"""
    v = np.asarray(v, dtype=float)
    if v.shape != (4,) or len(set(v.tolist())) < 4:
        raise ValidationError(f"expected four distinct values, got {v.tolist()}")
    il, ec, sp = pi_products(*v)
    signs = (int(np.sign(ec)), int(np.sign(sp)), int(np.sign(il)))
    rep = coset_representative(signs)
    rep_idx = tuple('abcd'.index(ch) for ch in rep)
    order = tuple(int(i) for i in np.argsort(-v, kind='stable'))
    coset = {tuple(g[i] for i in rep_idx) for g in K4}
    return CosetReport(signs, rep, order, order in coset)


# -- elliptic integrals ---------------------------------------------------------

def elliptic_f(psi: float, k: float) -> float:
    """∫₀^Ψ dx/√(1 − k² sin²x) by adaptive quadrature"""
    if not 0.0 <= k < 1.0:
        raise ValidationError(f"modulus must lie in [0, 1), got {k}")
    if not 0.0 <= psi <= math.pi / 2 + 1e-15:
        raise ValidationError(f"amplitude must lie in [0, π/2], got {psi}")
    if psi == 0.0:
        return 0.0
    value, _ = integrate.quad(lambda x: 1.0 / math.sqrt(1.0 - (k * math.sin(x)) ** 2), 0.0, psi,
                              epsabs=0.0, epsrel=1e-12, limit=200)
    return value


def substitution_check(a: float, y: float, b: float, c: float, d: float) -> Tuple[float, float]:
    """
    Both sides of ∫_(b,y] dλ/√(−(λ−a)(λ−b)(λ−c)(λ−d)) = 𝗀F(arcsin y₀, 𝗄).

    The left side is integrated after λ = b + t², which removes the
    endpoint singularity at b.
    """
    _require_descending(a, y, b, c, d)

    def integrand(t):
        lam = b + t * t
        return 2.0 / math.sqrt((a - lam) * (lam - c) * (lam - d))

    left, _ = integrate.quad(integrand, 0.0, math.sqrt(y - b), epsabs=0.0, epsrel=1e-12, limit=200)
    k_sq, g = elliptic_k_parameters(a, b, c, d)
    y0 = math.sqrt((a - c) * (y - b) / ((a - b) * (y - c)))
    right = g * elliptic_f(math.asin(min(y0, 1.0)), math.sqrt(k_sq))
    return left, right


def full_interval_integral(a: float, b: float, c: float, d: float) -> Dict[str, float]:
    """
    ∫ over (d, c) ∪ (b, a) of dλ/√(−(λ−a)(λ−b)(λ−c)(λ−d)).

    Returns the quadrature, the closed form 2𝗀K(𝗄) and the shape
    𝗀(1 − log√(1 − 𝗄²)) that bounds it up to a constant.
    """
    k_sq, g = elliptic_k_parameters(a, b, c, d)
    upper, _ = integrate.quad(lambda x: 1.0 / math.sqrt((x - c) * (x - d)), b, a,
                              weight='alg', wvar=(-0.5, -0.5), epsabs=0.0, epsrel=1e-12)
    lower, _ = integrate.quad(lambda x: 1.0 / math.sqrt((a - x) * (b - x)), d, c,
                              weight='alg', wvar=(-0.5, -0.5), epsabs=0.0, epsrel=1e-12)
    return {
        'quadrature': upper + lower,
        'closed_form': 2.0 * g * float(special.ellipk(k_sq)),
        'shape': g * (1.0 - math.log(math.sqrt(1.0 - k_sq))),
    }


# -- the λ-integral 𝖰 -----------------------------------------------------------

def _angles_for(theta_n: float, theta_k: float, c_m: float) -> AngleTriple:
    if not -1.0 < c_m < 1.0:
        raise ValidationError(f"c_m must lie in (-1, 1), got {c_m}")
    return AngleTriple(theta_n, theta_k, math.acos(c_m))


def q_star(lam, theta_k, c_m, theta_n):
    """1/√q where q > 0, else 0"""
    q = np.asarray(q_quartic(lam, theta_k, c_m, theta_n), dtype=float)
    out = np.zeros_like(q)
    pos = q > 0
    out[pos] = 1.0 / np.sqrt(q[pos])
    return out if out.ndim else float(out)


def q_integral(theta_n: float, theta_k: float, c_m: float) -> float:
    """
    𝖰(θ_k, c_m) = |c_m| ∫_{½}^{1} q*(λ) dλ.

    The interval is split at the roots of q; on pieces where q > 0 the
    1/√ endpoint singularities become algebraic quadrature weights.
    """
    angles = _angles_for(theta_n, theta_k, c_m)
    roots = np.sort(lambda_roots(angles))
    lead = abs(c_m ** 2 - angles.c_k ** 2)
    cuts: List[Tuple[float, Optional[int]]] = [(0.5, None)]
    cuts += [(float(r), i) for i, r in enumerate(roots) if 0.5 < r < 1.0]
    cuts.append((1.0, None))

    total = 0.0
    for (lo, lo_root), (hi, hi_root) in zip(cuts[:-1], cuts[1:]):
        if hi <= lo:
            continue
        if q_quartic(0.5 * (lo + hi), theta_k, c_m, theta_n) <= 0:
            continue
        others = [r for i, r in enumerate(roots) if i not in (lo_root, hi_root)]
        sign = 1.0 if hi_root is not None else -1.0

        def integrand(lam, others=others, sign=sign):
            rest = sign * np.prod([lam - r for r in others])
            return 1.0 / (lead * math.sqrt(rest)) if rest > 0 else 0.0

        alpha = -0.5 if lo_root is not None else 0.0
        beta = -0.5 if hi_root is not None else 0.0
        if alpha or beta:
            piece, _ = integrate.quad(integrand, lo, hi, weight='alg', wvar=(alpha, beta),
                                      epsabs=0.0, epsrel=1e-10, limit=200)
        else:
            piece, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-10, limit=200)
        total += piece
    return abs(c_m) * total


def q_integral_direct(theta_n: float, theta_k: float, c_m: float) -> float:
    """𝖰 by plain adaptive quadrature of q*, with breakpoints at the roots"""
    angles = _angles_for(theta_n, theta_k, c_m)
    inside = [float(r) for r in np.sort(lambda_roots(angles)) if 0.5 < r < 1.0]
    value, _ = integrate.quad(lambda lam: q_star(lam, theta_k, c_m, theta_n), 0.5, 1.0,
                              points=inside or None, limit=500, epsabs=0.0, epsrel=1e-8)
    return abs(c_m) * value


@dataclass
class QBoundReport:
    table: pd.DataFrame
    k_general: float
    k_sharp: float
    skipped: int
    holds: bool


Q_COLUMNS = ['theta_n', 'theta_k', 'c_m', 'q_value', 'ceiling', 'general_shape', 'ratio_general',
             'sharp_applicable', 'sharp_shape', 'ratio_sharp']


def q_integral_bound_check(grid: Iterable[Tuple[float, float, float]], k_general: Optional[float] = None,
                           k_sharp: Optional[float] = None) -> QBoundReport:
    """
    𝖰 against (1 + log√(Π_IL/Π_EC))/√Π_IL and, when |c_n| < min(|c_k|, |c_m|),
    against 1/√Π_IL, with Π taken on the descending sort of (1, c_n², c_k², c_m²).

    `ceiling` is 2K(𝗄)/√Π_IL, the value of the integral over the whole
    positivity set of q. Constants not supplied are fitted as the largest
    observed ratio. Degenerate points are skipped and counted.
    """
    rows = []
    skipped = 0
    for theta_n, theta_k, c_m in grid:
        try:
            angles = _angles_for(theta_n, theta_k, c_m)
            check_admissible(angles)
        except (DegenerateConfigurationError, ValidationError) as e:
            logger.warning(f"skipping grid point ({theta_n:.6g}, {theta_k:.6g}, {c_m:.6g}): {e}")
            skipped += 1
            continue
        value = q_integral(theta_n, theta_k, c_m)
        il, ec, _ = pi_products(*np.sort(angles.squares)[::-1])
        general = (1.0 + math.log(math.sqrt(il / ec))) / math.sqrt(il)
        sharp_ok = abs(angles.c_n) < min(abs(angles.c_k), abs(c_m))
        sharp = 1.0 / math.sqrt(il)
        rows.append({
            'theta_n': theta_n, 'theta_k': theta_k, 'c_m': c_m, 'q_value': value,
            'ceiling': 2.0 * float(special.ellipk(1.0 - ec / il)) / math.sqrt(il),
            'general_shape': general, 'ratio_general': value / general,
            'sharp_applicable': sharp_ok, 'sharp_shape': sharp,
            'ratio_sharp': value / sharp if sharp_ok else math.nan,
        })
    table = pd.DataFrame(rows, columns=Q_COLUMNS)
    fitted_general = float(table['ratio_general'].max()) if len(table) else 0.0
    sharp_rows = table[table['sharp_applicable'].astype(bool)] if len(table) else table
    fitted_sharp = float(sharp_rows['ratio_sharp'].max()) if len(sharp_rows) else 0.0
    k_general = fitted_general if k_general is None else k_general
    k_sharp = fitted_sharp if k_sharp is None else k_sharp
    holds = fitted_general <= k_general * (1 + 1e-9) and fitted_sharp <= k_sharp * (1 + 1e-9)
    logger.info(f"Q bound check: {len(table)} points, {skipped} skipped, "
                f"K={fitted_general:.4g}, K'={fitted_sharp:.4g}")
    return QBoundReport(table, k_general, k_sharp, skipped, bool(holds))


def elliptic_identity_sweep(trials: int, seed: Optional[int] = None) -> pd.DataFrame:
    """Correspondence, root and substitution residuals over random inputs"""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < trials:
        angles = AngleTriple(*rng.uniform(0.05, math.pi - 0.05, size=3))
        try:
            roots = lambda_roots(angles)
        except DegenerateConfigurationError:
            continue
        first, second = correspondence_check(angles)
        scale = (1.0 + float(np.max(np.abs(roots)))) ** 4
        root_residual = max(abs(q_quartic(r, angles.theta_k, angles.c_m, angles.theta_n)) for r in roots) / scale
        sine_gap = float(np.max(np.abs(roots - lambda_roots_sine(angles))))
        a, y, b, c, d = np.sort(rng.uniform(-5.0, 5.0, size=5))[::-1]
        left, right = substitution_check(a, y, b, c, d)
        rows.append({
            'first_correspondence': first, 'second_correspondence': second,
            'root_residual': root_residual, 'sine_form_gap': sine_gap,
            'substitution_gap': abs(left - right) / max(1.0, abs(right)),
        })
    return pd.DataFrame(rows)
