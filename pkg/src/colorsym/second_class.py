"""Second class particles: limit laws, exact finite-volume recipes, identities.

Three-color systems use colors ``1`` (first class), ``2`` (second class)
and :data:`INF` (holes).  A perturbation is a coloring of ``{-L..L}`` placed
between first class particles on the left and holes on the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .particle_system import (INF, ParticleConfiguration, RateField, SwapSchedule, reversed_process,
                              simulate_ensemble, window_halfwidth)
from .rng import RngStream

Scalar = Union[Fraction, float, int]
CLASS_ORDER = {1: 0, 2: 1, INF: 2}
EXACT_SIZE_LIMIT = 13          # sites in the perturbation window


def density_d(y: Scalar, q: Scalar) -> Scalar:
    """Limiting step-IC particle density along the ray ``z = y t``."""
    if not 0 <= q < 1:
        raise ValueError("density needs 0 <= q < 1")
    v = 1 - q
    if y >= v:
        return 0 * v
    if y <= -v:
        return 1 + 0 * v
    return (1 - y / v) / 2


def _parse_color(c) -> int:
    if isinstance(c, str):
        c = c.strip().lower()
        if c in ("inf", "+inf", "infinity", "hole"):
            return INF
        c = int(c)
    if isinstance(c, float) and math.isinf(c):
        return INF
    c = int(c)
    if c not in CLASS_ORDER:
        raise ValueError(f"perturbation colors must be 1, 2 or inf; got {c}")
    return c


@dataclass(frozen=True)
class PerturbationSpec:
    """Coloring ``I`` of ``{-L..L}``; ``I[z + L]`` is the color at site ``z``."""

    colors: Tuple[int, ...]

    def __post_init__(self):
        cols = tuple(_parse_color(c) for c in self.colors)
        if len(cols) % 2 == 0:
            raise ValueError("perturbation window must have odd length 2L+1")
        if 2 not in cols:
            raise ValueError("perturbation needs at least one second class particle")
        object.__setattr__(self, "colors", cols)

    @classmethod
    def parse(cls, text: str) -> "PerturbationSpec":
        return cls(tuple(text.replace(",", " ").split()))

    @property
    def L(self) -> int:
        return len(self.colors) // 2

    @property
    def M(self) -> int:
        return self.colors.count(1)

    @property
    def N(self) -> int:
        return self.colors.count(2)

    @property
    def sites(self) -> range:
        return range(-self.L, self.L + 1)

    def __getitem__(self, z: int) -> int:
        return self.colors[z + self.L]

    def target_block(self) -> range:
        """Sites ``-L+M .. -L+M+N-1`` where the second class colors are sorted to."""
        lo = -self.L + self.M
        return range(lo, lo + self.N)

    def second_class_sites(self) -> List[int]:
        return [z for z in self.sites if self[z] == 2]

    def configuration(self, halfwidth: int) -> ParticleConfiguration:
        """Initial condition on ``[-W, W]``: particles left, ``I`` in the middle, holes right."""
        if halfwidth < self.L + 2:
            raise ValueError("window too small for the perturbation")

        def color(z):
            if z < -self.L:
                return 1
            if z > self.L:
                return INF
            return self[z]
        return ParticleConfiguration.from_function(-halfwidth, halfwidth, color)

    def __str__(self) -> str:
        return ",".join("inf" if c == INF else str(c) for c in self.colors)


def single_second_class() -> PerturbationSpec:
    return PerturbationSpec((2,))


def second_class_block(L: int) -> PerturbationSpec:
    """Second class particles on ``-L..0``, holes on ``1..L``."""
    return PerturbationSpec((2,) * (L + 1) + (INF,) * L)


def second_class_before_particle() -> PerturbationSpec:
    return PerturbationSpec((2, 1, INF))


def second_class_after_hole() -> PerturbationSpec:
    return PerturbationSpec((1, INF, 2))


def inverted_block(L: int) -> PerturbationSpec:
    """Holes on ``-L..-1``, one second class particle at 0, particles on ``1..L``."""
    return PerturbationSpec((INF,) * L + (2,) + (1,) * L)


@dataclass(frozen=True)
class SortingPermutation:
    """Slot-to-site bijection of ``{-L..L}`` and a reduced word for it.

    ``swaps`` lists bonds ``z`` (meaning ``(z, z+1)``) in the order the
    Bernoulli recipe applies them; reversing it sorts the packed coloring
    into ``I``'s class pattern.
    """

    L: int
    mapping: Tuple[int, ...]          # mapping[j] = image of slot -L+j
    swaps: Tuple[int, ...]

    def __call__(self, z: int) -> int:
        return self.mapping[z + self.L]

    @property
    def inversions(self) -> int:
        m = self.mapping
        return sum(1 for i in range(len(m)) for j in range(i + 1, len(m)) if m[i] > m[j])


def sorting_permutation(spec: PerturbationSpec, order: str = "stable") -> SortingPermutation:
    """A permutation sending the first ``M`` slots onto ``I^{-1}(1)`` and the next ``N`` onto ``I^{-1}(2)``.

    ``order="stable"`` lists sites of each class left to right;
    ``order="reverse"`` lists them right to left.
    """
    if order not in ("stable", "reverse"):
        raise ValueError("order must be 'stable' or 'reverse'")
    sign = 1 if order == "stable" else -1
    targets = sorted(spec.sites, key=lambda z: (CLASS_ORDER[spec[z]], sign * z))
    L = spec.L
    # eta[site] = slot currently there; bubble-sort eta back to the identity
    eta = {site: slot for slot, site in zip(spec.sites, targets)}
    arr = [eta[z] for z in spec.sites]
    recorded: List[int] = []
    changed = True
    while changed:
        changed = False
        for i in range(len(arr) - 1):
            if arr[i] > arr[i + 1]:
                arr[i], arr[i + 1] = arr[i + 1], arr[i]
                recorded.append(i - L)
                changed = True
    return SortingPermutation(L, tuple(targets), tuple(recorded))


def _bernoulli_start(n: int, p: Scalar) -> Dict[Tuple[int, ...], Scalar]:
    out = {}
    for bits in range(1 << n):
        occ = tuple((bits >> i) & 1 for i in range(n))
        k = sum(occ)
        out[occ] = p ** k * (1 - p) ** (n - k)
    return out


def filling_after_swaps(p: Scalar, spec: PerturbationSpec, q: Scalar, order: str = "stable"
                        ) -> Dict[Tuple[int, ...], Scalar]:
    """Exact law of the occupation of ``{-L..L}`` after the recipe's swaps."""
    n = len(spec.colors)
    if n > EXACT_SIZE_LIMIT:
        raise ValueError(f"exact recipe limited to {EXACT_SIZE_LIMIT} sites; use f_k_monte_carlo")
    perm = sorting_permutation(spec, order)
    dist = _bernoulli_start(n, p)
    for z in perm.swaps:
        i = z + spec.L
        nxt: Dict[Tuple[int, ...], Scalar] = {}
        for occ, w in dist.items():
            a, b = occ[i], occ[i + 1]
            if a == b:
                nxt[occ] = nxt.get(occ, 0) + w
                continue
            # particle left of a hole jumps surely; a hole left of a particle swaps with probability q
            pr = 1 if a > b else q
            moved = occ[:i] + (b, a) + occ[i + 2:]
            if pr:
                nxt[moved] = nxt.get(moved, 0) + w * pr
            if pr != 1:
                nxt[occ] = nxt.get(occ, 0) + w * (1 - pr)
        dist = nxt
    return dist


def f_k_exact(p: Scalar, spec: PerturbationSpec, q: Scalar, k: int, order: str = "stable") -> Scalar:
    """Probability that the target block holds at least ``k`` particles."""
    if not 1 <= k <= spec.N:
        raise ValueError(f"k must lie in 1..{spec.N}")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    block = [z + spec.L for z in spec.target_block()]
    total = 0
    for occ, w in filling_after_swaps(p, spec, q, order).items():
        if sum(occ[i] for i in block) >= k:
            total += w
    return total


def f_k_monte_carlo(p: float, spec: PerturbationSpec, q: float, k: int, samples: int,
                    rng: np.random.Generator, order: str = "stable") -> Tuple[float, float]:
    """Sampled version of the same recipe; returns (estimate, standard error)."""
    n = len(spec.colors)
    occ = rng.random((samples, n)) < p
    for z in sorting_permutation(spec, order).swaps:
        i = z + spec.L
        a, b = occ[:, i].copy(), occ[:, i + 1].copy()
        u = rng.random(samples)
        move = (a & ~b) | (~a & b & (u < q))
        occ[move, i], occ[move, i + 1] = b[move], a[move]
    block = [z + spec.L for z in spec.target_block()]
    hits = occ[:, block].sum(axis=1) >= k
    est = hits.mean()
    return float(est), float(math.sqrt(est * (1 - est) / samples))


def limit_cdf(spec: PerturbationSpec, q: Scalar, k: int, x: Scalar, order: str = "stable") -> Scalar:
    """Limit of ``P(S_k(t)/t < x)``."""
    return f_k_exact(density_d(-x, q), spec, q, k, order)


def block_binomial_cdf(L: int, k: int, d: Scalar) -> Scalar:
    """At least ``k`` successes among ``L+1`` Bernoulli(d) trials."""
    return sum(math.comb(L + 1, l) * d ** l * (1 - d) ** (L + 1 - l) for l in range(k, L + 2))


def inverted_block_cdf(L: int, d: Scalar) -> Scalar:
    """At least ``L+1`` successes among ``2L+1`` Bernoulli(d) trials."""
    return sum(math.comb(2 * L + 1, l) * d ** l * (1 - d) ** (2 * L + 1 - l) for l in range(L + 1, 2 * L + 2))


# -- Monte Carlo experiments ------------------------------------------------

@dataclass
class ComparisonPoint:
    """One two-sided estimate, ``lhs`` vs ``rhs`` (either may be exact)."""

    label: str
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float

    @property
    def se(self) -> float:
        return math.hypot(self.lhs_se, self.rhs_se)

    @property
    def z(self) -> float:
        diff = self.lhs - self.rhs
        if self.se == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.se

    def passed(self, threshold: float = 3.0) -> bool:
        return abs(self.z) < threshold


@dataclass
class ComparisonReport:
    points: List[ComparisonPoint]
    threshold: float
    replicas: int
    discard_fraction: float
    extra: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(p.passed(self.threshold) for p in self.points)

    def __bool__(self) -> bool:
        return self.passed


def _freq(hits: np.ndarray) -> Tuple[float, float]:
    n = hits.size
    p = float(hits.mean())
    return p, math.sqrt(p * (1 - p) / n)


@dataclass
class PerturbedResult:
    positions: np.ndarray          # (replicas kept, N), sorted per row
    t: float
    discard_fraction: float
    replicas: int

    def cdf(self, k: int, x: float) -> Tuple[float, float]:
        """Empirical ``P(S_k/t < x)`` and its standard error."""
        if self.t > 0:
            return _freq(self.positions[:, k - 1] / self.t < x)
        return _freq(self.positions[:, k - 1] < x)

    def cdf_table(self, k: int, xs: Sequence[float]) -> List[Tuple[float, float]]:
        return [(float(x), self.cdf(k, x)[0]) for x in xs]


def run_perturbed_asep(spec: PerturbationSpec, q: float, t: float, replicas: int, stream: RngStream,
                       halfwidth: Optional[int] = None, chunk: int = 5000) -> PerturbedResult:
    """Three-color ASEP from the perturbed step; records ``S_1 <= ... <= S_N``."""
    W = halfwidth or window_halfwidth(1.0, t, spec.L)
    init = spec.configuration(W)
    res = simulate_ensemble(init, RateField.constant(1.0), t, q, replicas, stream,
                            track_color=2, n_track=spec.N, boundary="infinite", chunk=chunk)
    return PerturbedResult(res.tracked[res.kept], t, res.discard_fraction, replicas)


def verify_inhomogeneous_identity(rates: RateField, tau: float, xs: Sequence[int], q: float, replicas: int,
                                  stream: RngStream, threshold: float = 3.0) -> ComparisonReport:
    """Second class particle CDF vs. reversed-rate step density at the origin.

    Left: particles on ``z < 0``, the second class particle at 0, holes
    on ``z > 0``, rates ``r``; estimate ``P(position at tau <= x)``.  Right:
    particles on ``z <= x``, rates ``r(z, tau - t)``; estimate
    ``P(site 0 occupied at tau)``.
    """
    xs = [int(x) for x in xs]
    W = window_halfwidth(rates.r_max, tau, max((abs(x) for x in xs), default=0))
    left_ic = ParticleConfiguration.from_function(-W, W, lambda z: 1 if z < 0 else 2 if z == 0 else INF)
    left = simulate_ensemble(left_ic, rates, tau, q, replicas, stream.child(0), track_color=2, n_track=1,
                             boundary="infinite")
    pos = left.tracked[left.kept, 0]
    hat = reversed_process(rates, tau)
    points, discards = [], [left.discard_fraction]
    for j, x in enumerate(xs):
        right_ic = ParticleConfiguration.from_function(-W, W, lambda z: 1 if z <= x else INF)
        right = simulate_ensemble(right_ic, hat, tau, q, replicas, stream.child(1 + j), observe=(0, 0),
                                  boundary="infinite")
        l, lse = _freq(pos <= x)
        r, rse = _freq(right.site(0) == 1)
        points.append(ComparisonPoint(f"x={x}", l, r, lse, rse))
        discards.append(right.discard_fraction)
    return ComparisonReport(points, threshold, replicas, max(discards))


def shock_configuration(L: int, halfwidth: int) -> ParticleConfiguration:
    """Particles left of ``-L``, holes on ``-L..-1``, second class at 0, particles on ``1..L``."""
    def color(z):
        if z < -L:
            return 1
        if z < 0:
            return INF
        if z == 0:
            return 2
        return 1 if z <= L else INF
    return ParticleConfiguration.from_function(-halfwidth, halfwidth, color)


def shock_rhs_exact_t0(L: int, x: int) -> int:
    """Indicator that step-IC occupies at least ``L+1`` sites of ``[-x-L, -x+L]`` at time 0."""
    count = sum(1 for z in range(-x - L, -x + L + 1) if z <= 0)
    return int(count >= L + 1)


def verify_shock_identity(L: int, t: float, xs: Sequence[int], replicas: int, stream: RngStream,
                          threshold: float = 3.0) -> ComparisonReport:
    """TASEP shock: second class CDF vs. a particle count of step-IC TASEP.

    The right side is ``P(at least L+1 particles in [-x-L, -x+L])``.
    """
    xs = [int(x) for x in xs]
    if t == 0:
        pts = [ComparisonPoint(f"x={x}", float(0 <= x), float(shock_rhs_exact_t0(L, x)), 0.0, 0.0) for x in xs]
        return ComparisonReport(pts, threshold, 0, 0.0)
    reach = max(abs(x) for x in xs) + L
    W = window_halfwidth(1.0, t, reach)
    rates = RateField.constant(1.0)
    left = simulate_ensemble(shock_configuration(L, W), rates, t, 0.0, replicas, stream.child(0),
                             track_color=2, n_track=1, boundary="infinite")
    pos = left.tracked[left.kept, 0]
    step = ParticleConfiguration.step(-W, W, 0)
    right = simulate_ensemble(step, rates, t, 0.0, replicas, stream.child(1), observe=(-reach, reach),
                              boundary="infinite")
    occ = right.observed[right.kept] == 1
    points = []
    for x in xs:
        lo, hi = -x - L + reach, -x + L + reach
        r, rse = _freq(occ[:, lo:hi + 1].sum(axis=1) >= L + 1)
        l, lse = _freq(pos <= x)
        points.append(ComparisonPoint(f"x={x}", l, r, lse, rse))
    return ComparisonReport(points, threshold, replicas, max(left.discard_fraction, right.discard_fraction))


@dataclass
class DensityReport:
    occupation: float
    occupation_se: float
    correlation: float
    expected: float
    replicas: int
    discard_fraction: float

    def passed(self, tol: float = 0.02) -> bool:
        return abs(self.occupation - self.expected) < tol and abs(self.correlation) < tol


def density_spotcheck(q: float, t: float, replicas: int, stream: RngStream, site: int = 0) -> DensityReport:
    """Occupation at ``site`` and its correlation with ``site + 1`` for step-IC ASEP."""
    W = window_halfwidth(1.0, t, abs(site) + 1)
    res = simulate_ensemble(ParticleConfiguration.step(-W, W, 0), RateField.constant(1.0), t, q, replicas,
                            stream, observe=(site, site + 1), boundary="infinite")
    occ = (res.observed[res.kept] == 1).astype(float)
    a, b = occ[:, 0], occ[:, 1]
    p, se = _freq(a.astype(bool))
    corr = float(np.corrcoef(a, b)[0, 1]) if a.std() > 0 and b.std() > 0 else 0.0
    return DensityReport(p, se, corr, float(density_d(site / t, q)), replicas, res.discard_fraction)
