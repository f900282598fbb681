"""Hall-Littlewood processes on small sign strings, computed exactly.

Single-variable skew functions use the horizontal-strip branching
coefficients: for ``mu`` contained in ``lam`` with ``lam/mu`` a horizontal
strip and ``theta' = lam' - mu'`` (conjugate difference),

    P_{lam/mu}(a) = psi * a^{|lam|-|mu|},  psi = prod_{j in J} (1 - t^{m_j(mu)})
    Q_{lam/mu}(b) = phi * b^{|lam|-|mu|},  phi = prod_{i in I} (1 - t^{m_i(lam)})

with ``J = {j : theta'_j = 0, theta'_{j+1} = 1}`` and
``I = {i : theta'_i = 1, theta'_{i+1} = 0}``.  Both vanish on anything that
is not a horizontal strip.

The measure on chains is normalized by a product over (plus, minus) step
pairs in which the plus step comes first.  Every enumeration truncates
parts at a cap and reports a rigorous geometric bound on the neglected
mass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from . import s6v
from .particle_system import INF
from .perm_algebra import VerificationReport

Scalar = Union[Fraction, float, int]


class Partition(tuple):
    """Weakly decreasing positive parts."""

    def __new__(cls, parts: Sequence[int] = ()):
        parts = tuple(int(p) for p in parts if p != 0)
        if any(p < 0 for p in parts) or any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"not a partition: {parts}")
        return super().__new__(cls, parts)

    @property
    def length(self) -> int:
        return len(self)

    @property
    def size(self) -> int:
        return sum(self)

    def part(self, i: int) -> int:
        """``lam_i`` (1-based), zero past the end."""
        return self[i - 1] if i <= len(self) else 0

    def conjugate(self) -> "Partition":
        return Partition([sum(1 for p in self if p >= j) for j in range(1, (self[0] if self else 0) + 1)])

    def multiplicity(self, i: int) -> int:
        return sum(1 for p in self if p == i)

    def contains(self, other: "Partition") -> bool:
        return len(other) <= len(self) and all(o <= s for o, s in zip(other, self))

    def interlaces(self, other: "Partition") -> bool:
        """``self < other``: ``other_1 >= self_1 >= other_2 >= self_2 >= ...``"""
        n = max(len(self), len(other)) + 1
        return all(other.part(i) >= self.part(i) >= other.part(i + 1) for i in range(1, n + 1))

    def __repr__(self) -> str:
        return f"Partition({list(self)})"


EMPTY = Partition()


def is_horizontal_strip(lam: Partition, mu: Partition) -> bool:
    return mu.interlaces(lam)


def _fast(parts) -> Partition:
    """Trusted constructor for already-sorted parts (trailing zeros dropped)."""
    parts = tuple(parts)
    n = len(parts)
    while n and parts[n - 1] == 0:
        n -= 1
    return tuple.__new__(Partition, parts[:n])


def _added_columns(lam: Partition, mu: Partition) -> set:
    cols = set()
    for i, top in enumerate(lam):
        cols.update(range(mu.part(i + 1) + 1, top + 1))
    return cols


@lru_cache(maxsize=None)
def psi(lam: Partition, mu: Partition, t: Scalar) -> Scalar:
    if not is_horizontal_strip(lam, mu):
        return 0
    added = _added_columns(lam, mu)
    out = 1
    for j in {c - 1 for c in added}:
        if j >= 1 and j not in added:
            out *= 1 - t ** mu.multiplicity(j)
    return out


@lru_cache(maxsize=None)
def phi(lam: Partition, mu: Partition, t: Scalar) -> Scalar:
    if not is_horizontal_strip(lam, mu):
        return 0
    added = _added_columns(lam, mu)
    out = 1
    for i in added:
        if i + 1 not in added:
            out *= 1 - t ** lam.multiplicity(i)
    return out


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(p)


@lru_cache(maxsize=4096)
def _power(x: Scalar, k: int) -> Scalar:
    return x ** k


def skew_P_single(lam: Partition, mu: Partition, a: Scalar, t: Scalar) -> Scalar:
    """``P_{lam/mu}`` in one variable ``a``."""
    lam, mu = _as_partition(lam), _as_partition(mu)
    w = psi(lam, mu, t)
    return w * _power(a, lam.size - mu.size) if w else 0


def skew_Q_single(lam: Partition, mu: Partition, b: Scalar, t: Scalar) -> Scalar:
    """``Q_{lam/mu}`` in one variable ``b``."""
    lam, mu = _as_partition(lam), _as_partition(mu)
    w = phi(lam, mu, t)
    return w * _power(b, lam.size - mu.size) if w else 0


def hl_P_symmetrized(lam: Sequence[int], xs: Sequence[Scalar], t: Scalar) -> Scalar:
    """``P_lam(x_1..x_n)`` by symmetrization over ``S_n`` (oracle; distinct ``x``)."""
    lam = Partition(lam)
    n = len(xs)
    if len(lam) > n:
        return 0
    parts = list(lam) + [0] * (n - len(lam))
    mult = [parts.count(v) for v in set(parts)]
    v = 1
    for m in mult:
        for j in range(1, m + 1):
            v *= sum(t ** i for i in range(j))      # (1 - t^j) / (1 - t)
    total = 0
    for w in itertools.permutations(range(n)):
        y = [xs[i] for i in w]
        term = 1
        for i in range(n):
            term *= y[i] ** parts[i]
        for i in range(n):
            for j in range(i + 1, n):
                term *= (y[i] - t * y[j]) / (y[i] - y[j])
        total += term
    return total / v


def hl_Q_factor(lam: Sequence[int], t: Scalar) -> Scalar:
    """``b_lam(t)`` with ``Q_lam = b_lam P_lam``."""
    lam = Partition(lam)
    out = 1
    for i in set(lam):
        for j in range(1, lam.multiplicity(i) + 1):
            out *= 1 - t ** j
    return out


def partitions_in_box(rows: int, cap: int) -> Iterator[Partition]:
    """All partitions with at most ``rows`` parts, each at most ``cap``."""
    def rec(left, bound):
        if left == 0:
            yield ()
            return
        yield ()
        for p in range(bound, 0, -1):
            for rest in rec(left - 1, p):
                yield (p,) + rest
    for parts in rec(rows, cap):
        yield Partition(parts)


def horizontal_strips_over(mu: Partition, cap: int, max_len: int) -> Iterator[Partition]:
    """``lam`` with ``lam/mu`` a horizontal strip, parts ``<= cap``, length ``<= max_len``."""
    n = min(len(mu) + 1, max_len)
    ranges = []
    for i in range(1, n + 1):
        lo = mu.part(i)
        hi = cap if i == 1 else mu.part(i - 1)
        if lo > hi:
            return
        ranges.append(range(lo, hi + 1))
    for parts in itertools.product(*ranges):
        yield _fast(parts)


def horizontal_strips_under(lam: Partition) -> Iterator[Partition]:
    """``mu`` with ``lam/mu`` a horizontal strip."""
    ranges = [range(lam.part(i + 1), lam.part(i) + 1) for i in range(1, len(lam) + 1)]
    for parts in itertools.product(*ranges):
        yield _fast(parts)


@dataclass(frozen=True)
class SignString:
    """Boundary word ``s(1..M+N)`` over ``{+1, -1}``, starting ``+`` and ending ``-``."""

    signs: Tuple[int, ...]

    def __post_init__(self):
        s = tuple(1 if v in (1, "+") else -1 if v in (-1, "-") else None for v in self.signs)
        if None in s:
            raise ValueError("sign string entries must be + or -")
        if len(s) < 2 or s[0] != 1 or s[-1] != -1:
            raise ValueError("sign string must start with + and end with -")
        object.__setattr__(self, "signs", s)

    @classmethod
    def parse(cls, text: str) -> "SignString":
        return cls(tuple(ch for ch in text if ch in "+-"))

    def __len__(self) -> int:
        return len(self.signs)

    def __str__(self) -> str:
        return "".join("+" if v == 1 else "-" for v in self.signs)

    @property
    def M(self) -> int:
        return sum(1 for v in self.signs if v == 1)

    @property
    def N(self) -> int:
        return sum(1 for v in self.signs if v == -1)

    def p(self, i: int) -> int:
        return sum(1 for v in self.signs[:i] if v == 1)

    def m(self, i: int) -> int:
        return sum(1 for v in self.signs[:i] if v == -1)

    def boundary_points(self) -> List[Tuple[int, int]]:
        """Rim points ``(x_i, y_i)``, ``i = 1..M+N-1``."""
        pts = [(0, self.N - 1)]
        for v in self.signs[1:-1]:
            x, y = pts[-1]
            pts.append((x + 1, y) if v == 1 else (x, y - 1))
        return pts

    def column_heights(self) -> List[int]:
        """Ferrers diagram whose top-right boundary this word traces."""
        h, cols = self.N, []
        for v in self.signs:
            if v == 1:
                cols.append(h)
            else:
                h -= 1
        return cols

    def diagram(self) -> s6v.SkewDiagram:
        return s6v.SkewDiagram.from_shapes(self.column_heights())

    def pairs(self) -> List[Tuple[int, int]]:
        """``(plus step, minus step)`` index pairs with the plus step first (1-based)."""
        return [(i, j) for i in range(1, len(self) + 1) for j in range(i + 1, len(self) + 1)
                if self.signs[i - 1] == 1 and self.signs[j - 1] == -1]


@dataclass(frozen=True)
class HLProcessSpec:
    a: Tuple[Scalar, ...]
    b: Tuple[Scalar, ...]
    t: Scalar
    s: SignString
    cap: Optional[int] = None

    def __post_init__(self):
        if len(self.a) != self.s.M or len(self.b) != self.s.N:
            raise ValueError(f"need {self.s.M} a's and {self.s.N} b's for sign string {self.s}")
        if min(self.a + self.b) < 0:
            raise ValueError("specializations must be nonnegative")
        if not 0 <= self.t < 1:
            raise ValueError("t must lie in [0, 1)")
        if self.rho >= 1:
            raise ValueError("need a_i b_j < 1 for all pairs")

    @property
    def rho(self) -> Scalar:
        return max(x * y for x in self.a for y in self.b)

    def step_variable(self, i: int) -> Scalar:
        """Variable used by step ``i`` (1-based)."""
        if self.s.signs[i - 1] == 1:
            return self.a[self.s.p(i) - 1]
        return self.b[self.s.N - self.s.m(i)]


def chain_weight(chain: Sequence[Sequence[int]], spec: HLProcessSpec) -> Scalar:
    """Product of the ``M+N`` single-variable factors along ``empty, chain, empty``."""
    K = len(spec.s)
    if len(chain) != K - 1:
        raise ValueError(f"chain must have {K - 1} partitions")
    lams = [EMPTY] + [Partition(c) for c in chain] + [EMPTY]
    w = 1
    for i in range(1, K + 1):
        var = spec.step_variable(i)
        if spec.s.signs[i - 1] == 1:
            w *= skew_P_single(lams[i], lams[i - 1], var, spec.t)
        else:
            w *= skew_Q_single(lams[i - 1], lams[i], var, spec.t)
        if w == 0:
            return 0
    return w


def normalization_product(spec: HLProcessSpec) -> Scalar:
    out = 1
    for i, j in spec.s.pairs():
        z = spec.step_variable(i) * spec.step_variable(j)
        out *= (1 - spec.t * z) / (1 - z)
    return out


def tail_bound(spec: HLProcessSpec, cap: int) -> float:
    """Upper bound on the weight of chains with some part above ``cap``.

    Such chains have total degree ``D > cap``; the degree-``D`` part of the
    normalization is at most ``C(D+K-1, K-1) rho^D`` for ``K`` pairs.
    """
    K = len(spec.s.pairs())
    rho = float(spec.rho)
    if K == 0 or rho == 0:
        return 0.0
    total, d = 0.0, cap + 1
    while True:
        term = math.comb(d + K - 1, K - 1) * rho ** d
        total += term
        if term < 1e-30 * max(total, 1e-300) or (d > cap + 10 and term < 1e-40):
            return total
        d += 1


def choose_cap(spec: HLProcessSpec, tol: float = 1e-12) -> int:
    cap = 1
    while tail_bound(spec, cap) > tol:
        cap += 1
        if cap > 10_000:
            raise ValueError("no cap reaches the requested tail tolerance")
    return cap


def _propagate(spec: HLProcessSpec, cap: int) -> Dict[Tuple[Partition, Tuple[int, ...]], Scalar]:
    """Chain weights keyed by (last partition, lengths so far), parts ``<= cap``."""
    states: Dict[Tuple[Partition, Tuple[int, ...]], Scalar] = {(EMPTY, ()): 1}
    K = len(spec.s)
    for i in range(1, K + 1):
        plus = spec.s.signs[i - 1] == 1
        var = spec.step_variable(i)
        nxt: Dict[Tuple[Partition, Tuple[int, ...]], Scalar] = {}
        for (mu, lengths), w in states.items():
            if plus:
                cands = ((lam, skew_P_single(lam, mu, var, spec.t))
                         for lam in horizontal_strips_over(mu, cap, spec.s.p(i)))
            elif i == K:
                cands = ((EMPTY, skew_Q_single(mu, EMPTY, var, spec.t)),)
            else:
                cands = ((lam, skew_Q_single(mu, lam, var, spec.t)) for lam in horizontal_strips_under(mu))
            for lam, f in cands:
                if f == 0:
                    continue
                key = (lam, lengths + ((len(lam),) if i < K else ()))
                nxt[key] = nxt.get(key, 0) + w * f
        states = nxt
    return states


@dataclass
class NormalizationReport:
    product: Scalar
    truncated_sum: Scalar
    tail: float
    cap: int

    @property
    def consistent(self) -> bool:
        gap = float(self.product - self.truncated_sum)
        return -1e-12 * float(self.product) <= gap <= self.tail + 1e-12 * float(self.product)


def normalization(spec: HLProcessSpec, cap: Optional[int] = None, tol: float = 1e-12) -> NormalizationReport:
    """Pairwise product next to the truncated sum of all chain weights."""
    cap = cap or spec.cap or choose_cap(spec, tol)
    states = _propagate(spec, cap)
    return NormalizationReport(normalization_product(spec), sum(states.values()), tail_bound(spec, cap), cap)


@dataclass
class LengthLaw:
    probabilities: Dict[Tuple[int, ...], Scalar]
    tail: float                 # bound on missing probability
    cap: int
    normalization: Optional[NormalizationReport] = None


def length_vector_distribution(spec: HLProcessSpec, cap: Optional[int] = None, tol: float = 1e-12) -> LengthLaw:
    """Law of ``(len lam(1), ..., len lam(M+N-1))``.

    Masses are normalized by the exact product, so they sum to one up to at
    most ``tail / product``.
    """
    cap = cap or spec.cap or choose_cap(spec, tol)
    states = _propagate(spec, cap)
    Z = normalization_product(spec)
    out: Dict[Tuple[int, ...], Scalar] = {}
    for (_, lengths), w in states.items():
        out[lengths] = out.get(lengths, 0) + w
    tail = tail_bound(spec, cap)
    norm = NormalizationReport(Z, sum(out.values()), tail, cap)
    return LengthLaw({k: v / Z for k, v in out.items()}, tail / float(Z), cap, norm)


# -- link with the vertex model -------------------------------------------

def rim_height_law(spec: HLProcessSpec) -> Dict[Tuple[int, ...], Scalar]:
    """Law of the rim heights of the one-color model on the Ferrers diagram.

    Rows enter with color 1, columns with holes, and ``x(m, n) = a_{m+1} b_{n+1}``.
    Computed from full path configurations via ``height_function``.
    """
    d = spec.s.diagram()
    params = s6v.VertexParamField.product(d, spec.a, spec.b)
    boundary = [1] * spec.s.N + [INF] * spec.s.M
    law: Dict[Tuple[int, ...], Scalar] = {}
    pts = spec.s.boundary_points()
    for conf, w in s6v.enumerate_configurations(d, params, spec.t, boundary):
        key = tuple(s6v.height_function(conf, x + 1, y) for x, y in pts)
        law[key] = law.get(key, 0) + w
    return law


def corner_colored_height_law(spec: HLProcessSpec) -> Dict[Tuple[int, ...], Scalar]:
    """Law of the colored heights at the top-right corner of the rotated diagram.

    Packed input, with the parameter field rotated along with the diagram.
    """
    d = spec.s.diagram()
    rot = d.rotate180()
    params = s6v.VertexParamField.product(d, spec.a, spec.b).rotated(d)
    m, n = s6v.corner_height_point(rot)
    law: Dict[Tuple[int, ...], Scalar] = {}
    for conf, w in s6v.enumerate_configurations(rot, params, spec.t, "packed"):
        key = s6v.colored_heights(conf, m, n)
        law[key] = law.get(key, 0) + w
    return law


def hl_height_law(spec: HLProcessSpec, cap: Optional[int] = None, tol: float = 1e-12) -> LengthLaw:
    """Law of ``(y_i + 1 - len lam(i))`` under the process."""
    lengths = length_vector_distribution(spec, cap, tol)
    ys = [y for _, y in spec.s.boundary_points()]
    probs: Dict[Tuple[int, ...], Scalar] = {}
    for vec, p in lengths.probabilities.items():
        key = tuple(y + 1 - l for y, l in zip(ys, vec))
        probs[key] = probs.get(key, 0) + p
    return LengthLaw(probs, lengths.tail, lengths.cap, lengths.normalization)


@dataclass
class HeightMatchReport:
    passed: bool
    corner_vs_rim: VerificationReport
    rim_vs_hl: float
    corner_vs_hl: float
    tail: float
    normalization: NormalizationReport
    laws: Dict[str, Dict] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


def _sup_gap(lhs: Dict, rhs: Dict) -> float:
    return max((abs(float(lhs.get(k, 0) - rhs.get(k, 0))) for k in set(lhs) | set(rhs)), default=0.0)


def verify_colored_height_match(s: SignString, a: Sequence[Scalar], b: Sequence[Scalar], t: Scalar,
                                tol: float = 1e-10, cap: Optional[int] = None) -> HeightMatchReport:
    """Three-way comparison of height laws.

    The rotated colored model and the one-color model must agree exactly;
    both must agree with the process within the truncation tail (plus
    ``tol``), and the pairwise product must match the truncated sum.
    """
    spec = HLProcessSpec(tuple(a), tuple(b), t, s, cap)
    if len(s) > 6:
        raise ValueError("height match is limited to M+N <= 6")
    corner = corner_colored_height_law(spec)
    rim = rim_height_law(spec)
    hl = hl_height_law(spec, cap, min(tol, 1e-12))
    norm = hl.normalization
    exact = s6v._compare_laws(corner, rim, 0.0)
    g1, g2 = _sup_gap(rim, hl.probabilities), _sup_gap(corner, hl.probabilities)
    ok = exact.passed and g1 <= hl.tail + tol and g2 <= hl.tail + tol and norm.consistent
    return HeightMatchReport(ok, exact, g1, g2, hl.tail, norm,
                             {"corner": corner, "rim": rim, "process": hl.probabilities})
