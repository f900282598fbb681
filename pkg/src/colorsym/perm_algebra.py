"""Distributions on S_N generated by sequences of random adjacent swaps.

A permutation ``sigma`` is stored in one-line notation with values in
``1..N``: ``sigma[i-1]`` is the line occupied by color ``i``.  Composition
follows ``(s2 * s1)(i) = s2(s1(i))``.  The operator ``w_{t,x}`` with
``t = (A, A+1)`` acts on a basis element ``sigma`` by

    (1 - x) sigma + x t.sigma      if sigma^{-1}(A) < sigma^{-1}(A+1)
    (1 - qx) sigma + qx t.sigma    otherwise

and is extended linearly.  All routines accept either ``Fraction`` or float
scalars; exact verification uses ``Fraction`` throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union

Scalar = Union[Fraction, float, int]


class Permutation(tuple):
    """Bijection of ``{1..N}`` in one-line notation."""

    def __new__(cls, images: Iterable[int]):
        images = tuple(int(v) for v in images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(images)}: {images}")
        return super().__new__(cls, images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def transposition(cls, n: int, a: int) -> "Permutation":
        """The adjacent transposition ``(a, a+1)`` in ``S_n``."""
        if not 1 <= a < n:
            raise ValueError(f"transposition ({a},{a + 1}) not in S_{n}")
        img = list(range(1, n + 1))
        img[a - 1], img[a] = a + 1, a
        return cls(img)

    @property
    def n(self) -> int:
        return len(self)

    def __call__(self, i: int) -> int:
        return self[i - 1]

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, v in enumerate(self, start=1):
            inv[v - 1] = i
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return ``self * other``, i.e. ``i -> self(other(i))``."""
        if len(other) != len(self):
            raise ValueError("size mismatch")
        return Permutation(self[j - 1] for j in other)

    __mul__ = compose

    def left_swap(self, a: int) -> "Permutation":
        """``(a, a+1) * self``: exchange the values ``a`` and ``a+1``."""
        return Permutation(a + 1 if v == a else a if v == a + 1 else v for v in self)

    def right_swap(self, i: int) -> "Permutation":
        """``self * (i, i+1)``: exchange the entries at ``i`` and ``i+1``."""
        img = list(self)
        img[i - 1], img[i] = img[i], img[i - 1]
        return Permutation(img)

    def inversions(self) -> int:
        return sum(1 for i, j in itertools.combinations(range(len(self)), 2) if self[i] > self[j])

    def __repr__(self) -> str:
        return f"Permutation({list(self)})"


@dataclass(frozen=True)
class SwapSpec:
    """Transposition ``(position, position+1)`` with swap parameter ``x``."""

    position: int
    x: Scalar

    def check(self, n: int) -> None:
        if not 1 <= self.position <= n - 1:
            raise ValueError(f"swap position {self.position} outside 1..{n - 1}")


@dataclass
class AlgebraDistribution:
    """Sparse element of the group algebra, ``{permutation: coefficient}``."""

    terms: Dict[Permutation, Scalar] = field(default_factory=dict)
    scalar_mode: str = "exact"

    @classmethod
    def point(cls, sigma: Permutation, scalar_mode: str = "exact") -> "AlgebraDistribution":
        one = Fraction(1) if scalar_mode == "exact" else 1.0
        return cls({Permutation(sigma): one}, scalar_mode)

    @property
    def n(self) -> int:
        return len(next(iter(self.terms)))

    def __getitem__(self, sigma) -> Scalar:
        return self.terms.get(Permutation(sigma), 0)

    def __iter__(self) -> Iterator[Permutation]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def total(self) -> Scalar:
        return sum(self.terms.values(), Fraction(0) if self.scalar_mode == "exact" else 0.0)

    def is_stochastic(self, tol: float = 0.0) -> bool:
        if any(c < -tol for c in self.terms.values()):
            return False
        return abs(self.total() - 1) <= tol

    def max_discrepancy(self, other: "AlgebraDistribution") -> Scalar:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self[k] - other[k]) for k in keys), default=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraDistribution):
            return NotImplemented
        return self.max_discrepancy(other) == 0

    def relabel(self, fn) -> "AlgebraDistribution":
        out: Dict[Permutation, Scalar] = {}
        for k, v in self.terms.items():
            key = fn(k)
            out[key] = out.get(key, 0) + v
        return AlgebraDistribution(out, self.scalar_mode)


def _add(acc: Dict[Permutation, Scalar], key: Permutation, value: Scalar) -> None:
    if value == 0:
        return
    new = acc.get(key, 0) + value
    if new == 0:
        acc.pop(key, None)
    else:
        acc[key] = new


def apply_w(dist: AlgebraDistribution, swap: SwapSpec, q: Scalar) -> AlgebraDistribution:
    """Apply ``w_{(A,A+1),x}`` to ``dist``; zero coefficients are pruned."""
    if not dist.terms:
        return AlgebraDistribution({}, dist.scalar_mode)
    swap.check(dist.n)
    a, x = swap.position, swap.x
    out: Dict[Permutation, Scalar] = {}
    for sigma, c in dist.terms.items():
        inv = sigma.inverse()
        p = x if inv(a) < inv(a + 1) else q * x
        _add(out, sigma, c * (1 - p))
        _add(out, sigma.left_swap(a), c * p)
    return AlgebraDistribution(out, dist.scalar_mode)


def one_step_recursion(dist: AlgebraDistribution, swap: SwapSpec, q: Scalar) -> AlgebraDistribution:
    """Coefficientwise form of one ``w`` step.

    For every target ``pi`` (with ``pi_hat = t pi``)::

        f'(pi) = [pi^-1(A) < pi^-1(A+1)] (f(pi)(1-x) + f(pi_hat) q x)
               + [pi^-1(A) > pi^-1(A+1)] (f(pi)(1-qx) + f(pi_hat) x)
    """
    if not dist.terms:
        return AlgebraDistribution({}, dist.scalar_mode)
    swap.check(dist.n)
    a, x = swap.position, swap.x
    targets = set(dist.terms) | {s.left_swap(a) for s in dist.terms}
    out: Dict[Permutation, Scalar] = {}
    for pi in targets:
        f_pi, f_hat = dist[pi], dist[pi.left_swap(a)]
        inv = pi.inverse()
        if inv(a) < inv(a + 1):
            val = f_pi * (1 - x) + f_hat * q * x
        else:
            val = f_pi * (1 - q * x) + f_hat * x
        _add(out, pi, val)
    return AlgebraDistribution(out, dist.scalar_mode)


def _coerce_mode(s: Permutation, swaps: Sequence[SwapSpec], q: Scalar) -> str:
    scalars = [q] + [sw.x for sw in swaps]
    return "float" if any(isinstance(v, float) for v in scalars) else "exact"


def forward_coefficients(s: Sequence[int], swaps: Sequence[SwapSpec], q: Scalar,
                         scalar_mode: str | None = None) -> AlgebraDistribution:
    """``pi -> f_n(s -> pi)``: ``swaps[0]`` acts first, ``swaps[-1]`` last."""
    s = Permutation(s)
    mode = scalar_mode or _coerce_mode(s, swaps, q)
    dist = AlgebraDistribution.point(s, mode)
    for sw in swaps:
        dist = apply_w(dist, sw, q)
    return dist


def backward_coefficients(s: Sequence[int], swaps: Sequence[SwapSpec], q: Scalar,
                          scalar_mode: str | None = None) -> AlgebraDistribution:
    """``pi -> f~_n(s -> pi)``: same swaps applied last-to-first."""
    return forward_coefficients(s, list(reversed(swaps)), q, scalar_mode)


def path_oracle(s: Sequence[int], swaps: Sequence[SwapSpec], q: Scalar) -> Dict[Permutation, Scalar]:
    """Brute force over all ``2^n`` swap outcomes.

    Works on the line -> color array directly and multiplies the branch
    probabilities of every path; it shares no code with :func:`apply_w`.
    """
    n = len(s)
    line_color = [0] * n
    for color, line in enumerate(s, start=1):
        line_color[line - 1] = color
    out: Dict[Permutation, Scalar] = {}
    for outcome in itertools.product((False, True), repeat=len(swaps)):
        lc = list(line_color)
        weight: Scalar = 1
        for fired, sw in zip(outcome, swaps):
            i = sw.position - 1
            p = sw.x if lc[i] < lc[i + 1] else q * sw.x
            weight = weight * (p if fired else 1 - p)
            if weight == 0:
                break
            if fired:
                lc[i], lc[i + 1] = lc[i + 1], lc[i]
        if weight == 0:
            continue
        pos = [0] * n
        for line, color in enumerate(lc, start=1):
            pos[color - 1] = line
        key = Permutation(pos)
        out[key] = out.get(key, 0) + weight
    return {k: v for k, v in out.items() if v != 0}


@dataclass
class VerificationReport:
    """Outcome of an exact identity check."""

    passed: bool
    max_discrepancy: Scalar
    checked: int
    details: List[Tuple] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def verify_symmetry(swaps: Sequence[SwapSpec], q: Scalar, n: int, tol: float = 0.0) -> VerificationReport:
    """Check ``f_n(e -> pi) == f~_n(e -> pi^{-1})`` for every ``pi``."""
    e = Permutation.identity(n)
    fwd = forward_coefficients(e, swaps, q)
    bwd = backward_coefficients(e, swaps, q)
    keys = set(fwd.terms) | {p.inverse() for p in bwd.terms}
    worst: Scalar = 0
    bad = []
    for pi in keys:
        d = abs(fwd[pi] - bwd[pi.inverse()])
        if d > worst:
            worst = d
        if d > tol:
            bad.append((pi, fwd[pi], bwd[pi.inverse()]))
    return VerificationReport(not bad, worst, len(keys), bad)


def verify_recursion(s: Sequence[int], i: int, swaps: Sequence[SwapSpec], q: Scalar,
                     tol: float = 0.0) -> VerificationReport:
    """Check the exchange relation for ``T = (i, i+1)`` acting on the right.

    Requires ``s(i) < s(i+1)``; then for every ``pi``::

        f(sT -> pi) = f(s -> piT) + (1-q) f(s -> pi)   if pi(i) > pi(i+1)
        f(sT -> pi) = q f(s -> piT)                    if pi(i) < pi(i+1)
    """
    s = Permutation(s)
    n = s.n
    if not 1 <= i < n:
        raise ValueError(f"T=({i},{i + 1}) not in S_{n}")
    if not s(i) < s(i + 1):
        raise ValueError(f"precondition s({i}) < s({i + 1}) violated for {list(s)}")
    f_s = forward_coefficients(s, swaps, q)
    f_st = forward_coefficients(s.right_swap(i), swaps, q)
    keys = set(f_st.terms) | set(f_s.terms) | {p.right_swap(i) for p in f_s.terms}
    worst: Scalar = 0
    bad = []
    for pi in keys:
        pit = pi.right_swap(i)
        if pi(i) > pi(i + 1):
            rhs = f_s[pit] + (1 - q) * f_s[pi]
        else:
            rhs = q * f_s[pit]
        d = abs(f_st[pi] - rhs)
        worst = max(worst, d)
        if d > tol:
            bad.append((pi, f_st[pi], rhs))
    return VerificationReport(not bad, worst, len(keys), bad)


def random_swaps(rng, n: int, count: int, denominator: int = 12) -> List[SwapSpec]:
    """Random swap list with rational ``x`` in ``{0, 1/d, ..., 1}``."""
    return [SwapSpec(int(rng.integers(1, n)), Fraction(int(rng.integers(0, denominator + 1)), denominator))
            for _ in range(count)]
