"""Colored stochastic six-vertex model.

Two geometries are covered.  On the line, one discrete time step applies
commuting asymmetric swaps on every other bond (``s6v_step``).  In the
quadrant, colored up-right paths live on a skew Ferrers diagram; each
vertex receives colors from its left and bottom edges and emits them
upward and to the right.

Edges are named by the vertex they enter: ``('h', m, n)`` runs from
``(m-1, n)`` to ``(m, n)`` and ``('v', m, n)`` from ``(m, n-1)`` to
``(m, n)``.  Every boundary edge gets the key ``x - y`` of its midpoint.
Input keys increase counterclockwise from the top-left corner, and output
keys decrease counterclockwise from the bottom-right corner.  A vertex at
``(m, n)`` reads its left and bottom edges at keys ``m - n -/+ 1/2`` and
writes its top and right edges at the same two keys.  Any down-right cut
through the diagram therefore has the same key set as the input, and a
vertex is an adjacent transposition on cut positions.

Vertex rule for incoming colors ``left`` and ``bottom``: the paths go
straight through with probability ``g`` if ``left < bottom`` and ``q g``
if ``left > bottom``; otherwise both turn.  Here
``g = (1 - x) / (1 - q x)`` for the vertex parameter ``x``.  Equal colors
pass unchanged.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .particle_system import INF, ParticleConfiguration
from .perm_algebra import Permutation, SwapSpec, VerificationReport, forward_coefficients

Scalar = Union[Fraction, float, int]
Point = Tuple[int, int]
Edge = Tuple[str, int, int]

MAX_ENUMERATION_SIZE = 7


def straight_probability(x: Scalar, q: Scalar) -> Scalar:
    """Probability that increasing colors go straight through a vertex."""
    return (1 - x) / (1 - q * x)


class VertexParamField:
    """Parameters ``x`` indexed by lattice point; unset points read 0.

    The same container serves the quadrant (``(m, n)`` keys) and the line
    (``(z, T)`` keys).
    """

    def __init__(self, values: Mapping[Point, Scalar] = None):
        vals = {}
        for key, x in (values or {}).items():
            if not 0 <= x < 1:
                raise ValueError(f"parameter at {key} must lie in [0, 1), got {x}")
            vals[(int(key[0]), int(key[1]))] = x
        self._values = vals

    @classmethod
    def constant(cls, points: Iterable[Point], x: Scalar) -> "VertexParamField":
        return cls({p: x for p in points})

    @classmethod
    def from_function(cls, points: Iterable[Point], fn: Callable[[int, int], Scalar]) -> "VertexParamField":
        return cls({p: fn(*p) for p in points})

    @classmethod
    def product(cls, diagram: "SkewDiagram", a: Sequence[Scalar], b: Sequence[Scalar]) -> "VertexParamField":
        """``x(m, n) = a[m - m0] * b[n - n0]`` with ``(m0, n0)`` the lower-left corner."""
        m0, n0 = diagram.m_min, diagram.n_min
        return cls({(m, n): a[m - m0] * b[n - n0] for m, n in diagram.points})

    def __getitem__(self, key: Point) -> Scalar:
        return self._values.get((int(key[0]), int(key[1])), 0)

    def items(self):
        return self._values.items()

    def rotated(self, diagram: "SkewDiagram") -> "VertexParamField":
        """Field moved along with ``diagram.rotate180()``."""
        return VertexParamField({diagram.rotate_point(p): x for p, x in self._values.items()})

    def is_exact(self) -> bool:
        return not any(isinstance(v, float) for v in self._values.values())


def s6v_step(config: ParticleConfiguration, T: int, params: VertexParamField, q: Scalar,
             rng: np.random.Generator) -> ParticleConfiguration:
    """One parallel update: ``W_{(z,z+1), x(z,T)}`` on all bonds ``z = T mod 2``.

    The bonds touched at one time are disjoint, so the order is immaterial.
    Bonds leaving the window are skipped.
    """
    c = config.colors.copy()
    zmin = config.zmin
    first = zmin + ((T - zmin) % 2)
    for z in range(first, config.zmax, 2):
        x = float(params[(z, T)])
        if x == 0:
            continue
        i = z - zmin
        u = rng.random()
        p = x if c[i] < c[i + 1] else q * x if c[i] > c[i + 1] else 0.0
        if u < p:
            c[i], c[i + 1] = c[i + 1], c[i]
    return ParticleConfiguration(zmin, c)


def run_s6v(config: ParticleConfiguration, params: VertexParamField, q: Scalar, steps: int,
            rng: np.random.Generator, start: int = 0) -> ParticleConfiguration:
    for T in range(start, start + steps):
        config = s6v_step(config, T, params, q, rng)
    return config


@dataclass(frozen=True)
class SkewDiagram:
    """Finite set difference of two Ferrers diagrams in the quadrant."""

    points: frozenset

    def __post_init__(self):
        pts = frozenset((int(m), int(n)) for m, n in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("empty diagram")
        if min(min(p) for p in pts) < 0:
            raise ValueError("diagram must lie in the quadrant")
        outer = {(a, b) for m, n in pts for a in range(m + 1) for b in range(n + 1)}
        inner = outer - pts
        for m, n in inner:
            if (m > 0 and (m - 1, n) not in inner) or (n > 0 and (m, n - 1) not in inner):
                raise ValueError("not a skew Ferrers diagram")
        keys = sorted(self._input_keys())
        if keys != list(range(keys[0], keys[0] + 2 * len(keys), 2)):
            raise ValueError("diagram boundary is not a single down-right path (disconnected shape)")

    @classmethod
    def from_shapes(cls, outer: Sequence[int], inner: Sequence[int] = ()) -> "SkewDiagram":
        """Column heights of the outer and inner Ferrers diagrams."""
        inner = list(inner) + [0] * (len(outer) - len(inner))
        if len(inner) > len(outer):
            raise ValueError("inner shape wider than outer shape")
        for seq in (outer, inner):
            if any(b > a for a, b in zip(seq, seq[1:])) or any(v < 0 for v in seq):
                raise ValueError("column heights must be nonnegative and nonincreasing")
        if any(i > o for o, i in zip(outer, inner)):
            raise ValueError("inner shape not contained in outer shape")
        return cls(frozenset((m, n) for m, (o, i) in enumerate(zip(outer, inner)) for n in range(i, o)))

    @classmethod
    def rectangle(cls, M: int, N: int) -> "SkewDiagram":
        return cls.from_shapes([N] * M)

    @property
    def m_min(self) -> int:
        return min(m for m, _ in self.points)

    @property
    def m_max(self) -> int:
        return max(m for m, _ in self.points)

    @property
    def n_min(self) -> int:
        return min(n for _, n in self.points)

    @property
    def n_max(self) -> int:
        return max(n for _, n in self.points)

    @property
    def M(self) -> int:
        return self.m_max - self.m_min + 1

    @property
    def N(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def size(self) -> int:
        return self.M + self.N

    def column(self, m: int) -> List[int]:
        return sorted(n for a, n in self.points if a == m)

    def row(self, n: int) -> List[int]:
        return sorted(m for m, b in self.points if b == n)

    def is_ferrers(self) -> bool:
        return all((a, b) in self.points for m, n in self.points for a in range(m + 1) for b in range(n + 1))

    def rotate_point(self, p: Point) -> Point:
        return (self.m_min + self.m_max - p[0], self.n_min + self.n_max - p[1])

    def rotate180(self) -> "SkewDiagram":
        return SkewDiagram(frozenset(self.rotate_point(p) for p in self.points))

    # boundary edges, keyed by 2 * (x - y) of the edge midpoint
    def input_edges(self) -> List[Edge]:
        """Incoming edges in counterclockwise order from the top-left corner."""
        edges = [("h", self.row(n)[0], n) for n in range(self.n_min, self.n_max + 1)]
        edges += [("v", m, self.column(m)[0]) for m in range(self.m_min, self.m_max + 1)]
        return sorted(edges, key=edge_key)

    def output_edges(self) -> List[Edge]:
        """Outgoing edges in counterclockwise order from the bottom-right corner."""
        edges = [("h", self.row(n)[-1] + 1, n) for n in range(self.n_min, self.n_max + 1)]
        edges += [("v", m, self.column(m)[-1] + 1) for m in range(self.m_min, self.m_max + 1)]
        return sorted(edges, key=edge_key, reverse=True)

    def _input_keys(self) -> List[int]:
        rows = {n for _, n in self.points}
        cols = {m for m, _ in self.points}
        return [edge_key(("h", self.row(n)[0], n)) for n in rows] + \
               [edge_key(("v", m, self.column(m)[0])) for m in cols]

    def sweep(self) -> List[Point]:
        """Vertices row by row from the bottom, left to right."""
        return sorted(self.points, key=lambda p: (p[1], p[0]))

    def vertex_slot(self, p: Point, base: int) -> int:
        """Cut index of the left/top edge of vertex ``p`` (bottom/right is +1)."""
        return (2 * (p[0] - p[1]) - 1 - base) // 2

    def has_h_edge(self, m: int, n: int) -> bool:
        return (m, n) in self.points or (m - 1, n) in self.points


def edge_key(edge: Edge) -> int:
    kind, m, n = edge
    return 2 * (m - n) + 1 if kind == "v" else 2 * (m - n) - 1


def _boundary_colors(diagram: SkewDiagram, boundary) -> List[int]:
    if isinstance(boundary, str):
        if boundary != "packed":
            raise ValueError(f"unknown boundary {boundary!r}")
        return list(range(1, diagram.size + 1))
    colors = [INF if (isinstance(c, float) and c == float("inf")) else int(c) for c in boundary]
    if len(colors) != diagram.size:
        raise ValueError(f"boundary needs {diagram.size} colors, got {len(colors)}")
    return colors


@dataclass
class PathConfiguration:
    """Colors on every edge of a sampled diagram."""

    diagram: SkewDiagram
    edges: Dict[Edge, int]

    @property
    def inputs(self) -> Tuple[int, ...]:
        return tuple(self.edges[e] for e in self.diagram.input_edges())

    @property
    def outputs(self) -> Tuple[int, ...]:
        """Colors at output positions ``1..M+N``."""
        return tuple(self.edges[e] for e in self.diagram.output_edges())

    def permutation(self) -> Permutation:
        """``color -> output position``; needs a bijective ``1..M+N`` input."""
        return output_permutation(self.outputs)

    def check_conservation(self) -> bool:
        for m, n in self.diagram.points:
            ins = sorted([self.edges[("h", m, n)], self.edges[("v", m, n)]])
            outs = sorted([self.edges[("h", m + 1, n)], self.edges[("v", m, n + 1)]])
            if ins != outs:
                return False
        return True


def output_permutation(outputs: Sequence[int]) -> Permutation:
    pos = [0] * len(outputs)
    for k, c in enumerate(outputs, start=1):
        if not 1 <= c <= len(outputs):
            raise ValueError("outputs are not a permutation of 1..M+N")
        pos[c - 1] = k
    return Permutation(pos)


def sample_vertex_model(diagram: SkewDiagram, params: VertexParamField, q: Scalar, rng: np.random.Generator,
                        boundary="packed") -> PathConfiguration:
    """Sample all edge colors, sweeping vertices in up-right order."""
    ins = diagram.input_edges()
    colors = _boundary_colors(diagram, boundary)
    edges: Dict[Edge, int] = dict(zip(ins, colors))
    q = float(q)
    for m, n in diagram.sweep():
        left, bottom = edges[("h", m, n)], edges[("v", m, n)]
        g = float(straight_probability(params[(m, n)], q))
        p = g if left < bottom else q * g if left > bottom else 1.0
        if rng.random() < p:
            up, right = bottom, left
        else:
            up, right = left, bottom
        edges[("v", m, n + 1)] = up
        edges[("h", m + 1, n)] = right
    return PathConfiguration(diagram, edges)


def enumerate_configurations(diagram: SkewDiagram, params: VertexParamField, q: Scalar, boundary="packed",
                             limit: int = MAX_ENUMERATION_SIZE) -> Iterator[Tuple[PathConfiguration, Scalar]]:
    """Every full path configuration with positive probability, exactly."""
    _check_size(diagram, limit)
    ins = diagram.input_edges()
    colors = _boundary_colors(diagram, boundary)
    one = Fraction(1) if (params.is_exact() and not isinstance(q, float)) else 1.0
    sweep = diagram.sweep()

    def rec(idx: int, edges: Dict[Edge, int], w):
        if idx == len(sweep):
            yield PathConfiguration(diagram, dict(edges)), w
            return
        m, n = sweep[idx]
        left, bottom = edges[("h", m, n)], edges[("v", m, n)]
        g = straight_probability(params[(m, n)] * one, q)
        pr = g if left < bottom else q * g if left > bottom else one
        for p, (up, right) in ((pr, (bottom, left)), (1 - pr, (left, bottom))):
            if p == 0:
                continue
            edges[("v", m, n + 1)], edges[("h", m + 1, n)] = up, right
            yield from rec(idx + 1, edges, w * p)
            if left == bottom:
                break
        del edges[("v", m, n + 1)], edges[("h", m + 1, n)]

    yield from rec(0, dict(zip(ins, colors)), one)


def _check_size(diagram: SkewDiagram, limit: int) -> None:
    if diagram.size > limit:
        raise ValueError(f"exact enumeration limited to M+N <= {limit}; got {diagram.size}")


def enumerate_vertex_model(diagram: SkewDiagram, params: VertexParamField, q: Scalar, boundary="packed",
                           limit: int = MAX_ENUMERATION_SIZE) -> Dict[Tuple[int, ...], Scalar]:
    """Exact law of the output coloring (colors at output positions ``1..M+N``).

    Propagates a distribution over cut colorings; each vertex splits a
    state into at most two.  Rational inputs give rational outputs.
    """
    _check_size(diagram, limit)
    colors = _boundary_colors(diagram, boundary)
    base = edge_key(diagram.input_edges()[0])
    one = Fraction(1) if (params.is_exact() and not isinstance(q, float)) else 1.0
    states: Dict[Tuple[int, ...], Scalar] = {tuple(colors): one}
    for p in diagram.sweep():
        k = diagram.vertex_slot(p, base)
        g = straight_probability(params[p] * one, q)
        nxt: Dict[Tuple[int, ...], Scalar] = {}
        for cut, w in states.items():
            left, bottom = cut[k], cut[k + 1]
            if left == bottom:
                nxt[cut] = nxt.get(cut, 0) + w
                continue
            pr = g if left < bottom else q * g
            swapped = cut[:k] + (bottom, left) + cut[k + 2:]
            # going straight through exchanges the two cut positions
            if pr:
                nxt[swapped] = nxt.get(swapped, 0) + w * pr
            if pr != 1:
                nxt[cut] = nxt.get(cut, 0) + w * (1 - pr)
        states = nxt
    # cut positions run in increasing key; outputs are numbered the other way
    return {cut[::-1]: w for cut, w in states.items() if w != 0}


def permutation_law(diagram: SkewDiagram, params: VertexParamField, q: Scalar,
                    limit: int = MAX_ENUMERATION_SIZE) -> Dict[Permutation, Scalar]:
    """Exact law of ``color -> output position`` under packed input."""
    law = enumerate_vertex_model(diagram, params, q, "packed", limit)
    return {output_permutation(out): w for out, w in law.items()}


def _compare_laws(lhs: Mapping, rhs: Mapping, tol: float) -> VerificationReport:
    keys = set(lhs) | set(rhs)
    worst = max((abs(lhs.get(k, 0) - rhs.get(k, 0)) for k in keys), default=0)
    bad = [(k, lhs.get(k, 0), rhs.get(k, 0)) for k in keys if abs(lhs.get(k, 0) - rhs.get(k, 0)) > tol]
    return VerificationReport(not bad, worst, len(keys), bad)


def verify_rotation_symmetry(diagram: SkewDiagram, params: VertexParamField, q: Scalar,
                             tol: float = 0.0) -> VerificationReport:
    """Compare the law of ``pi(S)`` with that of ``pi(S rotated)^{-1}``.

    The rotated diagram carries the rotated parameter field.
    """
    direct = permutation_law(diagram, params, q)
    rot = diagram.rotate180()
    rotated = permutation_law(rot, params.rotated(diagram), q)
    inverted = {pi.inverse(): w for pi, w in rotated.items()}
    return _compare_laws(direct, inverted, tol)


def height_function(config: PathConfiguration, m: int, n: int, max_color: int = 1) -> int:
    """Paths of color ``<= max_color`` crossing the vertical line ``x = m - 1/2`` at height ``<= n``."""
    d = config.diagram
    if not d.has_h_edge(m, n):
        raise ValueError(f"point ({m}, {n}) is not on a horizontal edge of the diagram")
    return sum(1 for b in range(d.n_min, n + 1)
               if d.has_h_edge(m, b) and config.edges[("h", m, b)] <= max_color)


def colored_heights(config: PathConfiguration, m: int, n: int) -> Tuple[int, ...]:
    """``(height with colors <= K-i)`` for ``i = 1..K-1``, ``K = M+N``."""
    K = config.diagram.size
    return tuple(height_function(config, m, n, K - i) for i in range(1, K))


def corner_height_point(diagram: SkewDiagram) -> Point:
    """Height-function argument just right of the top-right corner."""
    top = diagram.n_max
    right = diagram.row(top)[-1]
    if (right, top) != (diagram.m_max, diagram.n_max):
        raise ValueError("diagram has no unique top-right corner")
    return (right + 1, top)


def lattice_schedule(M: int, N: int, params: VertexParamField, q: Scalar) -> List[Tuple[int, int, Scalar]]:
    """``(T, z, swap probability)`` for an ``M x N`` rectangle viewed on the line.

    Vertex ``(m, n)`` acts at time ``T = m + n`` on bond ``z = m - n``
    (sites ``1-N .. M`` carry the cut positions).
    """
    out = []
    for m in range(M):
        for n in range(N):
            out.append((m + n, m - n, straight_probability(params[(m, n)], q)))
    return sorted(out)


def verify_lattice_consistency(M: int, N: int, params: VertexParamField, q: Scalar) -> VerificationReport:
    """Rectangle with packed input vs. parallel line updates on a packed segment.

    The line side is computed by the group-algebra engine; positions are
    cut positions ``1..M+N`` and colors the packed input colors.
    """
    diagram = SkewDiagram.rectangle(M, N)
    law = enumerate_vertex_model(diagram, params, q)
    quadrant = {}
    for out, w in law.items():
        cut = out[::-1]                      # position -> color
        line_of = [0] * len(cut)
        for pos, c in enumerate(cut, start=1):
            line_of[c - 1] = pos
        quadrant[Permutation(line_of)] = w
    swaps = [SwapSpec(z + N, x) for _, z, x in lattice_schedule(M, N, params, q)]
    line = forward_coefficients(Permutation.identity(M + N), swaps, q)
    return _compare_laws(quadrant, dict(line.items()), 0.0)
