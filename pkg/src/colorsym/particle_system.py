"""Colored particle configurations and the inhomogeneous colored ASEP.

Configurations live on a finite window ``[zmin, zmax]`` of the integers.
Colors are integers; a hole (color ``+inf``) is stored as :data:`INF`, the
largest ``int64``, so ordinary integer comparison gives the color order.

Two boundary treatments are supported:

``closed``
    The window is the whole system: rates vanish on bonds leaving the
    window.  This is exact (no truncation) and is the natural choice for
    packed, bijective configurations.
``infinite``
    The window stands in for the whole line.  The outermost sites must hold
    equal colors on each side (a step-like background), and a replica is
    discarded as soon as a swap changes a site within ``margin`` sites of
    either edge; surviving replicas coincide pathwise with the
    infinite-volume process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _asep_kernel as K
from .rng import RngStream

INF = np.iinfo(np.int64).max


def color_str(c: int) -> str:
    return "inf" if c == INF else str(int(c))


class ParticleConfiguration:
    """Coloring of ``[zmin, zmax]``."""

    __slots__ = ("zmin", "colors")

    def __init__(self, zmin: int, colors: Iterable[int]):
        self.zmin = int(zmin)
        arr = np.array([INF if (isinstance(c, float) and math.isinf(c)) else c for c in colors], dtype=np.int64)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("a configuration needs at least two sites")
        arr.setflags(write=False)
        self.colors = arr

    @classmethod
    def packed(cls, zmin: int, zmax: int) -> "ParticleConfiguration":
        return cls(zmin, range(zmin, zmax + 1))

    @classmethod
    def from_function(cls, zmin: int, zmax: int, fn: Callable[[int], int]) -> "ParticleConfiguration":
        return cls(zmin, [fn(z) for z in range(zmin, zmax + 1)])

    @classmethod
    def step(cls, zmin: int, zmax: int, edge: int = 0) -> "ParticleConfiguration":
        """First class particles (color 1) at ``z <= edge``, holes elsewhere."""
        return cls.from_function(zmin, zmax, lambda z: 1 if z <= edge else INF)

    @property
    def zmax(self) -> int:
        return self.zmin + self.colors.size - 1

    @property
    def sites(self) -> range:
        return range(self.zmin, self.zmax + 1)

    def __len__(self) -> int:
        return self.colors.size

    def __getitem__(self, z: int) -> int:
        if not self.zmin <= z <= self.zmax:
            raise IndexError(f"site {z} outside window [{self.zmin}, {self.zmax}]")
        return int(self.colors[z - self.zmin])

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParticleConfiguration):
            return NotImplemented
        return self.zmin == other.zmin and np.array_equal(self.colors, other.colors)

    def __hash__(self) -> int:
        return hash((self.zmin, self.colors.tobytes()))

    def __repr__(self) -> str:
        body = ",".join(color_str(c) for c in self.colors)
        return f"ParticleConfiguration(zmin={self.zmin}, [{body}])"

    def transposed(self, z: int) -> "ParticleConfiguration":
        """The swap operator ``sigma_{(z,z+1)}``."""
        self._check_bond(z)
        arr = self.colors.copy()
        i = z - self.zmin
        arr[i], arr[i + 1] = arr[i + 1], arr[i]
        return ParticleConfiguration(self.zmin, arr)

    def _check_bond(self, z: int) -> None:
        if not self.zmin <= z < self.zmax:
            raise ValueError(f"bond ({z},{z + 1}) outside window [{self.zmin}, {self.zmax}]")

    def is_bijection(self) -> bool:
        return sorted(self.colors.tolist()) == list(self.sites)

    def color_multiset(self) -> Dict[int, int]:
        vals, counts = np.unique(self.colors, return_counts=True)
        return dict(zip(vals.tolist(), counts.tolist()))

    def positions_of(self, color: int) -> List[int]:
        return [self.zmin + int(i) for i in np.flatnonzero(self.colors == color)]


@dataclass(frozen=True)
class SwapSchedule:
    """Ordered deterministic swap list ``[(bond z, x), ...]``."""

    swaps: Tuple[Tuple[int, float], ...] = ()

    @classmethod
    def of(cls, bonds: Iterable, x: float = 1.0) -> "SwapSchedule":
        out = []
        for item in bonds:
            if isinstance(item, (tuple, list)):
                out.append((int(item[0]), float(item[1])))
            else:
                out.append((int(item), float(x)))
        return cls(tuple(out))

    def reversed(self) -> "SwapSchedule":
        return SwapSchedule(tuple(reversed(self.swaps)))

    def __iter__(self):
        return iter(self.swaps)

    def __len__(self) -> int:
        return len(self.swaps)

    def extent(self) -> int:
        return max((max(abs(z), abs(z + 1)) for z, _ in self.swaps), default=0)


def asymmetric_swap(config: ParticleConfiguration, z: int, x: float, q: float,
                    rng: np.random.Generator) -> ParticleConfiguration:
    """Random asymmetric swap ``W_{(z,z+1),x}``.

    Swaps with probability ``x`` when ``eta(z) < eta(z+1)``, ``q x`` when
    ``eta(z) > eta(z+1)``; equal colors are left alone.  One uniform is
    drawn regardless of the branch.
    """
    config._check_bond(z)
    if not (0 <= x <= 1 and 0 <= q <= 1):
        raise ValueError("x and q must lie in [0, 1]")
    a, b = config[z], config[z + 1]
    p = x if a < b else q * x if a > b else 0.0
    return config.transposed(z) if rng.random() < p else config


@dataclass(frozen=True)
class RateField:
    """Bounded swap-rate field ``r(z, t)``.

    Preset families are evaluated both here and inside compiled kernels:

    ``split-sinusoid``
        ``base + amp * sin(freq t + phase)`` with separate ``(base, amp)``
        for ``z < z0`` and ``z >= z0``.
    ``piecewise-time``
        Piecewise constant in time with breakpoints ``t_1 < ... < t_m``,
        again with separate value tables on either side of ``z0``.

    ``callable`` fields wrap an arbitrary Python function and only run on
    the reference simulator.  Time enters through the affine map
    ``t -> time_sign * t + time_offset`` so that reflection is exact.
    """

    kind: str
    params: Tuple[float, ...]
    r_max: float
    time_sign: float = 1.0
    time_offset: float = 0.0
    domain: Optional[Tuple[float, float]] = None
    func: Optional[Callable[[int, float], float]] = field(default=None, compare=False)

    @classmethod
    def constant(cls, rate: float = 1.0) -> "RateField":
        return cls.split_sinusoid(0, rate, 0.0, rate, 0.0)

    @classmethod
    def sinusoidal(cls, base: float, amp: float, freq: float = 1.0, phase: float = 0.0) -> "RateField":
        """Space-constant ``base + amp sin(freq t + phase)``."""
        return cls.split_sinusoid(0, base, amp, base, amp, freq, phase)

    @classmethod
    def step_in_space(cls, left: float, right: float, z0: int = 0) -> "RateField":
        return cls.split_sinusoid(z0, left, 0.0, right, 0.0)

    @classmethod
    def split_sinusoid(cls, z0: int, base_left: float, amp_left: float, base_right: float,
                       amp_right: float, freq: float = 1.0, phase: float = 0.0) -> "RateField":
        lows = (base_left - abs(amp_left), base_right - abs(amp_right))
        if min(lows) < 0:
            raise ValueError("rates must be nonnegative")
        r_max = max(base_left + abs(amp_left), base_right + abs(amp_right))
        return cls("split-sinusoid", (float(z0), base_left, amp_left, base_right, amp_right, freq, phase), r_max)

    @classmethod
    def two_speed(cls, slow: float, fast: float, switch_time: float, z0: Optional[int] = None) -> "RateField":
        """Rate ``slow`` before ``switch_time`` and ``fast`` after it.

        With ``z0`` given, only bonds ``z >= z0`` switch; the rest stay slow.
        """
        if z0 is None:
            return cls.piecewise_time([switch_time], [slow, fast])
        return cls.piecewise_time([switch_time], [slow, slow], z0=z0, values_right=[slow, fast])

    @classmethod
    def piecewise_time(cls, breakpoints: Sequence[float], values: Sequence[float], z0: int = 0,
                       values_right: Optional[Sequence[float]] = None) -> "RateField":
        bps = [float(b) for b in breakpoints]
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        left = [float(v) for v in values]
        right = left if values_right is None else [float(v) for v in values_right]
        if len(left) != len(bps) + 1 or len(right) != len(bps) + 1:
            raise ValueError("need one more value than breakpoints")
        if min(left + right) < 0:
            raise ValueError("rates must be nonnegative")
        params = (float(z0), float(len(bps)), *bps, *left, *right)
        return cls("piecewise-time", params, max(left + right))

    @classmethod
    def from_callable(cls, func: Callable[[int, float], float], r_max: float) -> "RateField":
        return cls("callable", (), float(r_max), func=func)

    @property
    def is_constant(self) -> bool:
        if self.kind == "split-sinusoid":
            _, bl, al, br, ar, _, _ = self.params
            return al == 0 and ar == 0 and bl == br
        if self.kind == "piecewise-time":
            m = int(self.params[1])
            vals = self.params[2 + m:]
            return len(set(vals)) == 1
        return False

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Discontinuity times in the caller's time coordinate."""
        if self.kind != "piecewise-time":
            return ()
        m = int(self.params[1])
        raw = self.params[2:2 + m]
        return tuple(sorted((b - self.time_offset) / self.time_sign for b in raw))

    def _local_time(self, t: float) -> float:
        if self.domain is not None and not (self.domain[0] <= t <= self.domain[1]):
            raise ValueError(f"time {t} outside the field's domain {self.domain}")
        return self.time_sign * t + self.time_offset

    def __call__(self, z: int, t: float) -> float:
        u = self._local_time(t)
        if self.kind == "callable":
            return float(self.func(z, u))
        return float(K.rate_at(self.code, np.asarray(self.params, dtype=np.float64), int(z), u))

    @property
    def code(self) -> int:
        return {"split-sinusoid": K.RATE_SPLIT_SINUSOID, "piecewise-time": K.RATE_PIECEWISE_TIME}[self.kind]


def reversed_process(rates: RateField, tau: float) -> RateField:
    """Time reflection ``r_hat(z, t) = r(z, tau - t)`` on ``[0, tau]``."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return replace(rates, time_sign=-rates.time_sign,
                   time_offset=rates.time_sign * tau + rates.time_offset,
                   domain=(0.0, float(tau)))


def color_to_position(config: ParticleConfiguration) -> ParticleConfiguration:
    """Inverse bijection: the result at site ``c`` is the position of color ``c``."""
    if not config.is_bijection():
        raise ValueError("configuration is not a bijection of its window")
    inv = np.empty_like(config.colors)
    inv[config.colors - config.zmin] = np.arange(config.zmin, config.zmax + 1)
    return ParticleConfiguration(config.zmin, inv)


def project_colors(config: ParticleConfiguration, A: int, B: int) -> ParticleConfiguration:
    """Collapse to three classes: ``<= A`` -> 1, ``(A, B)`` -> 2, ``>= B`` -> hole."""
    if A > B:
        raise ValueError("need A <= B")
    c = config.colors
    out = np.where(c <= A, 1, np.where(c < B, 2, INF))
    return ParticleConfiguration(config.zmin, out)


def _resolve_boundary(config: ParticleConfiguration, boundary: str) -> bool:
    """True when the window emulates the infinite line."""
    c = config.colors
    inert = c[0] == c[1] and c[-1] == c[-2]
    if boundary == "auto":
        return bool(inert)
    if boundary == "infinite":
        if not inert:
            raise ValueError("infinite-line emulation needs equal colors at both window edges")
        return True
    if boundary == "closed":
        return False
    raise ValueError(f"unknown boundary mode {boundary!r}")


@dataclass
class AsepRun:
    config: ParticleConfiguration
    discarded: bool
    rings: np.ndarray          # accepted clock rings per bond
    n_swaps: int


def simulate_asep(initial: ParticleConfiguration, pre_swaps: SwapSchedule, rates: RateField,
                  t_end: float, q: float, rng: np.random.Generator,
                  post_swaps: SwapSchedule = SwapSchedule(), boundary: str = "auto",
                  margin: int = 1) -> AsepRun:
    """Reference simulator for one replica.

    Applies ``pre_swaps``, runs ``W_{(z,z+1),1}`` at the points of
    independent Poisson clocks of rate ``r(z, t)`` up to ``t_end``, then
    applies ``post_swaps``.  Clocks are sampled by thinning one superposed
    clock of rate ``r_max * (#bonds)``.
    """
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    infinite = _resolve_boundary(initial, boundary)
    lo, hi = initial.zmin + margin + 1, initial.zmax - margin - 1
    c = initial.colors.copy()
    zmin = initial.zmin
    nbond = c.size - 1
    rings = np.zeros(nbond, dtype=np.int64)
    discarded = False
    n_swaps = 0

    def w_swap(z: int, x: float) -> bool:
        nonlocal discarded, n_swaps
        i = z - zmin
        if not 0 <= i < nbond:
            raise ValueError(f"bond ({z},{z + 1}) outside window")
        u = rng.random()
        p = x if c[i] < c[i + 1] else q * x if c[i] > c[i + 1] else 0.0
        if u < p:
            c[i], c[i + 1] = c[i + 1], c[i]
            n_swaps += 1
            if infinite and (z < lo or z + 1 > hi):
                discarded = True
            return True
        return False

    for z, x in pre_swaps:
        w_swap(z, x)
    t = 0.0
    total = rates.r_max * nbond
    while total > 0 and not discarded:
        t += rng.exponential(1.0 / total)
        if t > t_end:
            break
        i = int(rng.integers(nbond))
        if rng.random() * rates.r_max >= rates(zmin + i, t):
            continue
        rings[i] += 1
        w_swap(zmin + i, 1.0)
    if not discarded:
        for z, x in post_swaps:
            w_swap(z, x)
    return AsepRun(ParticleConfiguration(zmin, c), discarded, rings, n_swaps)


def window_halfwidth(r_max: float, t_end: float, extent: int = 0, margin: int = 1) -> int:
    """Half-width ``W`` so that boundary contact is negligible.

    Fronts move at speed at most ``r_max``; the linear term leaves a factor
    four of room and the square-root term covers Poisson fluctuations at
    short times.
    """
    mean = r_max * t_end
    return int(math.ceil(4 * mean + 6 * math.sqrt(mean + 1))) + int(extent) + margin + 2


@dataclass
class EnsembleResult:
    """Per-replica outputs of :func:`simulate_ensemble`."""

    observed: Optional[np.ndarray]        # colors on the observation window
    observe_zmin: Optional[int]
    tracked: Optional[np.ndarray]         # leftmost positions of track_color
    discarded: np.ndarray
    n_swaps: np.ndarray
    seed: int
    stream: Tuple

    @property
    def replicas(self) -> int:
        return self.discarded.size

    @property
    def discard_fraction(self) -> float:
        return float(self.discarded.mean()) if self.discarded.size else 0.0

    @property
    def kept(self) -> np.ndarray:
        return ~self.discarded

    def site(self, z: int) -> np.ndarray:
        """Colors at site ``z`` over kept replicas."""
        return self.observed[self.kept, z - self.observe_zmin]

    def position_of(self, color: int) -> np.ndarray:
        """Position of ``color`` in each kept replica (requires it be observed)."""
        obs = self.observed[self.kept]
        hit = obs == color
        if not hit.any(axis=1).all():
            raise ValueError(f"color {color} left the observation window in some replica")
        return self.observe_zmin + hit.argmax(axis=1)


def simulate_ensemble(initial: ParticleConfiguration, rates: RateField, t_end: float, q: float,
                      replicas: int, stream: RngStream, pre_swaps: SwapSchedule = SwapSchedule(),
                      post_swaps: SwapSchedule = SwapSchedule(), observe: Optional[Tuple[int, int]] = None,
                      track_color: Optional[int] = None, n_track: int = 0, boundary: str = "auto",
                      margin: int = 1, chunk: int = 5000) -> EnsembleResult:
    """Run ``replicas`` independent copies with the compiled kernel.

    Replica ``i`` always consumes stream ``(stream, i)``, so any split into
    chunks gives identical results.
    """
    if rates.kind == "callable":
        raise ValueError("callable rate fields run only on simulate_asep")
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    infinite = _resolve_boundary(initial, boundary)
    zmin = initial.zmin
    init = np.ascontiguousarray(initial.colors, dtype=np.int64)

    def schedule(sched: SwapSchedule):
        b = np.array([z - zmin for z, _ in sched], dtype=np.int64)
        x = np.array([x for _, x in sched], dtype=np.float64)
        if b.size and (b.min() < 0 or b.max() >= init.size - 1):
            raise ValueError("swap schedule leaves the window")
        return b, x

    pre_b, pre_x = schedule(pre_swaps)
    post_b, post_x = schedule(post_swaps)
    if observe is None:
        o_lo, o_hi = 0, 0
    else:
        if observe[0] < zmin or observe[1] > initial.zmax or observe[0] > observe[1]:
            raise ValueError("observation window must lie inside the simulation window")
        o_lo, o_hi = observe[0] - zmin, observe[1] - zmin + 1
    tc = 0 if track_color is None else int(track_color)
    nt = 0 if track_color is None else int(n_track)
    obs = np.empty((replicas, o_hi - o_lo), np.int64)
    track = np.empty((replicas, nt), np.int64)
    flag = np.empty(replicas, np.bool_)
    nsw = np.empty(replicas, np.int64)
    params = np.asarray(rates.params, dtype=np.float64)
    for start in range(0, replicas, chunk):
        stop = min(replicas, start + chunk)
        states = stream.replica_states(start, stop - start)
        K.run_batch(init, zmin, pre_b, pre_x, post_b, post_x, float(q), float(t_end),
                    rates.code, params, float(rates.r_max), rates.is_constant,
                    float(rates.time_sign), float(rates.time_offset), infinite, int(margin),
                    states, o_lo, o_hi, tc, nt,
                    obs[start:stop], track[start:stop], flag[start:stop], nsw[start:stop])
    return EnsembleResult(obs if observe is not None else None, observe[0] if observe else None,
                          track if track_color is not None else None, flag, nsw,
                          stream.seed, (stream.stream,) + stream.path)


@dataclass
class MarginalReport:
    """Empirical law of a set of outcomes with binomial standard errors."""

    n: int
    counts: Dict[Hashable, int]
    frequencies: Dict[Hashable, float]
    stderr: Dict[Hashable, float]


def marginal_statistics(values, query: Iterable[Hashable]) -> MarginalReport:
    """Count how often each queried outcome occurs among the replicas.

    ``values`` is a 1-d sequence of outcomes or a 2-d array whose rows are
    compared as tuples.
    """
    arr = np.asarray(values)
    n = arr.shape[0]
    if n < 2:
        raise ValueError("need at least two replicas")
    rows = [tuple(r) for r in arr.tolist()] if arr.ndim == 2 else arr.tolist()
    counts, freqs, errs = {}, {}, {}
    query = list(query)
    if query:
        tally: Dict[Hashable, int] = {}
        for r in rows:
            tally[r] = tally.get(r, 0) + 1
        for key in query:
            k = tuple(key) if isinstance(key, list) else key
            c = tally.get(k, 0)
            p = c / n
            counts[k], freqs[k], errs[k] = c, p, math.sqrt(p * (1 - p) / n)
    return MarginalReport(n, counts, freqs, errs)
