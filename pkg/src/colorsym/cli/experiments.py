"""Experiment runners.

Each runner takes a validated experiment model, an :class:`RngStream` and
run options, and returns a list of :class:`Record` rows plus optional
plot tables.  Runners never touch the filesystem.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .. import hall_littlewood as hl
from .. import perm_algebra as pa
from .. import s6v
from .. import second_class as sc
from ..particle_system import (ParticleConfiguration, SwapSchedule, reversed_process, simulate_ensemble)
from ..rng import RngStream
from . import config as C

FLOAT_TOL = 1e-12


@dataclass
class Record:
    """One measured quantity; the CSV row layout."""

    experiment: str
    kind: str
    quantity: str
    parameters: Dict
    theoretical: object
    empirical: object
    stderr: Optional[float] = None
    z_score: Optional[float] = None
    replicas: Optional[int] = None
    discard_fraction: Optional[float] = None
    passed: bool = True

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class RunOptions:
    exact: bool = True
    replicas: Optional[int] = None


@dataclass
class ExperimentResult:
    id: str
    kind: str
    records: List[Record]
    tables: Dict[str, Tuple[List[str], List[Tuple]]] = field(default_factory=dict)
    notes: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)


def experiment_stream(seed: int, experiment_id: str) -> RngStream:
    """Stream keyed by the experiment id, so reordering a config changes nothing."""
    return RngStream(int(seed), zlib.crc32(experiment_id.encode()))


def bonferroni_threshold(alpha: float, comparisons: int) -> float:
    """Two-sided z critical value at level ``alpha / comparisons``."""
    return float(stats.norm.ppf(1 - alpha / (2 * max(comparisons, 1))))


def _scalar(v: Fraction, exact: bool):
    return Fraction(v) if exact else float(v)


def _replicas(exp, opts: RunOptions) -> int:
    return int(opts.replicas) if opts.replicas is not None else int(exp.replicas)


def _random_permutation(rng, n: int) -> pa.Permutation:
    return pa.Permutation(int(v) + 1 for v in rng.permutation(n))


def _random_swaps(rng, n: int, max_swaps: int, denominator: int, exact: bool) -> List[pa.SwapSpec]:
    swaps = pa.random_swaps(rng, n, int(rng.integers(0, max_swaps + 1)), denominator)
    return swaps if exact else [pa.SwapSpec(s.position, float(s.x)) for s in swaps]


def _is_stochastic(dist: pa.AlgebraDistribution, exact: bool) -> bool:
    return dist.is_stochastic(0.0 if exact else FLOAT_TOL)


# -- exact experiments ------------------------------------------------------

def run_symmetry(exp: C.SymmetryExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    rng = stream.generator()
    tol = 0.0 if opts.exact else FLOAT_TOL
    records = []
    for q in exp.q_values:
        qv = _scalar(q, opts.exact)
        worst, ok, stochastic = 0, True, True
        for _ in range(exp.cases):
            swaps = _random_swaps(rng, exp.n, exp.max_swaps, exp.denominator, opts.exact)
            rep = pa.verify_symmetry(swaps, qv, exp.n, tol)
            ok &= rep.passed
            worst = max(worst, rep.max_discrepancy)
            e = pa.Permutation.identity(exp.n)
            for dist in (pa.forward_coefficients(e, swaps, qv), pa.backward_coefficients(e, swaps, qv)):
                stochastic &= _is_stochastic(dist, opts.exact)
        params = {"n": exp.n, "q": str(q), "cases": exp.cases}
        records.append(Record(exp.id, exp.kind, "max|f-f~inv|", params, 0, worst, passed=ok))
        records.append(Record(exp.id, exp.kind, "stochastic", params, True, stochastic, passed=stochastic))
    return ExperimentResult(exp.id, exp.kind, records)


def run_recursion(exp: C.RecursionExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    rng = stream.generator()
    tol = 0.0 if opts.exact else FLOAT_TOL
    records = []
    n = exp.n
    for q in exp.q_values:
        qv = _scalar(q, opts.exact)
        per_q = max(1, math.ceil(exp.cases / len(exp.q_values)))
        worst, ok = 0, True
        for _ in range(per_q):
            s = _random_permutation(rng, n)
            ascents = [i for i in range(1, n) if s(i) < s(i + 1)]
            if not ascents:
                s = pa.Permutation.identity(n)
                ascents = list(range(1, n))
            i = int(rng.choice(ascents))
            swaps = _random_swaps(rng, n, exp.max_swaps, exp.denominator, opts.exact)
            rep = pa.verify_recursion(s, i, swaps, qv, tol)
            ok &= rep.passed
            worst = max(worst, rep.max_discrepancy)
        records.append(Record(exp.id, exp.kind, "max|recursion residual|",
                              {"n": n, "q": str(q), "cases": per_q}, 0, worst, passed=ok))
    rejected = 0
    for _ in range(exp.invalid_cases):
        s = _random_permutation(rng, n)
        descents = [i for i in range(1, n) if s(i) > s(i + 1)]
        if not descents:
            s = pa.Permutation(range(n, 0, -1))
            descents = list(range(1, n))
        i = int(rng.choice(descents))
        try:
            pa.verify_recursion(s, i, [], 0)
        except ValueError:
            rejected += 1
    records.append(Record(exp.id, exp.kind, "invalid inputs rejected", {"n": n, "cases": exp.invalid_cases},
                          exp.invalid_cases, rejected, passed=rejected == exp.invalid_cases))
    return ExperimentResult(exp.id, exp.kind, records)


def run_s6v_rotation(exp: C.S6vRotationExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    rng = stream.generator()
    tol = 0.0 if opts.exact else FLOAT_TOL
    records = []
    for d_spec in exp.diagrams:
        try:
            diagram = s6v.SkewDiagram.from_shapes(d_spec.outer, d_spec.inner)
        except ValueError as err:
            raise C.ConfigError(f"diagrams: {err}") from None
        for q in exp.q_values:
            qv = _scalar(q, opts.exact)
            for draw in range(exp.draws):
                params = s6v.VertexParamField({
                    p: _scalar(Fraction(int(rng.integers(0, exp.denominator)), exp.denominator), opts.exact)
                    for p in sorted(diagram.points)})
                rep = s6v.verify_rotation_symmetry(diagram, params, qv, tol)
                records.append(Record(
                    exp.id, exp.kind, "max|law(pi)-law(pi_rot^-1)|",
                    {"outer": list(d_spec.outer), "inner": list(d_spec.inner), "q": str(q), "draw": draw},
                    0, rep.max_discrepancy, passed=rep.passed))
    return ExperimentResult(exp.id, exp.kind, records)


def run_hl_match(exp: C.HLMatchExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    s = hl.SignString.parse(exp.sign_string)
    a = [_scalar(v, opts.exact) for v in exp.a]
    b = [_scalar(v, opts.exact) for v in exp.b]
    records = []
    for t in exp.t_values:
        rep = hl.verify_colored_height_match(s, a, b, _scalar(t, opts.exact), exp.tolerance)
        params = {"signs": exp.sign_string, "a": [str(v) for v in exp.a], "b": [str(v) for v in exp.b],
                  "t": str(t)}
        bound = float(rep.tail) + exp.tolerance
        norm = rep.normalization
        records += [
            Record(exp.id, exp.kind, "max|corner-rim|", params, 0, rep.corner_vs_rim.max_discrepancy,
                   passed=rep.corner_vs_rim.passed),
            Record(exp.id, exp.kind, "max|rim-process|", params, 0, rep.rim_vs_hl,
                   stderr=bound, passed=rep.rim_vs_hl <= bound),
            Record(exp.id, exp.kind, "max|corner-process|", params, 0, rep.corner_vs_hl,
                   stderr=bound, passed=rep.corner_vs_hl <= bound),
            Record(exp.id, exp.kind, "normalization", params, float(norm.product), float(norm.truncated_sum),
                   stderr=float(norm.tail), passed=norm.consistent),
        ]
    return ExperimentResult(exp.id, exp.kind, records)


# -- Monte Carlo experiments ------------------------------------------------

def _pooled_chi2(a: np.ndarray, b: np.ndarray, min_expected: float = 5.0) -> Tuple[float, float, int]:
    """Two-sample chi-square on categorical samples; sparse bins are pooled.

    Categories are sorted by combined count and merged from the rarest up
    until every pooled bin has expected count at least ``min_expected``.
    """
    cats, inv = np.unique(np.concatenate([a, b]), return_inverse=True)
    ca = np.bincount(inv[:a.size], minlength=cats.size)
    cb = np.bincount(inv[a.size:], minlength=cats.size)
    order = np.lexsort((cats, ca + cb))
    frac = min(a.size, b.size) / (a.size + b.size)
    bins_a, bins_b, acc_a, acc_b = [], [], 0, 0
    for j in order:
        acc_a += ca[j]
        acc_b += cb[j]
        if (acc_a + acc_b) * frac >= min_expected:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
            acc_a = acc_b = 0
    if acc_a + acc_b:
        if bins_a:
            bins_a[-1] += acc_a
            bins_b[-1] += acc_b
        else:
            bins_a.append(acc_a)
            bins_b.append(acc_b)
    if len(bins_a) < 2:
        return 0.0, 1.0, len(bins_a)
    chi2, p, dof, _ = stats.chi2_contingency(np.array([bins_a, bins_b]), correction=False)
    return float(chi2), float(p), int(dof)


def reversal_samples(exp: C.AsepReversalExperiment, stream: RngStream, replicas: int):
    """Direct and reversed ensembles for the ASEP time-reversal check.

    Returns ``(direct, reversed)`` observed windows; the reversed one is
    already inverted, i.e. site ``z`` holds the position of color ``z``.
    """
    lo, hi = exp.window
    packed = ParticleConfiguration.packed(lo, hi)
    rates = exp.rates.build()
    pre = SwapSchedule.of(exp.pre_swaps)
    direct = simulate_ensemble(packed, rates, exp.t, exp.q, replicas, stream.child(0), pre_swaps=pre,
                               observe=(lo, hi), boundary="closed")
    rev = simulate_ensemble(packed, reversed_process(rates, exp.t), exp.t, exp.q, replicas, stream.child(1),
                            post_swaps=pre.reversed(), observe=(lo, hi), boundary="closed")
    obs = rev.observed
    inv = np.empty_like(obs)
    rows = np.arange(obs.shape[0])[:, None]
    inv[rows, obs - lo] = np.arange(lo, hi + 1)[None, :]
    return direct, rev, inv


def run_asep_reversal(exp: C.AsepReversalExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    replicas = _replicas(exp, opts)
    direct, rev, inv = reversal_samples(exp, stream, replicas)
    lo = exp.window[0]
    dk, rk = direct.kept, rev.kept
    d_obs, r_obs = direct.observed[dk], inv[rk]
    col = exp.site - lo
    samples = {
        f"color at site {exp.site}": (d_obs[:, col], r_obs[:, col]),
        f"position of color {exp.site}": (lo + (d_obs == exp.site).argmax(axis=1),
                                          lo + (r_obs == exp.site).argmax(axis=1)),
    }
    level = exp.alpha / len(samples)
    discard = max(direct.discard_fraction, rev.discard_fraction)
    params = {"window": list(exp.window), "pre_swaps": list(exp.pre_swaps), "t": exp.t, "q": exp.q,
              "rates": exp.rates.preset}
    records = []
    for name, (a, b) in samples.items():
        chi2, p, dof = _pooled_chi2(a, b)
        records.append(Record(exp.id, exp.kind, f"chi2 p-value: {name}", dict(params, dof=dof, chi2=chi2),
                              level, p, replicas=replicas, discard_fraction=discard, passed=p > level))
    records.append(Record(exp.id, exp.kind, "discard fraction", params, exp.max_discard_fraction, discard,
                          replicas=replicas, discard_fraction=discard, passed=discard < exp.max_discard_fraction))
    return ExperimentResult(exp.id, exp.kind, records)


def _comparison_records(exp, report: sc.ComparisonReport, params: Dict, threshold: float,
                        quantity: str) -> List[Record]:
    out = []
    for pt in report.points:
        out.append(Record(exp.id, exp.kind, f"{quantity} [{pt.label}]", dict(params, point=pt.label),
                          pt.rhs, pt.lhs, stderr=pt.se, z_score=pt.z, replicas=report.replicas,
                          discard_fraction=report.discard_fraction, passed=pt.passed(threshold)))
    return out


def run_inhomogeneous_identity(exp: C.InhomogeneousIdentityExperiment, stream: RngStream,
                               opts: RunOptions) -> ExperimentResult:
    replicas = _replicas(exp, opts)
    thr = bonferroni_threshold(exp.alpha, len(exp.xs))
    rep = sc.verify_inhomogeneous_identity(exp.rates.build(), exp.tau, exp.xs, exp.q, replicas, stream, thr)
    params = {"tau": exp.tau, "q": exp.q, "rates": exp.rates.preset}
    return ExperimentResult(exp.id, exp.kind,
                            _comparison_records(exp, rep, params, thr, "P(second class <= x)"))


def run_shock_identity(exp: C.ShockIdentityExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    replicas = _replicas(exp, opts)
    thr = bonferroni_threshold(exp.alpha, len(exp.xs))
    rep = sc.verify_shock_identity(exp.L, exp.t, exp.xs, replicas, stream, thr)
    records = _comparison_records(exp, rep, {"L": exp.L, "t": exp.t}, thr, "P(second class <= x)")
    if exp.check_t0:
        span = range(-exp.L - 3, exp.L + 4)
        rep0 = sc.verify_shock_identity(exp.L, 0, list(span), 0, stream)
        ok = all(p.lhs == p.rhs for p in rep0.points)
        worst = max(abs(p.lhs - p.rhs) for p in rep0.points)
        records.append(Record(exp.id, exp.kind, "t=0 exact mismatch", {"L": exp.L, "x": [span[0], span[-1]]},
                              0, worst, passed=ok))
    return ExperimentResult(exp.id, exp.kind, records)


def run_perturbed_step(exp: C.PerturbedStepExperiment, stream: RngStream, opts: RunOptions) -> ExperimentResult:
    try:
        spec = sc.PerturbationSpec.parse(exp.perturbation)
    except ValueError as err:
        raise C.ConfigError(f"perturbation: {err}") from None
    replicas = _replicas(exp, opts)
    ks = exp.ks or list(range(1, spec.N + 1))
    bad = [k for k in ks if not 1 <= k <= spec.N]
    if bad:
        raise C.ConfigError(f"ks: must lie in 1..{spec.N}, got {bad}")
    res = sc.run_perturbed_asep(spec, exp.q, exp.t, replicas, stream)
    q = Fraction(str(exp.q)) if opts.exact else exp.q
    records, tables = [], {}
    for k in ks:
        for x in exp.xs:
            emp, se = res.cdf(k, x)
            xv = Fraction(str(x)) if opts.exact else x
            lim = float(sc.limit_cdf(spec, q, k, xv))
            records.append(Record(exp.id, exp.kind, f"P(S_{k}/t < x)",
                                  {"perturbation": str(spec), "q": exp.q, "t": exp.t, "k": k, "x": x},
                                  lim, emp, stderr=se, z_score=(emp - lim) / se if se > 0 else None,
                                  replicas=replicas, discard_fraction=res.discard_fraction,
                                  passed=abs(emp - lim) < exp.tolerance))
        if exp.cdf_grid:
            grid = np.linspace(-1.0, 1.0, exp.cdf_grid)
            rows = []
            for x in grid:
                xv = round(float(x), 10)
                emp, _ = res.cdf(k, xv)
                xr = Fraction(xv).limit_denominator(10 ** 6) if opts.exact else xv
                rows.append((k, xv, emp, float(sc.limit_cdf(spec, q, k, xr))))
            tables.setdefault(f"cdf_{exp.id}", (["k", "x", "empirical", "limit"], []))[1].extend(rows)
    return ExperimentResult(exp.id, exp.kind, records, tables)


def run_density_spotcheck(exp: C.DensitySpotcheckExperiment, stream: RngStream,
                          opts: RunOptions) -> ExperimentResult:
    replicas = _replicas(exp, opts)
    rep = sc.density_spotcheck(exp.q, exp.t, replicas, stream, exp.site)
    params = {"q": exp.q, "t": exp.t, "site": exp.site, "tolerance": exp.tolerance}
    corr_se = 1 / math.sqrt(max(replicas - 3, 1))
    return ExperimentResult(exp.id, exp.kind, [
        Record(exp.id, exp.kind, "occupation", params, rep.expected, rep.occupation, stderr=rep.occupation_se,
               z_score=(rep.occupation - rep.expected) / rep.occupation_se if rep.occupation_se else None,
               replicas=replicas, discard_fraction=rep.discard_fraction,
               passed=abs(rep.occupation - rep.expected) < exp.tolerance),
        Record(exp.id, exp.kind, "neighbor correlation", params, 0.0, rep.correlation, stderr=corr_se,
               z_score=rep.correlation / corr_se, replicas=replicas, discard_fraction=rep.discard_fraction,
               passed=abs(rep.correlation) < exp.tolerance),
    ])


RUNNERS: Dict[str, Callable] = {
    "symmetry": run_symmetry,
    "recursion": run_recursion,
    "asep-reversal": run_asep_reversal,
    "s6v-rotation": run_s6v_rotation,
    "perturbed-step": run_perturbed_step,
    "inhomogeneous-identity": run_inhomogeneous_identity,
    "shock-identity": run_shock_identity,
    "hl-match": run_hl_match,
    "density-spotcheck": run_density_spotcheck,
}


def run_experiment(exp, seed: int, opts: RunOptions) -> ExperimentResult:
    return RUNNERS[exp.kind](exp, experiment_stream(seed, exp.id), opts)


def run_all(cfg: C.RunConfig, opts: RunOptions, seed: Optional[int] = None) -> List[ExperimentResult]:
    master = cfg.seed if seed is None else seed
    return [run_experiment(e, master, opts) for e in cfg.experiments if e.enabled]
