"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances are the stated ones; nothing here is tuned to the observed
numbers.  Monte Carlo criteria use fixed streams, so reruns are identical.
The full file takes about ten minutes on one core, almost all
of it in the t = 400 limit-law runs.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import yaml
from click.testing import CliRunner

from colorsym import hall_littlewood as hl
from colorsym.cli.config import AsepReversalExperiment
from colorsym.cli.experiments import _pooled_chi2, reversal_samples
from colorsym.cli.main import main as cli_main
from colorsym.particle_system import RateField
from colorsym.perm_algebra import (Permutation, backward_coefficients, forward_coefficients, path_oracle,
                                   random_swaps, verify_recursion, verify_symmetry)
from colorsym.rng import RngStream
from colorsym.s6v import SkewDiagram, VertexParamField, verify_rotation_symmetry
from colorsym.second_class import (density_d, density_spotcheck, f_k_exact, limit_cdf, run_perturbed_asep,
                                   second_class_after_hole, second_class_before_particle, single_second_class,
                                   verify_inhomogeneous_identity, verify_shock_identity)

from conftest import record_criterion

SEED = 20240611
Q_EXACT = [Fraction(0), Fraction(1, 3), Fraction(1)]


def _rng(criterion: int):
    return RngStream(SEED, criterion).generator()


def _random_perm(rng, n):
    return Permutation(int(v) + 1 for v in rng.permutation(n))


def test_criterion_01_exact_symmetry():
    rng = _rng(1)
    start = time.perf_counter()
    checked, worst, ok = 0, 0, True
    for q in Q_EXACT:
        for _ in range(100):
            swaps = random_swaps(rng, 4, int(rng.integers(0, 7)))
            rep = verify_symmetry(swaps, q, 4)
            ok &= rep.passed
            worst = max(worst, rep.max_discrepancy)
            checked += 1
    elapsed = time.perf_counter() - start
    passed = ok and worst == 0 and elapsed < 10
    record_criterion(1, passed, f"{checked} cases (N=4, n<=6, q in 0,1/3,1), max discrepancy {worst}, "
                                f"{elapsed:.2f}s (< 10s)")
    assert passed


def _recursion_cases(rng, count):
    cases = []
    for _ in range(count):
        n = int(rng.integers(2, 6))
        s = _random_perm(rng, n)
        ascents = [i for i in range(1, n) if s(i) < s(i + 1)]
        if not ascents:
            s, ascents = Permutation.identity(n), list(range(1, n))
        q = Q_EXACT[int(rng.integers(0, 3))]
        cases.append((s, int(rng.choice(ascents)), random_swaps(rng, n, int(rng.integers(0, 7))), q))
    return cases


def test_criterion_02_recursion():
    rng = _rng(2)
    valid = sum(verify_recursion(s, i, sw, q).passed for s, i, sw, q in _recursion_cases(rng, 200))
    rejected = 0
    for _ in range(20):
        n = int(rng.integers(2, 6))
        s = _random_perm(rng, n)
        descents = [i for i in range(1, n) if s(i) > s(i + 1)]
        if not descents:
            s, descents = Permutation(range(n, 0, -1)), list(range(1, n))
        try:
            verify_recursion(s, int(rng.choice(descents)), random_swaps(rng, n, 3), Fraction(1, 3))
        except ValueError:
            rejected += 1
    passed = valid == 200 and rejected == 20
    record_criterion(2, passed, f"{valid}/200 valid cases exact, {rejected}/20 invalid inputs rejected")
    assert passed


def test_criterion_03_stochasticity():
    # regenerate exactly the swap words of criteria 1 and 2
    rng = _rng(1)
    dists = []
    for q in Q_EXACT:
        for _ in range(100):
            swaps = random_swaps(rng, 4, int(rng.integers(0, 7)))
            e = Permutation.identity(4)
            dists += [forward_coefficients(e, swaps, q), backward_coefficients(e, swaps, q)]
    for s, i, sw, q in _recursion_cases(_rng(2), 200):
        dists += [forward_coefficients(s, sw, q), forward_coefficients(s.right_swap(i), sw, q),
                  backward_coefficients(s, sw, q)]
    bad = sum(1 for d in dists if not (d.total() == 1 and all(v >= 0 for _, v in d.items())))
    record_criterion(3, bad == 0, f"{len(dists)} coefficient distributions, {bad} not exactly stochastic")
    assert bad == 0


def test_criterion_04_path_oracle():
    rng = _rng(4)
    agree = 0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        swaps = random_swaps(rng, n, int(rng.integers(0, 11)))
        q = Q_EXACT[int(rng.integers(0, 3))]
        s = _random_perm(rng, n)
        agree += dict(forward_coefficients(s, swaps, q).items()) == path_oracle(s, swaps, q)
    record_criterion(4, agree == 50, f"{agree}/50 cases (n<=10, N<=4) equal to the 2^n path sum")
    assert agree == 50


def _skew_diagrams(max_size=5):
    seen = {}
    for ncols in range(1, max_size):
        for outer in itertools.product(range(1, max_size), repeat=ncols):
            if list(outer) != sorted(outer, reverse=True):
                continue
            for inner in itertools.product(range(0, max_size), repeat=ncols):
                if list(inner) != sorted(inner, reverse=True):
                    continue
                try:
                    d = SkewDiagram.from_shapes(outer, inner)
                except ValueError:
                    continue
                if d.size <= max_size:
                    pts = frozenset((m - d.m_min, n - d.n_min) for m, n in d.points)
                    seen[pts] = SkewDiagram(pts)
    return [seen[k] for k in sorted(seen, key=sorted)]


def test_criterion_05_rotation_symmetry():
    rng = _rng(5)
    start = time.perf_counter()
    diagrams = _skew_diagrams()
    assert any(d.points == SkewDiagram.rectangle(2, 3).points for d in diagrams)
    ok, checked = True, 0
    for d in diagrams:
        for q in (Fraction(0), Fraction(1, 2)):
            params = VertexParamField({p: Fraction(int(rng.integers(0, 10)), 10) for p in sorted(d.points)})
            ok &= verify_rotation_symmetry(d, params, q).passed
            checked += 1
    elapsed = time.perf_counter() - start
    passed = ok and elapsed < 60
    record_criterion(5, passed, f"{len(diagrams)} skew diagrams with M+N<=5 incl. 2x3 rectangle, {checked} exact "
                                f"law comparisons, {elapsed:.1f}s (< 60s)")
    assert passed


def test_criterion_06_hall_littlewood_match():
    cases = [("+-", [Fraction(1, 2)], [Fraction(1, 3)]),
             ("++--", [Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 4), Fraction(2, 5)]),
             ("+-+-", [Fraction(2, 5), Fraction(1, 2)], [Fraction(1, 3), Fraction(1, 4)])]
    ok, worst_gap, worst_tail = True, 0.0, 0.0
    for signs, a, b in cases:
        for t in (Fraction(0), Fraction(1, 2)):
            rep = hl.verify_colored_height_match(hl.SignString.parse(signs), a, b, t, tol=1e-10)
            ok &= rep.passed and rep.tail < 1e-10 and rep.normalization.consistent
            worst_gap = max(worst_gap, rep.rim_vs_hl, rep.corner_vs_hl)
            worst_tail = max(worst_tail, rep.tail)
    record_criterion(6, ok, f"M=N=1 and M=N=2 (two boundaries), t in 0,1/2: corner=rim exactly, "
                            f"max gap to process {worst_gap:.2e}, max tail {worst_tail:.2e} (< 1e-10)")
    assert ok


def test_criterion_07_asep_time_reversal():
    exp = AsepReversalExperiment(
        id="c7", kind="asep-reversal", window=(-20, 20), pre_swaps=[-1, 0, 1], t=2.0, q=0.5, replicas=100_000,
        rates={"preset": "split-sinusoid", "z0": 0, "left_base": 1.0, "left_amplitude": 0.5, "right_base": 1.0})
    direct, rev, inv = reversal_samples(exp, RngStream(SEED, 7), exp.replicas)
    d_obs, r_obs = direct.observed[direct.kept], inv[rev.kept]
    p_site = _pooled_chi2(d_obs[:, 20], r_obs[:, 20])[1]
    p_pos = _pooled_chi2((d_obs == 0).argmax(axis=1), (r_obs == 0).argmax(axis=1))[1]
    discard = max(direct.discard_fraction, rev.discard_fraction)
    passed = p_site > 1e-3 and p_pos > 1e-3 and discard < 1e-4
    record_criterion(7, passed, f"chi-square p(color at 0)={p_site:.3f}, p(position of 0)={p_pos:.3f} (> 1e-3), "
                                f"discard {discard:.1e} (< 1e-4), 1e5 replicas per side")
    assert passed


def test_criterion_08_inhomogeneous_identity():
    fields = {"split 1+sin(t)/2 for z<0": RateField.split_sinusoid(0, 1.0, 0.5, 1.0, 0.0),
              "two-speed 1/2 -> 3/2 for z>=0": RateField.two_speed(0.5, 1.5, 1.0, z0=0)}
    worst, ok, j = 0.0, True, 0
    for name, rates in fields.items():
        for q in (0.0, 0.5):
            rep = verify_inhomogeneous_identity(rates, 2.0, [-2, 0, 2], q, 100_000, RngStream(SEED, 80 + j), 3.0)
            j += 1
            ok &= rep.passed and rep.discard_fraction < 1e-3
            worst = max([worst] + [abs(p.z) for p in rep.points])
    record_criterion(8, ok, f"tau=2, x in -2,0,2, q in 0,1/2, two rate fields: max |z| = {worst:.2f} (< 3)")
    assert ok


def test_criterion_09_shock_identity():
    rep = verify_shock_identity(2, 20.0, [-5, 0, 5], 100_000, RngStream(SEED, 9), 3.0)
    exact = verify_shock_identity(2, 0, list(range(-30, 31)), 0, RngStream(SEED, 9))
    worst = max(abs(p.z) for p in rep.points)
    passed = rep.passed and exact.passed and all(p.lhs == p.rhs for p in exact.points)
    record_criterion(9, passed, f"L=2, t=20, x in -5,0,5: max |z| = {worst:.2f} (< 3); t=0 exact for x in -30..30")
    assert passed


def test_criterion_10_limit_laws():
    q = Fraction(1, 2)
    examples = {"single": single_second_class(), "2,1,inf": second_class_before_particle(),
                "1,inf,2": second_class_after_hole()}
    closed = {"single": lambda d: d,
              "2,1,inf": lambda d: d + (1 - q) * d * (1 - d),
              "1,inf,2": lambda d: d ** 2 + q * d * (1 - d)}
    ps = [Fraction(i, 21) for i in range(1, 21)]
    algebra_ok = all(f_k_exact(p, spec, q, 1) == closed[name](p) for name, spec in examples.items() for p in ps)
    worst, ok = 0.0, algebra_ok
    for j, (name, spec) in enumerate(examples.items()):
        res = run_perturbed_asep(spec, 0.5, 400.0, 100_000, RngStream(SEED, 100 + j))
        ok &= res.discard_fraction == 0
        for x in (-0.25, 0.0, 0.25):
            xf = Fraction(str(x))
            lim = limit_cdf(spec, q, 1, xf)
            ok &= lim == closed[name](density_d(-xf, q))
            emp, _ = res.cdf(1, x)
            worst = max(worst, abs(emp - float(lim)))
    ok &= worst < 0.03
    record_criterion(10, ok, f"closed forms exact at 20 rational p: {algebra_ok}; t=400, 1e5 replicas: "
                             f"max |empirical - limit| = {worst:.4f} (< 0.03)")
    assert ok


def test_criterion_11_density_spotcheck():
    rep = density_spotcheck(0.5, 400.0, 20_000, RngStream(SEED, 11))
    passed = rep.passed(0.02) and rep.discard_fraction == 0
    record_criterion(11, passed, f"occupation {rep.occupation:.4f} vs d(0)=1/2, neighbor correlation "
                                 f"{rep.correlation:+.4f} (both within 0.02), 2e4 replicas")
    assert passed


def test_criterion_12_reproducibility(tmp_path):
    cfg = {"seed": SEED, "experiments": [
        {"id": "sym", "kind": "symmetry", "cases": 20},
        {"id": "rev", "kind": "asep-reversal", "t": 1.0, "q": 0.5, "replicas": 2000,
         "rates": {"preset": "sinusoidal", "base": 1.0, "amplitude": 0.5}},
        {"id": "inh", "kind": "inhomogeneous-identity", "tau": 1.0, "q": 0.5, "replicas": 2000,
         "rates": {"preset": "step-in-space", "left": 1.0, "right": 0.5}},
        {"id": "shock", "kind": "shock-identity", "L": 2, "t": 5.0, "replicas": 2000},
        {"id": "pert", "kind": "perturbed-step", "perturbation": "2,1,inf", "q": 0.5, "t": 20.0, "replicas": 2000,
         "tolerance": 0.2},
        {"id": "dens", "kind": "density-spotcheck", "q": 0.5, "t": 20.0, "replicas": 2000, "tolerance": 0.5},
        {"id": "hl", "kind": "hl-match", "sign_string": "+-", "a": ["1/2"], "b": ["1/3"]},
    ]}
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    runner = CliRunner()
    outs = []
    for k in range(2):
        res = runner.invoke(cli_main, [str(path), "--out", str(tmp_path / f"run{k}")])
        assert res.exit_code in (0, 1), res.output
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"run{k}").iterdir())})
    identical = outs[0] == outs[1] and len(outs[0]) >= 3
    record_criterion(12, identical, f"two CLI runs with seed {SEED}: {len(outs[0])} files byte-identical")
    assert identical
