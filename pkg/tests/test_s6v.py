from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from colorsym.particle_system import ParticleConfiguration
from colorsym.s6v import (PathConfiguration, SkewDiagram, VertexParamField, colored_heights, corner_height_point,
                          edge_key, enumerate_configurations, enumerate_vertex_model, height_function,
                          permutation_law, run_s6v, sample_vertex_model, straight_probability,
                          verify_lattice_consistency, verify_rotation_symmetry)

HALF = Fraction(1, 2)


def _random_field(diagram, rng, denominator=7):
    return VertexParamField({p: Fraction(int(rng.integers(0, denominator)), denominator)
                             for p in sorted(diagram.points)})


def test_straight_probability():
    assert straight_probability(Fraction(1, 3), 0) == Fraction(2, 3)
    assert straight_probability(Fraction(1, 3), HALF) == Fraction(4, 5)
    assert straight_probability(0, HALF) == 1


def test_param_field_range_checked():
    with pytest.raises(ValueError):
        VertexParamField({(0, 0): 1})
    f = VertexParamField.constant([(0, 0)], HALF)
    assert f[(0, 0)] == HALF and f[(5, 5)] == 0


def test_diagram_validation():
    d = SkewDiagram.from_shapes([3, 2, 1], [1])
    assert d.size == 6 and not d.is_ferrers()
    assert SkewDiagram.rectangle(2, 3).is_ferrers()
    with pytest.raises(ValueError):
        SkewDiagram.from_shapes([1, 2])
    with pytest.raises(ValueError):
        SkewDiagram.from_shapes([2, 1], [2, 2])
    with pytest.raises(ValueError):
        SkewDiagram(frozenset({(0, 0), (1, 1)}))       # disconnected


def test_boundary_edges_and_keys():
    d = SkewDiagram.rectangle(2, 2)
    assert d.input_edges() == [("h", 0, 1), ("h", 0, 0), ("v", 0, 0), ("v", 1, 0)]
    assert [edge_key(e) for e in d.input_edges()] == [-3, -1, 1, 3]
    assert d.output_edges() == [("h", 2, 0), ("h", 2, 1), ("v", 1, 2), ("v", 0, 2)]
    assert [edge_key(e) for e in d.output_edges()] == [3, 1, -1, -3]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3))
def test_rotation_is_involution(cols):
    outer = sorted(cols, reverse=True)
    d = SkewDiagram.from_shapes(outer)
    assert d.rotate180().rotate180().points == d.points
    assert d.rotate180().size == d.size


def test_hand_forced_heights_all_straight():
    # 2x2 rectangle, packed inputs 1..4; with x = 0 and q = 0 every vertex
    # with increasing colors goes straight, which fixes the whole configuration.
    d = SkewDiagram.rectangle(2, 2)
    params = VertexParamField.constant(d.points, Fraction(0))
    configs = list(enumerate_configurations(d, params, Fraction(0)))
    assert len(configs) == 1
    cfg, w = configs[0]
    assert w == 1
    expected = {
        ("h", 0, 1): 1, ("h", 0, 0): 2, ("v", 0, 0): 3, ("v", 1, 0): 4,
        ("h", 1, 0): 2, ("v", 0, 1): 3, ("h", 2, 0): 2, ("v", 1, 1): 4,
        ("h", 1, 1): 1, ("v", 0, 2): 3, ("h", 2, 1): 1, ("v", 1, 2): 4,
    }
    assert cfg.edges == expected and cfg.check_conservation()
    assert height_function(cfg, 2, 0, 1) == 0
    assert height_function(cfg, 2, 0, 2) == 1
    assert height_function(cfg, 2, 1, 1) == 1
    assert height_function(cfg, 2, 1, 2) == 2
    assert height_function(cfg, 0, 1, 2) == 2
    assert corner_height_point(d) == (2, 1)
    assert colored_heights(cfg, 2, 1) == (2, 2, 1)
    assert cfg.outputs == (2, 1, 4, 3)


def test_hand_forced_heights_all_turning():
    d = SkewDiagram.rectangle(2, 2)
    edges = {
        ("h", 0, 1): 1, ("h", 0, 0): 2, ("v", 0, 0): 3, ("v", 1, 0): 4,
        ("h", 1, 0): 3, ("v", 0, 1): 2, ("h", 2, 0): 4, ("v", 1, 1): 3,
        ("h", 1, 1): 2, ("v", 0, 2): 1, ("h", 2, 1): 3, ("v", 1, 2): 2,
    }
    cfg = PathConfiguration(d, edges)
    assert cfg.check_conservation()
    assert colored_heights(cfg, 2, 1) == (1, 0, 0)
    assert height_function(cfg, 1, 1, 2) == 1
    with pytest.raises(ValueError):
        height_function(cfg, 3, 0)
    # its probability is the product of turning weights
    x = Fraction(1, 3)
    params = VertexParamField.constant(d.points, x)
    law = dict(((tuple(sorted(c.edges.items())), w) for c, w in enumerate_configurations(d, params, 0)))
    assert law[tuple(sorted(edges.items()))] == (1 - straight_probability(x, 0)) ** 4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([Fraction(0), HALF, Fraction(1, 3)]))
def test_enumeration_is_a_law(seed, q):
    rng = np.random.default_rng(seed)
    d = SkewDiagram.from_shapes([2, 2, 1])
    params = _random_field(d, rng)
    law = enumerate_vertex_model(d, params, q)
    assert sum(law.values()) == 1 and all(w > 0 for w in law.values())
    by_config = {}
    for cfg, w in enumerate_configurations(d, params, q):
        assert cfg.check_conservation()
        by_config[cfg.outputs] = by_config.get(cfg.outputs, 0) + w
    assert by_config == law


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([Fraction(0), HALF]),
       st.sampled_from([([1], []), ([2], []), ([1, 1], []), ([2, 1], []), ([2, 2], [1]), ([3, 1], []),
                        ([2, 2], []), ([3, 2, 1], [1])]))
def test_rotation_symmetry_property(seed, q, shape):
    d = SkewDiagram.from_shapes(*shape)
    rep = verify_rotation_symmetry(d, _random_field(d, np.random.default_rng(seed)), q)
    assert rep.passed and rep.max_discrepancy == 0


def test_rotation_symmetry_fails_without_rotating_parameters():
    d = SkewDiagram.rectangle(2, 2)
    params = VertexParamField({(0, 0): Fraction(1, 5), (1, 0): Fraction(1, 2), (0, 1): Fraction(3, 4),
                               (1, 1): Fraction(0)})
    direct = permutation_law(d, params, HALF)
    unrotated = {p.inverse(): w for p, w in permutation_law(d.rotate180(), params, HALF).items()}
    assert direct != unrotated


@pytest.mark.parametrize("M,N", [(1, 1), (2, 1), (2, 2), (1, 3)])
def test_lattice_consistency(M, N):
    rng = np.random.default_rng(M * 10 + N)
    d = SkewDiagram.rectangle(M, N)
    assert verify_lattice_consistency(M, N, _random_field(d, rng), Fraction(1, 3)).passed


def test_sampler_matches_enumeration():
    d = SkewDiagram.from_shapes([2, 1])
    params = VertexParamField.constant(d.points, Fraction(2, 5))
    law = enumerate_vertex_model(d, params, HALF)
    rng = np.random.default_rng(4)
    n = 6000
    counts = {}
    for _ in range(n):
        out = sample_vertex_model(d, params, HALF, rng).outputs
        counts[out] = counts.get(out, 0) + 1
    for out, p in law.items():
        p = float(p)
        assert abs(counts.get(out, 0) / n - p) < 4.5 * np.sqrt(p * (1 - p) / n)


def test_enumeration_size_limit():
    with pytest.raises(ValueError):
        enumerate_vertex_model(SkewDiagram.rectangle(4, 4), VertexParamField(), 0)


def test_line_dynamics_preserves_colors():
    c = ParticleConfiguration.packed(-4, 4)
    pts = [(z, T) for z in range(-4, 4) for T in range(6)]
    params = VertexParamField.constant(pts, HALF)
    out = run_s6v(c, params, 0.5, 6, np.random.default_rng(0))
    assert out.is_bijection() and out.color_multiset() == c.color_multiset()
