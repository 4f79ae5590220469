import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarks.errors import DomainError, InvalidResolution
from planarks.grid import (
    Grid,
    Layer,
    LayerStack,
    build_grid,
    dual_norm_wm12,
    element_to_nodal,
    integrate,
    norm_l1,
    norm_l2,
    norm_w12,
    sample_layers,
)


def stack(*fractions, **per_layer):
    layers = []
    for k, t in enumerate(fractions):
        kw = {key: vals[k] for key, vals in per_layer.items()}
        layers.append(Layer(thickness=t, **kw))
    return LayerStack(tuple(layers))


def test_uniform_single_layer():
    g = build_grid(4, LayerStack.single())
    assert np.allclose(g.nodes, [0, 0.25, 0.5, 0.75, 1])


def test_interface_nodes_present():
    g = build_grid(4, stack(0.5, 0.5))
    assert 0.5 in g.nodes
    g = build_grid(10, stack(0.2, 0.3, 0.5))
    assert g.n_nodes == 11
    assert np.any(np.isclose(g.nodes, 0.2, atol=1e-15))
    assert np.any(np.isclose(g.nodes, 0.5, atol=1e-15))


def test_resolution_errors():
    with pytest.raises(InvalidResolution):
        build_grid(2, stack(0.2, 0.3, 0.5))
    with pytest.raises(InvalidResolution):
        build_grid(1, LayerStack.single())


def test_stack_validation():
    with pytest.raises(DomainError, match="sum"):
        stack(0.5, 0.6)
    with pytest.raises(DomainError, match="mass"):
        stack(1.0, mass=[0.0])
    with pytest.raises(DomainError, match="eps"):
        stack(1.0, eps=[-1.0])


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 0.6, 0.5, 1.0]))
    with pytest.raises(ValueError):
        Grid(np.array([0.0, 1.0]))


@settings(max_examples=50, deadline=None)
@given(
    fr=st.lists(st.floats(0.05, 1.0), min_size=1, max_size=5),
    n=st.integers(5, 300),
)
def test_grid_aligns_with_every_interface(fr, n):
    total = math.fsum(fr)
    fr = [f / total for f in fr]
    fr[-1] = 1.0 - math.fsum(fr[:-1])
    s = LayerStack(tuple(Layer(thickness=f) for f in fr))
    g = build_grid(max(n, len(fr)), s)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert np.all(np.diff(g.nodes) > 0)
    for x in s.interfaces():
        assert np.min(np.abs(g.nodes - x)) < 1e-14
    # every element inside exactly one layer
    sample_layers(s, g)


def test_sample_layers():
    s = stack(0.5, 0.5, eps=[1.0, 2.0])
    g = build_grid(8, s)
    c = sample_layers(s, g)
    assert np.all(c.eps[g.midpoints < 0.5] == 1) and np.all(c.eps[g.midpoints > 0.5] == 2)
    s = stack(0.3, 0.4, 0.3, band_offset=[0, 0.3, 0])
    g = build_grid(10, s)
    c = sample_layers(s, g)
    mid = (g.midpoints > 0.3) & (g.midpoints < 0.7)
    assert np.all(c.band_offset[mid] == 0.3) and np.all(c.band_offset[~mid] == 0)
    assert np.all(sample_layers(LayerStack.single(), Grid.uniform(7)).mass == 1)


def test_integrate_oracles():
    assert integrate(Grid.uniform(9), np.ones(10)) == pytest.approx(1.0, abs=1e-15)
    assert integrate(Grid.uniform(2), np.array([0.0, 1.0, 0.0])) == 0.5
    g = Grid.uniform(1000)
    assert abs(integrate(g, 2 * np.sin(np.pi * g.nodes) ** 2) - 1) <= 1e-5


def test_norms():
    g = Grid.uniform(50)
    z = np.zeros(51)
    assert norm_l1(g, z) == norm_l2(g, z) == norm_w12(g, z) == 0
    assert norm_l1(g, np.full(51, -3.0)) == pytest.approx(3)
    assert norm_l2(g, np.full(51, -3.0)) == pytest.approx(3)
    g = Grid.uniform(1000)
    assert norm_w12(g, g.nodes) == pytest.approx(math.sqrt(4 / 3), abs=1e-4)


def test_dual_norm():
    g = Grid.uniform(2000)
    assert dual_norm_wm12(g, np.zeros(g.n_elements)) == 0
    exact = math.sqrt(1 - 2 * math.tanh(0.5))
    assert exact == pytest.approx(0.2752557, abs=1e-7)
    assert dual_norm_wm12(g, np.ones(g.n_elements)) == pytest.approx(exact, abs=1e-3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(-50, 50))
def test_dual_norm_homogeneous(seed, c):
    g = Grid.uniform(64)
    d = np.random.default_rng(seed).normal(size=g.n_elements)
    assert dual_norm_wm12(g, c * d) == pytest.approx(abs(c) * dual_norm_wm12(g, d), rel=1e-12, abs=1e-300)


def test_element_to_nodal_constant():
    g = build_grid(9, stack(0.3, 0.7))
    assert np.allclose(element_to_nodal(g, np.full(9, 2.5)), 2.5)
