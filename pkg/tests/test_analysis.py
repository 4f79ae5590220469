import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planarks import analysis
from planarks.grid import Layer, LayerStack, norm_l2
from planarks.scf import Device, ScfConfig, solve_scf
from planarks.statistics import FermiDirac, ZeroTemperature


def test_rho_and_mbar():
    assert analysis.rho(0.0, 1.0) == -1
    assert analysis.rho(1.0, 1.0) == -3
    assert analysis.m_bar(np.array([0.2, 0.5])) == 1
    assert analysis.m_bar(np.array([0.2, 3.0])) == 3


def test_classify():
    assert analysis.classify(0.0) == "pass"
    assert analysis.classify(-1e-9) == "inconclusive"
    assert analysis.classify(-1e-6) == "fail"


def test_bounds_zero_potential(well):
    rep = analysis.check_eigenvalue_bounds(well, np.zeros(well.grid.n_nodes), 20)
    assert rep.rho_v == -1 and rep.passed
    assert np.all(rep.lower <= rep.observed) and np.all(rep.observed <= rep.upper)


def test_bounds_random_heterostructure(rng):
    s = LayerStack((Layer(0.25, mass=0.5), Layer(0.5, mass=3.0), Layer(0.25, mass=0.5)))
    dev = Device.from_stack(s, 300)
    for _ in range(10):
        v = rng.normal(size=dev.grid.n_nodes)
        v *= rng.uniform(0, 5) / np.trapezoid(np.abs(v), dev.grid.nodes)
        assert analysis.check_eigenvalue_bounds(dev, v, 20).passed


def test_trace_commuting_case():
    f = FermiDirac(1.0)
    lam, mu = np.array([0.5, 1.0, 3.0]), np.array([-1.0, 2.0, 2.5])
    H = np.zeros((3, 3))
    lhs, rhs, gap = analysis.check_trace_identity(H, lam, mu, f)
    expected = np.sum((f(lam) - f(mu)) * (lam - mu))
    assert lhs == pytest.approx(expected, rel=1e-14) and rhs == pytest.approx(expected, rel=1e-14)


def test_trace_equal_potentials(rng):
    H = rng.normal(size=(6, 6))
    H = H + H.T
    U = rng.normal(size=6)
    lhs, rhs, _ = analysis.check_trace_identity(H, U, U, ZeroTemperature())
    assert lhs == 0 and abs(rhs) < 1e-14


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 50), beta=st.sampled_from([math.inf, 1.0, 7.0]))
def test_trace_identity_random(seed, dim, beta):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=dim - 1)
    H = np.diag(rng.uniform(0, 4, dim)) + np.diag(e, 1) + np.diag(e, -1)
    f = ZeroTemperature() if math.isinf(beta) else FermiDirac(beta)
    lhs, _, gap = analysis.check_trace_identity(H, rng.normal(size=dim), rng.normal(size=dim), f)
    assert gap <= 1e-10 * (1 + abs(lhs))
    assert lhs <= 1e-12  # the identity makes the trace non-positive for decreasing f


def test_monotonicity_oracles(well, rng):
    v = rng.normal(scale=10, size=well.grid.n_nodes)
    for f in (ZeroTemperature(), FermiDirac(1.0)):
        assert analysis.check_monotonicity(well, v, v, f, 1) == 0
        assert abs(analysis.check_monotonicity(well, v + 3.0, v, f, 1)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), beta=st.sampled_from([math.inf, 1.0]), n_part=st.floats(1, 4))
def test_monotonicity_random(seed, beta, n_part):
    rng = np.random.default_rng(seed)
    dev = Device.from_stack(LayerStack.single(), 150)
    U, V = rng.normal(scale=20, size=(2, dev.grid.n_nodes))
    f = ZeroTemperature() if math.isinf(beta) else FermiDirac(beta)
    val = analysis.check_monotonicity(dev, U, V, f, n_part)
    assert val <= 1e-8 * (1 + norm_l2(dev.grid, U - V) ** 2)


def test_apriori(well):
    cfg = ScfConfig(q=0.01)
    res = solve_scf(well, ZeroTemperature(), None, cfg)
    rep = analysis.check_apriori(res, well, cfg)
    assert rep.passed and rep.rhs == pytest.approx(math.sqrt(2) * 0.01 / 0.5)
    assert rep.lhs < 0.2 * rep.rhs
    # rhs independent of the distribution
    res_t = solve_scf(well, FermiDirac(1.0), None, cfg)
    assert analysis.check_apriori(res_t, well, cfg).rhs == rep.rhs


def test_apriori_decoupled():
    dev = Device.from_stack(LayerStack.single(), 100, 0.5, -1.0)
    cfg = ScfConfig(q=0)
    rep = analysis.check_apriori(solve_scf(dev, ZeroTemperature(), None, cfg), dev, cfg)
    assert rep.lhs == 0 and rep.passed


def test_uniqueness(well, bench_config):
    assert analysis.check_uniqueness(well, ZeroTemperature(), bench_config, starts=1).max_distance == 0
    rep = analysis.check_uniqueness(well, ZeroTemperature(), bench_config, starts=3, seed=4)
    assert rep.all_converged and rep.max_distance <= 1e-7
    # constant map: one undamped step lands on the fixed point from any start
    rep = analysis.check_uniqueness(well, ZeroTemperature(), ScfConfig(q=0, damping=1.0), starts=3)
    assert rep.max_distance <= 1e-12


def test_distribution_limit():
    betas = [2.0 ** k for k in range(13)]
    d = analysis.check_distribution_limit(betas)
    assert d[0] >= math.log(2)
    assert all(b < a for a, b in zip(d, d[1:]))
    assert d[-1] <= 1e-3
    far = analysis.check_distribution_limit([1e3], a=-10)
    assert far == pytest.approx(analysis.check_distribution_limit([1e3], a=-1), rel=1e-12)
