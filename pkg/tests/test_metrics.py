import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, floyd_warshall

from searchnet.evolution import EvolutionConfig, run_evolution
from searchnet.graph import BipartiteGraph, ParameterError, Side, new_seed_graph
from searchnet.metrics import (
    METHOD_MLE,
    METHOD_REGRESSION,
    ComponentTooLargeError,
    DegreeHistogram,
    FitError,
    degree_histogram,
    diameter_approx,
    diameter_exact,
    expected_route,
    fit_power_law,
    recursion_ratio_limit,
    theoretical_degree_fraction,
    worst_case_diameter,
)
from searchnet.rng import CH_SEED_GRAPH, substream


def star_graph(leaves=5):
    g = BipartiteGraph()
    g.add_node(Side.TOPIC)
    for u in range(leaves):
        g.add_node(Side.USER)
        g.add_edge(u, 0)
    return g


def evolved_graph(seed, steps, p_search=0.1, c_u=2, c_t=2, users=10, topics=10):
    g = new_seed_graph(
        users, topics, c_u, c_t, connected=True, rng=substream(seed, 0, CH_SEED_GRAPH)
    )
    config = EvolutionConfig(
        beta=0.5, p_search=p_search, c_u=c_u, c_t=c_t, steps=steps, seed=seed
    )
    run_evolution(g, config, keep_reports=False)
    return g


def oracle_diameter_floyd(graph):
    """All-pairs oracle: scipy Floyd-Warshall on the largest component."""
    nu = graph.num_users
    n = nu + graph.num_topics
    rows, cols = [], []
    for u in range(nu):
        for t in graph.neighbors(Side.USER, u):
            rows += [u, nu + t]
            cols += [nu + t, u]
    mat = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(mat, directed=False)
    largest = np.argmax(np.bincount(labels))
    nodes = np.flatnonzero(labels == largest)
    dm = floyd_warshall(mat[nodes][:, nodes], directed=False, unweighted=True)
    return int(dm.max()), len(nodes)


# ---------------------------------------------------------------- histogram


def test_histogram_star():
    g = star_graph(5)
    hu = degree_histogram(g, Side.USER, d_floor=1)
    ht = degree_histogram(g, Side.TOPIC, d_floor=1)
    assert hu.counts == {1: 5} and hu.total_nodes == 5
    assert ht.counts == {5: 1} and ht.total_nodes == 1


def test_histogram_empty_side():
    g = BipartiteGraph()
    g.add_node(Side.USER)
    h = degree_histogram(g, Side.TOPIC)
    assert h.counts == {} and h.total_nodes == 0


def test_histogram_floor_and_recount_oracle():
    g = evolved_graph(seed=4, steps=2000)
    for floor in (1, 11):
        h = degree_histogram(g, Side.USER, d_floor=floor)
        # oracle: direct adjacency recount
        expected = {}
        for i in range(g.num_users):
            d = len(g.neighbors(Side.USER, i))
            if d >= floor:
                expected[d] = expected.get(d, 0) + 1
        assert h.counts == expected
        assert h.total_nodes == sum(expected.values())


# -------------------------------------------------------------- power-law fit


def test_regression_recovers_constructed_exponent():
    # scale chosen so every bin's count rounds within 0.05%: smaller
    # scales leave single-digit counts whose log-rounding skews the slope
    counts = {}
    for d in range(10, 1001):
        c = round(1e12 * d**-3.0)
        if c > 0:
            counts[d] = c
    hist = DegreeHistogram(Side.USER, counts, sum(counts.values()))
    fit = fit_power_law(hist, d_min=10, method=METHOD_REGRESSION)
    assert abs(fit.alpha - (-3.0)) <= 0.05
    assert fit.magnitude == pytest.approx(-fit.alpha)


def test_regression_flat_counts_slope_zero():
    counts = {d: 100 for d in range(10, 101)}
    hist = DegreeHistogram(Side.USER, counts, sum(counts.values()))
    fit = fit_power_law(hist, d_min=10, method=METHOD_REGRESSION)
    assert abs(fit.alpha) <= 0.05
    assert fit.quality == pytest.approx(1.0)


def test_mle_recovers_exact_discrete_power_law():
    # oracle: inverse-CDF sampling from an exact d^-3 law on d >= 10
    rng = np.random.default_rng(2024)
    support = np.arange(10, 1_000_001, dtype=np.float64)
    pmf = support**-3.0
    pmf /= pmf.sum()
    sample = rng.choice(support, size=100_000, p=pmf).astype(np.int64)
    degs, cnts = np.unique(sample, return_counts=True)
    hist = DegreeHistogram(Side.USER, dict(zip(degs.tolist(), cnts.tolist())), len(sample))
    fit = fit_power_law(hist, d_min=10, method=METHOD_MLE)
    assert abs(fit.magnitude - 3.0) <= 0.05
    assert fit.alpha < 0


def test_fit_errors_carry_tail_size():
    hist = DegreeHistogram(Side.USER, {12: 3, 15: 2}, 5)
    with pytest.raises(FitError) as err:
        fit_power_law(hist, d_min=10, method=METHOD_MLE)
    assert err.value.n_tail == 5
    with pytest.raises(FitError):
        fit_power_law(hist, d_min=10, method=METHOD_REGRESSION)


def test_mle_on_evolved_graph_matches_growth_exponent():
    # c_u=c_t=2, beta=0.5, no engine: tail exponent magnitude near 3
    g = evolved_graph(seed=8, steps=30_000, p_search=0.0)
    hist = degree_histogram(g, Side.USER, d_floor=1)
    fit = fit_power_law(hist, d_min=10, method=METHOD_MLE)
    assert abs(fit.magnitude - 3.0) <= 0.4


# ------------------------------------------------------- theory degree curve


def test_theory_fraction_no_engine_base_case():
    config = EvolutionConfig(beta=0.5, p_search=0.0, c_u=2, c_t=2)
    got = theoretical_degree_fraction(2, config, u_term=1.0)
    base = 2 * 0.5 + 2 * 0.5
    assert got == pytest.approx(0.5 * base / (base + 0.5 * 4))


def test_theory_fraction_no_engine_is_pure_power_law():
    config = EvolutionConfig(beta=0.5, p_search=0.0, c_u=2, c_t=2)
    # exponent from the growth ratio: -2 - c_u*beta/(c_t*(1-beta)) = -3
    for i in (4, 8, 16, 64, 256):
        f_i = theoretical_degree_fraction(i, config, u_term=1.0)
        f_2i = theoretical_degree_fraction(2 * i, config, u_term=1.0)
        assert math.log(f_i / f_2i, 2) == pytest.approx(3.0, abs=1e-9)


def test_theory_fraction_engine_case_against_retyped_formula():
    # independent transcription with exact rationals
    config = EvolutionConfig(beta=0.5, p_search=0.1, c_u=2, c_t=2)
    got = theoretical_degree_fraction(10, config, u_term=1.0)
    ratio = Fraction(1)  # c_u*beta / (c_t*(1-beta))
    tail = sum(Fraction(1, k**4) for k in range(2, 11))
    expected = Fraction(1, 10**3) + Fraction(1, 10) * 1 * 2 * (ratio + 1) * tail
    assert got == pytest.approx(float(expected), rel=1e-12)


def test_theory_fraction_domain_error():
    config = EvolutionConfig(beta=0.5, p_search=0.0, c_u=2, c_t=2)
    with pytest.raises(ParameterError):
        theoretical_degree_fraction(1, config, u_term=1.0)


# ----------------------------------------------------------------- diameters


def test_diameter_tiny_path():
    g = BipartiteGraph()
    g.add_node(Side.USER)
    g.add_node(Side.USER)
    g.add_node(Side.TOPIC)
    g.add_edge(0, 0)
    g.add_edge(1, 0)
    rep = diameter_exact(g)
    assert rep.value == 2 and rep.component_size == 3 and rep.is_exact


def test_diameter_complete_bipartite():
    g = BipartiteGraph()
    for _ in range(3):
        g.add_node(Side.USER)
        g.add_node(Side.TOPIC)
    for u in range(3):
        for t in range(3):
            g.add_edge(u, t)
    assert diameter_exact(g).value == 2


def test_diameter_uses_largest_component():
    g = BipartiteGraph()
    for _ in range(2):
        g.add_node(Side.USER)
    for _ in range(2):
        g.add_node(Side.TOPIC)
    g.add_edge(0, 0)
    g.add_edge(1, 0)  # path of 3 nodes
    g.add_edge(1, 1)  # extend: u0-t0-u1-t1 (component of 4)
    g.add_node(Side.USER)  # isolated
    rep = diameter_exact(g)
    assert rep.component_size == 4 and rep.value == 3


def test_diameter_exact_matches_floyd_warshall_oracle():
    for seed in range(8):
        g = evolved_graph(seed=seed, steps=300 + 50 * seed, p_search=0.1 * (seed % 2))
        expected, comp_size = oracle_diameter_floyd(g)
        rep = diameter_exact(g)
        assert rep.value == expected, f"seed {seed}"
        assert rep.component_size == comp_size


def test_diameter_threshold_error():
    g = evolved_graph(seed=1, steps=200)
    with pytest.raises(ComponentTooLargeError):
        diameter_exact(g, max_component=50)


def test_diameter_approx_exact_on_paths():
    # path of 2k+1 nodes has diameter 2k; a double sweep nails the bound
    k = 6
    g = BipartiteGraph()
    for _ in range(k + 1):
        g.add_node(Side.USER)
    for _ in range(k):
        g.add_node(Side.TOPIC)
    for i in range(k):
        g.add_edge(i, i)
        g.add_edge(i + 1, i)
    rep = diameter_approx(g, sweeps=1, rng=3)
    assert rep.lower == 2 * k
    assert rep.upper >= rep.lower


def test_diameter_approx_single_node():
    g = BipartiteGraph()
    g.add_node(Side.USER)
    rep = diameter_approx(g, sweeps=2, rng=0)
    assert (rep.lower, rep.upper) == (0, 0)


def test_diameter_approx_brackets_exact():
    for seed in range(12):
        g = evolved_graph(seed=100 + seed, steps=150 + 40 * seed)
        exact = diameter_exact(g).value
        rep = diameter_approx(g, sweeps=3, rng=seed)
        assert rep.lower <= exact <= rep.upper, f"seed {seed}"


# ------------------------------------------------------------- closed forms


def test_expected_route_frozen_hand_values():
    # hand evaluation recorded before implementation:
    #   core = 5 + 100*(45-5) = 4005
    #   without: 4005 - 99*(1+1)          = 3807
    #   with:    3807 - 99*(0.1*10*2)     = 3609
    config = EvolutionConfig(beta=0.5, p_search=0.1, c_u=2, c_t=2)
    r = expected_route(e0=5, n=10, u=10, d_max=100.0, config=config)
    assert r.value_with_engine == pytest.approx(3609.0)
    assert r.value_without_engine == pytest.approx(3807.0)


def test_expected_route_no_engine_degenerates():
    config = EvolutionConfig(beta=0.4, p_search=0.0, c_u=3, c_t=2)
    r = expected_route(e0=7, n=20, u=15, d_max=50.0, config=config)
    assert r.value_with_engine == r.value_without_engine


def test_expected_route_difference_identity():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        config = EvolutionConfig(
            beta=float(rng.uniform(0.05, 0.95)),
            p_search=float(rng.uniform(0.1, 0.9)),
            c_u=int(rng.integers(1, 6)),
            c_t=int(rng.integers(2, 6)),
        )
        n = int(rng.integers(2, 51))
        u = int(rng.integers(10, 101))
        d_max = float(rng.uniform(2.0, 1000.0))
        e0 = float(rng.uniform(0, n * (n - 1) / 2))
        r = expected_route(e0=e0, n=n, u=u, d_max=d_max, config=config)
        expected_gap = (d_max - 1.0) * config.p_search * u * config.c_t
        gap = r.value_without_engine - r.value_with_engine
        assert gap > 0
        assert abs(gap - expected_gap) <= 1e-12 * expected_gap


def test_expected_route_validation():
    config = EvolutionConfig()
    with pytest.raises(ParameterError):
        expected_route(0, 1, 10, 100.0, config)
    with pytest.raises(ParameterError):
        expected_route(0, 10, 10, 1.0, config)


def test_worst_case_diameter_values():
    assert worst_case_diameter(10, 0.1, with_engine=False) == 11.0
    assert worst_case_diameter(10, 0.1, with_engine=True) == pytest.approx(10.0)
    assert worst_case_diameter(7, 0.0, True) == worst_case_diameter(7, 0.0, False)
    assert worst_case_diameter(10, 0.3, True) <= worst_case_diameter(10, 0.3, False)
    with pytest.raises(ParameterError):
        worst_case_diameter(0, 0.1, True)


# ------------------------------------------------------- recursion limit


def test_recursion_limit_constant_coefficients():
    ratio = recursion_ratio_limit(1.0, 2.0, t0=1, a0=0.0, horizon=1_000_000)
    assert abs(ratio - 1.0) <= 1e-3


def test_recursion_zero_additive_term_decays():
    ratio = recursion_ratio_limit(1.0, 0.0, t0=1, a0=100.0, horizon=100_000)
    assert abs(ratio) <= 1e-2


def test_recursion_drifting_sequences_match_retyped_oracle():
    # independent straight-line transcription of the same recursion;
    # starts at t0=3 where b_t/t first drops below 1
    def oracle(T):
        a = 0.0
        for t in range(3, T):
            a = (1.0 - (1.0 + 1.0 / math.log(t)) / t) * a + (3.0 - 1.0 / t)
        return a / T

    horizon = 100_000
    got = recursion_ratio_limit(
        lambda t: 1.0 + 1.0 / math.log(t), lambda t: 3.0 - 1.0 / t, t0=3, horizon=horizon
    )
    assert got == pytest.approx(oracle(horizon), rel=1e-9)
    # the limit is 3/2 but the approach is O(1/log T); check the drift
    # direction rather than a tolerance the horizon cannot reach
    closer = recursion_ratio_limit(
        lambda t: 1.0 + 1.0 / math.log(t), lambda t: 3.0 - 1.0 / t, t0=3, horizon=10 * horizon
    )
    assert abs(closer - 1.5) < abs(got - 1.5) < 0.08


def test_recursion_domain_errors():
    with pytest.raises(ParameterError):
        recursion_ratio_limit(-1.5, 1.0, horizon=100)
    with pytest.raises(ParameterError):
        recursion_ratio_limit(lambda t: -2.0, 1.0, horizon=100)
    with pytest.raises(ParameterError):
        recursion_ratio_limit(5.0, 1.0, t0=1, horizon=100)  # b/t > 1 at start
    with pytest.raises(ParameterError):
        recursion_ratio_limit(1.0, 1.0, t0=10, horizon=5)
