import math

import numpy as np
import pytest
from scipy.optimize import linprog

from opcover import linalg
from opcover.covering import (
    CapacityResult,
    ClassicalHypergraph,
    CoveringResult,
    QuantumHypergraph,
    classical_covering_sample,
    covering_capacity,
    covering_number_bruteforce,
    covering_randomized,
    covering_size_bounds,
    degree,
    generalized_covering_number,
    is_covering,
    product_hypergraph,
    quantum_covering_sample,
    random_hypergraph,
    replay_covering_result,
)
from opcover.linalg import LN2, BoundViolation
from opcover.rng import make_rng, random_effect

E0 = np.diag([1.0, 0.0])
E1 = np.diag([0.0, 1.0])
PLUS = np.array([[0.5, 0.5], [0.5, 0.5]])


def orthogonal_pair():
    return QuantumHypergraph(2, [E0, E1], 1.0)


def lp_capacity_diagonal(g):
    """Independent vertex-wise LP for diagonal families: max_P min_v sum P(E) E_vv."""
    cols = np.array([np.real(np.diag(e)) for e in g.edges])  # (num_edges, dim)
    m = g.num_edges
    # variables (P, t): minimize -t subject to t <= sum_E P(E) E_vv per vertex
    a_ub = np.hstack([-cols.T, np.ones((g.dim, 1))])
    res = linprog(
        c=np.concatenate([np.zeros(m), [-1.0]]),
        A_ub=a_ub,
        b_ub=np.zeros(g.dim),
        A_eq=np.concatenate([np.ones(m), [0.0]]).reshape(1, -1),
        b_eq=[1.0],
        bounds=[(0, None)] * m + [(None, None)],
        method="highs",
    )
    assert res.success
    return -res.fun


class TestHypergraphTypes:
    def test_classical_validation(self):
        with pytest.raises(ValueError, match="support"):
            ClassicalHypergraph(3, [((0, 5), {0: 0.1})], 1.0)
        with pytest.raises(ValueError, match="leaks"):
            ClassicalHypergraph(3, [((0,), {1: 0.1})], 1.0)
        with pytest.raises(ValueError, match="eta"):
            ClassicalHypergraph(3, [((0,), {0: 0.5})], 0.4)
        with pytest.raises(ValueError, match="nonnegative"):
            ClassicalHypergraph(3, [((0,), {0: -0.1})], 1.0)

    def test_classical_mean_and_json(self):
        g = ClassicalHypergraph(
            4, [((0, 1), {0: 0.5, 1: 0.25}), ((2, 3), {2: 0.5, 3: 0.5})], 0.5
        )
        q = g.mean_measure([0.25, 0.75])
        assert np.allclose(q, [0.125, 0.0625, 0.375, 0.375])
        g2 = ClassicalHypergraph.from_json(g.to_json())
        assert g2.num_vertices == 4 and g2.eta == 0.5
        assert np.array_equal(g2.weights, g.weights)
        assert g2.supports == g.supports

    def test_quantum_validation(self):
        with pytest.raises(ValueError, match="positive semidefinite"):
            QuantumHypergraph(2, [np.diag([-0.2, 0.5])], 1.0)
        with pytest.raises(ValueError, match="eta cap"):
            QuantumHypergraph(2, [np.eye(2)], 0.5)
        with pytest.raises(ValueError, match="dimension mismatch"):
            QuantumHypergraph(3, [np.eye(2)], 1.0)
        with pytest.raises(ValueError, match="at least one edge"):
            QuantumHypergraph(2, [], 1.0)

    def test_quantum_average_and_json(self):
        g = QuantumHypergraph(2, [E0, PLUS], 1.0)
        rho = g.edge_average([0.5, 0.5])
        assert np.allclose(rho, 0.5 * E0 + 0.5 * PLUS)
        g2 = QuantumHypergraph.from_json(g.to_json())
        assert all(np.allclose(a, b) for a, b in zip(g.edges, g2.edges))

    def test_diagonal_conversion(self):
        g = QuantumHypergraph(3, [np.diag([0.5, 0.0, 0.25]), np.diag([0.0, 1.0, 0.0])], 1.0)
        c = g.to_classical()
        assert c.supports == (frozenset({0, 2}), frozenset({1}))
        assert np.allclose(c.weights[0], [0.5, 0.0, 0.25])
        with pytest.raises(ValueError, match="diagonal"):
            QuantumHypergraph(2, [PLUS], 1.0).to_classical()


class TestDegreeAndCovering:
    def test_degree_empty_and_pair(self):
        g = orthogonal_pair()
        assert np.allclose(degree(g, []), np.zeros((2, 2)))
        assert np.allclose(degree(g, [0, 1]), np.eye(2))
        # repeats count with multiplicity
        assert np.allclose(degree(g, [0, 0]), 2.0 * E0)

    def test_degree_is_entrywise_sum(self):
        rng = make_rng(11)
        edges = [random_effect(rng, 2) for _ in range(3)]
        g = QuantumHypergraph(2, edges, 1.0)
        assert np.allclose(degree(g), edges[0] + edges[1] + edges[2])

    def test_is_covering(self):
        g = orthogonal_pair()
        assert is_covering(g, [0, 1])
        assert not is_covering(g, [0])
        half = QuantumHypergraph(2, [0.5 * np.eye(2)], 0.5)
        assert not is_covering(half, [0])
        assert is_covering(half, [0, 0])


class TestCoveringRandomized:
    def test_orthogonal_pair(self):
        g = orthogonal_pair()
        res = covering_randomized(g, [0.5, 0.5], seed=7)
        # mixture has least eigenvalue 1/2, so the size guarantee is
        # 1 + 8 ln2 / 0.5 = 12.09...
        assert math.isclose(res.details["k_bound_min_eig"], 1.0 + 16.0 * LN2)
        assert res.num_draws <= 12
        assert res.certified and not res.beyond_bound
        assert set(res.edge_multiplicities) == {0, 1}
        assert is_covering(g, res.picked_edge_indices)
        assert replay_covering_result(g, res)["all"]

    def test_identity_point_mass(self):
        g = QuantumHypergraph(3, [np.eye(3)], 1.0)
        res = covering_randomized(g, [1.0], seed=0)
        assert res.num_draws == 1 and res.certified
        assert res.edge_multiplicities == {0: 1}

    def test_point_mass_needs_two_copies(self):
        g = QuantumHypergraph(2, [np.diag([1.0, 0.5]), E0], 1.0)
        res = covering_randomized(g, [1.0, 0.0], seed=0)
        assert res.num_draws == 2
        assert res.certified
        assert np.allclose(res.sampled_average, np.diag([2.0, 1.0]))

    def test_singular_mixture_rejected(self):
        g = QuantumHypergraph(2, [E0], 1.0)
        with pytest.raises(ValueError, match="singular"):
            covering_randomized(g, [1.0], seed=0)

    def test_uniform_degree_bound_agrees(self):
        # with uniform P the two reported size bounds coincide
        g = random_hypergraph(23, dim=2, num_edges=4)
        delta = linalg.min_eigenvalue(degree(g))
        assert delta > 0
        p = np.full(4, 0.25)
        res = covering_randomized(g, p, seed=5)
        uniform_bound = 1.0 + 8.0 * 4 * LN2 * 1.0 / delta
        assert math.isclose(res.details["k_bound_uniform_degree"], uniform_bound)
        assert math.isclose(
            res.details["k_bound_min_eig"], uniform_bound, rel_tol=1e-9
        )
        assert res.num_draws <= uniform_bound
        assert is_covering(g, res.picked_edge_indices)

    def test_size_bounds_helper(self):
        g = orthogonal_pair()
        bounds = covering_size_bounds(g, [0.25, 0.75])
        assert math.isclose(bounds["uniform_degree"], 1.0 + 16.0 * LN2)
        assert math.isclose(bounds["min_eig"], 1.0 + 8.0 * LN2 / 0.25)


def e_uniform_instance():
    # 8 vertices, two disjoint 4-vertex edges, weight 1/e = 1/4 inside
    edges = [
        (range(0, 4), {v: 0.25 for v in range(0, 4)}),
        (range(4, 8), {v: 0.25 for v in range(4, 8)}),
    ]
    return ClassicalHypergraph(8, edges, 0.25)


class TestClassicalSample:
    def test_single_edge_exact(self):
        g = ClassicalHypergraph(4, [(range(4), {v: 0.25 for v in range(4)})], 0.25)
        res = classical_covering_sample(g, [1.0], eps=0.5, tau=0.5, seed=3)
        assert res.num_draws == 1
        assert res.excluded_vertices == ()
        assert np.array_equal(res.sampled_average, g.mean_measure([1.0]))
        assert res.certified
        assert res.details["l1_distance"] == 0.0

    def test_e_uniform_instance(self):
        g = e_uniform_instance()
        res = classical_covering_sample(g, [0.5, 0.5], eps=0.2, tau=0.2, seed=17)
        assert res.certified
        # draw-count formula frozen: 1 + 2 * (2 ln2 * 4) / 0.008
        assert math.isclose(res.details["draw_bound"], 1387.2943611198905)
        assert res.num_draws == 1387
        # verify every postcondition directly over all 8 vertices
        q = g.mean_measure([0.5, 0.5])
        counts = res.counts_vector(2)
        qbar = (counts[0] * g.weights[0] + counts[1] * g.weights[1]) / res.num_draws
        assert np.allclose(qbar, res.sampled_average)
        assert res.excluded_vertices == ()  # Q(v) = 1/8 >= 0.2/8 everywhere
        assert np.all(qbar >= (1 - 0.2) * q - 1e-12)
        assert np.all(qbar <= (1 + 0.2) * q + 1e-12)
        assert np.abs(q - qbar).sum() <= 2 * 0.2 + 2 * 0.2
        assert replay_covering_result(g, res, p=[0.5, 0.5], eps=0.2, tau=0.2)["all"]

    def test_seeded_random_instance(self):
        rng = make_rng(29)
        edges = []
        for _ in range(10):
            support = sorted(rng.choice(32, size=12, replace=False).tolist())
            edges.append((support, {v: float(rng.uniform(0.05, 0.5)) for v in support}))
        g = ClassicalHypergraph(32, edges, 0.5)
        p = rng.dirichlet(np.ones(10))
        res = classical_covering_sample(g, p, eps=0.3, tau=0.3, seed=31)
        assert res.certified
        assert res.details["excluded_mass"] <= 0.3
        assert replay_covering_result(g, res, p=p, eps=0.3, tau=0.3)["all"]

    def test_budget_exhaustion_reports_side(self):
        g = e_uniform_instance()
        with pytest.raises(RuntimeError, match="budget exhausted"):
            classical_covering_sample(g, [0.5, 0.5], eps=1e-4, tau=0.2, seed=1, draws=3)

    def test_unequal_masses_skip_l1_bound(self):
        g = ClassicalHypergraph(
            2, [((0,), {0: 0.5}), ((0, 1), {0: 0.5, 1: 0.5})], 0.5
        )
        res = classical_covering_sample(g, [0.4, 0.6], eps=0.5, tau=0.5, seed=9)
        assert res.details["l1_bound"] is None


class TestQuantumSample:
    def test_single_edge_exact(self):
        g = QuantumHypergraph(2, [PLUS], 1.0)
        res = quantum_covering_sample(g, [1.0], eps=0.3, tau=0.3, seed=2)
        assert res.num_draws == 1
        assert np.allclose(res.sampled_average, PLUS)
        assert res.certified
        assert res.details["l1_distance"] <= 1e-12

    def test_qubit_pair_frozen(self):
        g = QuantumHypergraph(2, [0.5 * E0, 0.5 * PLUS], 0.5)
        res = quantum_covering_sample(g, [0.5, 0.5], eps=0.1, tau=0.1, seed=19)
        assert res.certified
        # formula frozen: 1 + 0.5 * 2 * (2 ln2 * log2 4) / (0.01 * 0.1)
        assert math.isclose(res.details["draw_bound"], 2773.588722239781)
        assert res.num_draws == 2773
        # both mixture eigenvalues clear tau/dim = 0.05, nothing is cut
        assert np.allclose(res.pi0, np.zeros((2, 2)))
        assert np.allclose(res.pi1, np.eye(2))
        assert res.details["sandwich_lower_slack"] >= -1e-9
        assert res.details["sandwich_upper_slack"] >= -1e-9
        # equal traces 0.5 arm the trace-norm consequence
        bound = 0.2 + math.sqrt(8 * 0.2)
        assert res.details["l1_bound"] == pytest.approx(bound)
        assert res.details["l1_distance"] <= bound
        assert replay_covering_result(g, res, p=[0.5, 0.5], eps=0.1, tau=0.1)["all"]

    def test_excluded_mass_within_tau(self):
        rng = make_rng(41)
        g = QuantumHypergraph(3, [random_effect(rng, 3) for _ in range(4)], 1.0)
        res = quantum_covering_sample(g, np.full(4, 0.25), eps=0.4, tau=0.15, seed=43)
        rho = g.edge_average(np.full(4, 0.25))
        assert float(np.real(np.trace(rho @ res.pi0))) <= 0.15 + 1e-12
        assert linalg.is_projector(res.pi0) and linalg.is_projector(res.pi1)

    def test_prescribed_draws(self):
        g = QuantumHypergraph(2, [0.5 * E0, 0.5 * PLUS], 0.5)
        res = quantum_covering_sample(g, [0.5, 0.5], eps=0.1, tau=0.1, seed=19, draws=5000)
        assert res.num_draws == 5000
        assert res.beyond_bound  # 5000 exceeds the formula value
        assert res.certified  # the caller owns a prescribed draw count
        assert replay_covering_result(g, res, p=[0.5, 0.5], eps=0.1, tau=0.1)["all"]

    def test_zero_mixture_rejected(self):
        g = QuantumHypergraph(2, [np.zeros((2, 2))], 1.0)
        with pytest.raises(ValueError, match="zero"):
            quantum_covering_sample(g, [1.0], eps=0.1, tau=0.1, seed=0)

    def test_diagonal_case_matches_classical(self):
        # same seed protocol: a diagonal family must reproduce the
        # classical sampler on the induced hypergraph, draw for draw
        diags = [
            np.diag([0.5, 0.3, 0.0001, 0.2]),
            np.diag([0.1, 0.4, 0.0001, 0.3]),
            np.diag([0.3, 0.1, 0.0001, 0.5]),
        ]
        g = QuantumHypergraph(4, diags, 0.5)
        p = [0.3, 0.3, 0.4]
        qres = quantum_covering_sample(g, p, eps=0.25, tau=0.3, seed=57)
        cres = classical_covering_sample(g.to_classical(), p, eps=0.25, tau=0.3, seed=57)
        assert qres.edge_multiplicities == cres.edge_multiplicities
        assert qres.num_draws == cres.num_draws
        assert qres.attempts == cres.attempts
        assert qres.certified == cres.certified
        assert np.allclose(np.real(np.diag(qres.sampled_average)), cres.sampled_average,
                           atol=1e-12)
        # vertex 2 sits below tau/dim = 0.075 and is cut on both sides
        assert cres.excluded_vertices == (2,)
        assert np.allclose(np.real(np.diag(qres.pi0)), [0.0, 0.0, 1.0, 0.0], atol=1e-12)


class TestProductHypergraph:
    def test_n1_is_same_object(self):
        g = orthogonal_pair()
        assert product_hypergraph(g, 1) is g

    def test_orthogonal_pair_squared(self):
        g2 = product_hypergraph(orthogonal_pair(), 2)
        assert g2.dim == 4 and g2.num_edges == 4
        # the four edges are exactly the four basis projectors
        got = sorted(int(np.flatnonzero(np.real(np.diag(e)))[0]) for e in g2.edges)
        assert got == [0, 1, 2, 3]

    def test_random_edges_match_tensor(self):
        g = random_hypergraph(3, dim=2, num_edges=2)
        g2 = product_hypergraph(g, 2)
        expected = [np.kron(a, b) for a in g.edges for b in g.edges]
        assert all(np.allclose(x, y) for x, y in zip(g2.edges, expected))
        assert g2.eta == g.eta**2

    def test_overflow(self):
        g = QuantumHypergraph(8, [np.eye(8)], 1.0)
        with pytest.raises(ValueError, match="overflow"):
            product_hypergraph(g, 5)


class TestCoveringNumbers:
    def test_identity_edge(self):
        g = QuantumHypergraph(2, [np.eye(2)], 1.0)
        assert covering_number_bruteforce(g, 1) == 1
        assert covering_number_bruteforce(g, 2) == 1

    def test_orthogonal_pair_exact(self):
        g = orthogonal_pair()
        assert covering_number_bruteforce(g, 1) == 2
        assert covering_number_bruteforce(g, 2) == 4

    def test_half_identity_multiset(self):
        g = QuantumHypergraph(2, [0.5 * np.eye(2)], 0.5)
        assert covering_number_bruteforce(g, 1) == 2

    def test_deficient_degree_signaled(self):
        g = QuantumHypergraph(2, [E0], 1.0)
        assert covering_number_bruteforce(g, 1) == math.inf

    def test_submultiplicative(self):
        g = random_hypergraph(101, dim=2, num_edges=2)
        c1 = covering_number_bruteforce(g, 1)
        c2 = covering_number_bruteforce(g, 2)
        assert c2 <= c1 * c1

    def test_generalized_identity(self):
        g = QuantumHypergraph(2, [np.eye(2)], 1.0)
        assert generalized_covering_number(g, 1) == pytest.approx(1.0, abs=1e-6)
        assert generalized_covering_number(g, 2) == pytest.approx(1.0, abs=1e-6)

    def test_generalized_orthogonal_pair(self):
        g = orthogonal_pair()
        assert generalized_covering_number(g, 1) == pytest.approx(2.0, abs=1e-6)
        assert generalized_covering_number(g, 2) == pytest.approx(4.0, abs=1e-6)

    def test_generalized_grid_cross_check(self):
        # orthogonal pair: scan symmetric weights (w, w); feasibility is
        # w >= 1, so the grid minimum of the total is 2
        g = orthogonal_pair()
        best = math.inf
        for w in np.linspace(0.5, 2.0, 301):
            if linalg.psd_leq(np.eye(2), w * E0 + w * E1):
                best = min(best, 2 * w)
        assert best == pytest.approx(2.0, abs=1e-2)
        assert generalized_covering_number(g, 1) <= best + 1e-6

    def test_generalized_below_bruteforce(self):
        for seed in (201, 202, 203):
            g = random_hypergraph(seed, dim=2, num_edges=2)
            for n in (1, 2):
                c = covering_number_bruteforce(g, n)
                ct = generalized_covering_number(g, n, tol=1e-9)
                assert ct <= c + 1e-6

    def test_generalized_infeasible(self):
        g = QuantumHypergraph(2, [E0], 1.0)
        with pytest.raises(ValueError, match="kernel"):
            generalized_covering_number(g, 1)


class TestCoveringCapacity:
    def test_identity(self):
        g = QuantumHypergraph(2, [np.eye(2)], 1.0)
        cap = covering_capacity(g)
        assert cap.bits == pytest.approx(0.0, abs=1e-9)
        assert cap.value == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_pair(self):
        cap = covering_capacity(orthogonal_pair())
        assert cap.value == pytest.approx(0.5, abs=1e-9)
        assert cap.bits == pytest.approx(1.0, abs=1e-6)
        assert np.allclose(cap.witness, [0.5, 0.5], atol=1e-6)

    def test_point_optimum(self):
        # mixing in the first edge only hurts: optimum sits at P = (0, 1)
        g = QuantumHypergraph(2, [E0, 0.5 * np.eye(2)], 1.0)
        cap = covering_capacity(g)
        assert cap.value == pytest.approx(0.5, abs=1e-9)
        assert cap.bits == pytest.approx(1.0, abs=1e-6)
        assert np.allclose(cap.witness, [0.0, 1.0], atol=1e-6)
        # 1-D grid oracle over the mixing weight
        grid = max(
            linalg.min_eigenvalue((1 - t) * g.edges[0] + t * g.edges[1])
            for t in np.linspace(0, 1, 2001)
        )
        assert cap.value == pytest.approx(grid, abs=1e-6)

    def test_singular_family(self):
        g = QuantumHypergraph(2, [np.zeros((2, 2))], 1.0)
        cap = covering_capacity(g)
        assert math.isinf(cap.bits)
        g2 = QuantumHypergraph(2, [E0, 0.5 * E0], 1.0)
        assert math.isinf(covering_capacity(g2).bits)

    def test_diagonal_matches_lp(self):
        rng = make_rng(71)
        for _ in range(3):
            diags = [np.diag(rng.uniform(0.05, 1.0, size=3)) for _ in range(3)]
            g = QuantumHypergraph(3, diags, 1.0)
            cap = covering_capacity(g)
            assert cap.value == pytest.approx(lp_capacity_diagonal(g), abs=1e-7)

    def test_json(self):
        cap = covering_capacity(orthogonal_pair())
        obj = cap.to_json()
        assert obj["bits"] == pytest.approx(1.0, abs=1e-6)
        assert len(obj["witness"]) == 2


class TestProductRelations:
    def test_chain_on_seeded_instances(self):
        # 2^{Cn} <= fractional <= exact, and the randomized size bound
        # caps the exact number, at n = 1 and 2
        for seed in (301, 302, 303):
            g = random_hypergraph(seed, dim=2, num_edges=2)
            cap = covering_capacity(g, tol=1e-10)
            for n in (1, 2):
                ct = generalized_covering_number(g, n, tol=1e-9)
                c = covering_number_bruteforce(g, n)
                assert 2.0 ** (cap.bits * n) <= ct + 1e-6
                assert ct <= c + 1e-6
                upper = 1.0 + 8.0 * LN2 * math.log2(g.dim**n) * 2.0 ** (cap.bits * n)
                assert c <= upper + 1e-6

    def test_table_rows(self):
        from opcover.covering import product_covering_table

        rows = product_covering_table(orthogonal_pair(), [1, 2])
        assert [r["n"] for r in rows] == [1, 2]
        assert rows[0]["c_n"] == 2 and rows[1]["c_n"] == 4
        assert rows[0]["c_tilde_n"] == pytest.approx(2.0, abs=1e-6)
        assert rows[1]["pow2_Cn"] == pytest.approx(4.0, rel=1e-6)


class TestResultSerialization:
    def test_round_trip_randomized(self):
        g = orthogonal_pair()
        res = covering_randomized(g, [0.5, 0.5], seed=7)
        back = CoveringResult.from_json(res.to_json())
        assert back.edge_multiplicities == res.edge_multiplicities
        assert back.certified == res.certified
        assert np.allclose(back.sampled_average, res.sampled_average)
        assert replay_covering_result(g, back)["all"]

    def test_round_trip_quantum(self):
        g = QuantumHypergraph(2, [0.5 * E0, 0.5 * PLUS], 0.5)
        res = quantum_covering_sample(g, [0.5, 0.5], eps=0.1, tau=0.1, seed=19)
        back = CoveringResult.from_json(res.to_json())
        assert np.allclose(back.pi1, res.pi1)
        assert back.details["l1_distance"] == res.details["l1_distance"]
        assert replay_covering_result(g, back, p=[0.5, 0.5], eps=0.1, tau=0.1)["all"]

    def test_tampered_result_flagged(self):
        g = orthogonal_pair()
        res = covering_randomized(g, [0.5, 0.5], seed=7)
        obj = res.to_json()
        key = next(iter(obj["edge_multiplicities"]))
        obj["edge_multiplicities"][key] += 1
        obj["num_draws"] += 1
        tampered = CoveringResult.from_json(obj)
        assert not replay_covering_result(g, tampered)["average_matches"]

    def test_multiplicity_sum_enforced(self):
        with pytest.raises(ValueError, match="sum to num_draws"):
            CoveringResult(
                kind="randomized-covering",
                edge_multiplicities={0: 2},
                num_draws=3,
                sampled_average=np.eye(2),
                certified=False,
                seed=0,
            )
