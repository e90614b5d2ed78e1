import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from gaplab.errors import SingularLaplacian
from gaplab.trees import (
    check_spanning_tree_polytope,
    enumerate_spanning_trees,
    exact_tree_probabilities,
    fit_lambda,
    fit_lambda_support,
    sample_tree,
    tree_marginals,
)

K3 = [(0, 0, 1), (1, 0, 2), (2, 1, 2)]
K4 = [(i, u, v) for i, (u, v) in enumerate(
    [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])]
PATH4 = [(0, 0, 1), (1, 1, 2), (2, 2, 3)]


def test_membership_path_indicator():
    ok, witness = check_spanning_tree_polytope(4, PATH4, {i: Fraction(1) for i in range(3)})
    assert ok and witness is None


def test_membership_k3_two_thirds():
    ok, _ = check_spanning_tree_polytope(3, K3, {i: Fraction(2, 3) for i in range(3)})
    assert ok


def test_non_membership_k3_ones_witness_full_set():
    ok, witness = check_spanning_tree_polytope(3, K3, {i: Fraction(1) for i in range(3)})
    assert not ok
    assert witness == [0, 1, 2]


def test_membership_witness_on_overfull_pair():
    # parallel pair (0,1) carries 5/4 > 1 while x(E) = n - 1 holds
    edges = [(0, 0, 1), (1, 0, 1), (2, 1, 2), (3, 0, 2)]
    x = {0: Fraction(3, 4), 1: Fraction(1, 2), 2: Fraction(3, 8), 3: Fraction(3, 8)}
    ok, witness = check_spanning_tree_polytope(3, edges, x)
    assert not ok
    assert set(witness) == {0, 1}


def test_fit_path_zero_iterations():
    lam = fit_lambda(4, PATH4, {i: Fraction(1) for i in range(3)})
    assert lam.iterations == 0
    assert tree_marginals(lam) == {0: 1.0, 1: 1.0, 2: 1.0}


def test_fit_k3_symmetric_immediate():
    lam = fit_lambda(3, K3, {i: Fraction(2, 3) for i in range(3)})
    assert lam.iterations <= 2
    for v in tree_marginals(lam).values():
        assert abs(v - 2 / 3) < 1e-9


def test_marginals_k4_uniform_match_enumeration():
    lam = fit_lambda(4, K4, {i: Fraction(1, 2) for i in range(6)})
    trees = list(enumerate_spanning_trees(4, K4))
    assert len(trees) == 16
    for eid in range(6):
        count = sum(1 for t in trees if eid in t)
        assert count == 8
        assert abs(tree_marginals(lam)[eid] - 0.5) < 1e-6


def test_marginals_star_graph_all_one():
    star = [(0, 0, 1), (1, 0, 2), (2, 0, 3)]
    lam = fit_lambda(4, star, {i: Fraction(1) for i in range(3)})
    assert tree_marginals(lam) == {0: 1.0, 1: 1.0, 2: 1.0}


def test_marginal_sum_is_n_minus_one():
    lam = fit_lambda(4, K4, {i: Fraction(1, 2) for i in range(6)})
    assert abs(sum(tree_marginals(lam).values()) - 3) < 1e-9


def test_diamond_fixture_fit_vs_exact_enumeration():
    # square u-a-v-b with x = 1/2 on the sides plus a forced diagonal
    edges = [(0, 0, 1), (1, 1, 2), (2, 2, 3), (3, 3, 0), (4, 0, 2)]
    x = {0: Fraction(1, 2), 1: Fraction(1, 2), 2: Fraction(1, 2),
         3: Fraction(1, 2), 4: Fraction(1)}
    lam = fit_lambda(4, edges, x)
    margins = tree_marginals(lam)
    for eid, target in x.items():
        assert abs(margins[eid] - float(target)) <= 1e-6
    # oracle: enumerate the spanning trees containing the forced x = 1
    # edge (mu_lambda conditions on it), exact mu_lambda marginals
    weights = {eid: Fraction(math.exp(lam.log_lambda.get(eid, 0.0)))
               for eid, _, _ in edges}
    probs = exact_tree_probabilities(4, edges, weights)
    probs = {t: p for t, p in probs.items() if lam.forced <= t}
    total = sum(probs.values())
    probs = {t: p / total for t, p in probs.items()}
    for eid in x:
        exact = sum((p for t, p in probs.items() if eid in t), Fraction(0))
        assert abs(float(exact) - margins[eid]) < 1e-6


def test_fit_rejects_outside_polytope():
    with pytest.raises(SingularLaplacian):
        fit_lambda(3, K3, {i: Fraction(1) for i in range(3)})


def test_sample_path_always_unique_tree():
    lam = fit_lambda(4, PATH4, {i: Fraction(1) for i in range(3)})
    rng = np.random.default_rng(0)
    for i in range(5):
        t = sample_tree(lam, rng, i)
        assert t.edges == frozenset({0, 1, 2})


def test_sample_k3_frequencies():
    lam = fit_lambda(3, K3, {i: Fraction(2, 3) for i in range(3)})
    rng = np.random.default_rng(123)
    counts = {}
    n = 30000
    for i in range(n):
        t = sample_tree(lam, rng, i)
        counts[t.edges] = counts.get(t.edges, 0) + 1
    assert len(counts) == 3
    for c in counts.values():
        assert abs(c / n - 1 / 3) <= 0.01


def test_sample_distribution_chi_square_vs_enumeration():
    # 4-vertex fixture with an asymmetric lambda; empirical tree frequencies
    # must match the enumerated mu_lambda distribution
    edges = [(0, 0, 1), (1, 1, 2), (2, 2, 3), (3, 3, 0), (4, 0, 2)]
    x = {0: Fraction(1, 2), 1: Fraction(3, 4), 2: Fraction(1, 2),
         3: Fraction(3, 4), 4: Fraction(1, 2)}
    ok, _ = check_spanning_tree_polytope(4, edges, x)
    assert ok
    lam = fit_lambda(4, edges, x)
    weights = {eid: Fraction(math.exp(lam.log_lambda[eid])) for eid, _, _ in edges}
    probs = exact_tree_probabilities(4, edges, weights)
    rng = np.random.default_rng(7)
    n = 20000
    counts = {t: 0 for t in probs}
    for i in range(n):
        t = sample_tree(lam, rng, i)
        counts[t.edges] += 1
    observed = []
    expected = []
    for t, p in sorted(probs.items(), key=lambda kv: sorted(kv[0])):
        observed.append(counts[t])
        expected.append(float(p) * n)
    stat, pvalue = chisquare(observed, expected)
    assert pvalue > 0.001


def test_empirical_frequencies_match_x_on_pentagon():
    import math as m

    from gaplab.instances import instance_from_points, split_node
    from gaplab.subtour import solve_subtour_lp

    r = 0.5 / m.sin(m.pi / 5)
    pts = [(r * m.cos(2 * m.pi * k / 5), r * m.sin(2 * m.pi * k / 5))
           for k in range(5)]
    inst = instance_from_points("pentagon", pts)
    support = split_node(inst, solve_subtour_lp(inst).x)
    lam = fit_lambda_support(support)
    rng = np.random.default_rng(21)
    n = 8000
    freq = {e.id: 0 for e in support.edges}
    for i in range(n):
        for eid in sample_tree(lam, rng, i).edges:
            freq[eid] += 1
    for e in support.edges:
        x = float(e.x)
        sigma = math.sqrt(max(x * (1 - x), 1e-12) / n)
        assert abs(freq[e.id] / n - x) <= 4 * sigma + 1e-6
