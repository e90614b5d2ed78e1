import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from gaplab.atlas import (
    Cut,
    build_atlas,
    build_components,
    chain_decomposition,
    crosses,
    dump_atlas,
    edges_between,
    enumerate_near_min_cuts,
    uncrossing_report,
    x_delta_of_vertex_set,
)
from gaplab.errors import ChainViolation
from gaplab.fixtures import (
    cycle_fixture,
    eta_comb_fig8_fixture,
    laminar_fixture,
    long_edge_fig6_fixture,
    one_side_polygon_fixture,
    wheel_fig5_fixture,
)
from gaplab.instances import instance_from_points, random_euclidean_instance, split_node
from gaplab.subtour import solve_subtour_lp


def naive_near_min_cuts(support, eta, closed=False):
    """Independent O(2^n m) oracle: double loop over sides and edges."""
    rf = support.root_free_vertices
    out = []
    for r in range(1, len(rf) + 1):
        for side in itertools.combinations(rf, r):
            val = x_delta_of_vertex_set(support, side)
            keep = val <= 2 + eta if closed else val < 2 + eta
            if keep:
                out.append((tuple(sorted(side)), val))
    return sorted(out)


def brute_force_atoms(support, comp_cuts):
    """Coarsest partition oracle: group vertices by cut-membership vector."""
    rf = support.root_free_vertices
    sig = {}
    for v in rf:
        sig.setdefault(tuple(v in set(c) for c in comp_cuts), []).append(v)
    root_sig = tuple(False for _ in comp_cuts)
    root = sorted(sig.pop(root_sig, []) + [support.u0, support.v0])
    atoms = sorted([sorted(g) for g in sig.values()] + [root])
    return atoms


def test_c4_closed_threshold_six_interval_cuts():
    support = cycle_fixture(4)
    cuts = enumerate_near_min_cuts(support, Fraction(0), closed_threshold=True)
    assert len(cuts) == 6
    assert all(c.value == 2 for c in cuts)
    sides = {c.vertices for c in cuts}
    assert sides == {(1,), (2,), (3,), (1, 2), (2, 3), (1, 2, 3)}
    # strict threshold at eta = 0 returns nothing
    assert enumerate_near_min_cuts(support, Fraction(0)) == []


def test_enumeration_matches_naive_oracle_on_pentagon_lp():
    r = 0.5 / math.sin(math.pi / 5)
    pts = [(r * math.cos(2 * math.pi * k / 5), r * math.sin(2 * math.pi * k / 5))
           for k in range(5)]
    inst = instance_from_points("pentagon", pts)
    support = split_node(inst, solve_subtour_lp(inst).x)
    eta = Fraction(1, 20)
    got = sorted((c.vertices, c.value) for c in enumerate_near_min_cuts(support, eta))
    assert got == naive_near_min_cuts(support, eta)


@pytest.mark.parametrize("fixture", [
    cycle_fixture, laminar_fixture, one_side_polygon_fixture,
    long_edge_fig6_fixture,
])
def test_enumeration_matches_naive_oracle_on_fixtures(fixture):
    support = fixture()
    eta = Fraction(support.meta["eta"])
    got = sorted((c.vertices, c.value) for c in enumerate_near_min_cuts(support, eta))
    assert got == naive_near_min_cuts(support, eta)


def test_monotonicity_in_eta():
    support = long_edge_fig6_fixture(6)
    small = {c.vertices for c in enumerate_near_min_cuts(support, Fraction(1, 100))}
    large = {c.vertices for c in enumerate_near_min_cuts(support, Fraction(1, 10))}
    assert small <= large


def test_laminar_family_gives_singleton_components():
    support = laminar_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    assert len(atlas.cuts) == 9
    assert all(comp.singleton for comp in atlas.components)
    assert all(tag == "uncrossed" for tag in atlas.tags.values())


def test_cycle_component_atoms_are_vertices():
    support = cycle_fixture(6)
    atlas = build_atlas(support, Fraction(1, 20))
    nonsing = [c for c in atlas.components if not c.singleton]
    assert len(nonsing) == 1
    comp = nonsing[0]
    atoms = sorted(sorted(a.vertices) for a in comp.atoms)
    assert atoms == brute_force_atoms(support, [c.vertices for c in comp.cuts])
    # order is the cycle order up to rotation/reflection, root first
    ordered = [comp.atoms[a].vertices for a in comp.outside_order]
    assert ordered[0] == comp.atoms[comp.root_atom].vertices
    inner = [v[0] for v in ordered[1:]]
    assert inner == sorted(inner) or inner == sorted(inner, reverse=True)
    assert comp.inside_atoms == []


def test_wheel_fixture_golden_signature():
    support = wheel_fig5_fixture()
    atlas = build_atlas(support, Fraction(13, 50))
    nonsing = [c for c in atlas.components if not c.singleton]
    assert len(nonsing) == 1
    comp = nonsing[0]
    assert len(comp.atoms) == 9
    assert len(comp.outside_order) == 8
    inside = [comp.atoms[a].vertices for a in comp.inside_atoms]
    assert inside == [(8,)]  # the hub
    witness = comp.kcycle_witnesses[comp.inside_atoms[0]]
    assert len(witness) == 8  # the 8-cycle
    # wheel order: ring vertices consecutive around the polygon
    ring = [comp.atoms[a].vertices for a in comp.outside_order]
    assert ring[0] == comp.atoms[comp.root_atom].vertices
    seq = [v[0] for v in ring[1:]]
    assert seq == sorted(seq) or seq == sorted(seq, reverse=True)


def test_atoms_oracle_on_all_component_fixtures():
    for support in (cycle_fixture(5), one_side_polygon_fixture(),
                    long_edge_fig6_fixture(6)):
        eta = Fraction(support.meta["eta"])
        atlas = build_atlas(support, eta)
        for comp in atlas.components:
            if comp.singleton:
                continue
            atoms = sorted(sorted(a.vertices) for a in comp.atoms)
            assert atoms == brute_force_atoms(
                support, [c.vertices for c in comp.cuts])


def test_arrangement_properties_exhaustive_orders():
    # exhaustive check over all circular orders: the arrangement we emit
    # satisfies contiguity for every cut, and distinct projections
    support = one_side_polygon_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    comp = next(c for c in atlas.components if not c.singleton)
    m = comp.m_outside
    projections = []
    for ci in range(len(comp.cuts)):
        proj = frozenset(a for a in comp.outside_order
                         if comp.cut_atom_masks[ci] >> a & 1)
        assert 2 <= len(proj) <= m - 1
        projections.append(proj)
    assert len(set(projections)) == len(projections)  # Prop 4.16 distinctness

    def contiguous(order, proj):
        pos = sorted(order.index(a) for a in proj)
        runs = sum(1 for p, q in zip(pos, pos[1:]) if q != p + 1)
        return runs == 0 or (runs == 1 and pos[0] == 0 and pos[-1] == len(order) - 1)

    valid_orders = []
    atoms = list(comp.outside_order)
    for perm in itertools.permutations(atoms[1:]):
        order = [atoms[0]] + list(perm)
        if all(contiguous(order, p) for p in projections):
            valid_orders.append(order)
    assert comp.outside_order in valid_orders
    # every valid order is a rotation/reflection of the canonical one here
    canon = comp.outside_order
    symmetric = {tuple(canon), tuple([canon[0]] + canon[1:][::-1])}
    assert all(tuple(o) in symmetric for o in valid_orders)


def test_classification_tags_and_lemma_4_12():
    support = long_edge_fig6_fixture(6)
    atlas = build_atlas(support, Fraction(1, 20))
    by_verts = {c.vertices: atlas.tags[c.bits] for c in atlas.cuts}
    assert by_verts[(2, 3)] == "crossed-both-sides"
    assert by_verts[(3, 4)] == "crossed-both-sides"
    assert by_verts[(1, 2)] == "crossed-one-side"
    assert by_verts[(4, 5)] == "crossed-one-side"
    assert by_verts[(1,)] == "uncrossed"
    # Lemma 4.12 cross-check is enforced at build; re-check here directly
    comp = next(c for c in atlas.components if not c.singleton)
    for i, cut in enumerate(comp.cuts):
        crossers = [comp.cuts[j].bits for j in comp.crossing_adj[i]]
        exists = any(
            (a & ~cut.bits) & (b & ~cut.bits) == 0
            for a, b in itertools.combinations(crossers, 2)
        )
        assert exists == (atlas.tags[cut.bits] == "crossed-both-sides")


def test_one_side_fixture_tags():
    support = one_side_polygon_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    tags = sorted(atlas.tags[c.bits] for c in atlas.cuts)
    assert tags.count("crossed-both-sides") == 0
    assert tags.count("crossed-one-side") == 4
    comp = next(c for c in atlas.oneside_components if not c.singleton)
    assert len(comp.cuts) == 4


def test_chain_decomposition_single_crosser():
    support = one_side_polygon_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    comp = next(c for c in atlas.components if not c.singleton)
    # cut {2,3} is crossed on the left by exactly one cut ({1,2})
    idx = next(i for i, c in enumerate(comp.cuts) if c.vertices == (2, 3))
    chain = chain_decomposition(comp, support, comp.cut_atom_masks[idx],
                                "left", atlas.eta)
    assert len(chain) == 1
    assert comp.cuts[chain[0]].vertices == (1, 2)


def test_chain_decomposition_cycle_nested_arcs():
    support = cycle_fixture(7)
    atlas = build_atlas(support, Fraction(1, 20))
    comp = next(c for c in atlas.components if not c.singleton)
    idx = next(i for i, c in enumerate(comp.cuts) if c.vertices == (2, 3))
    chain = chain_decomposition(comp, support, comp.cut_atom_masks[idx],
                                "right", atlas.eta)
    inters = []
    side = set(comp.cuts[idx].vertices)
    for j in chain:
        inters.append(frozenset(side & set(comp.cuts[j].vertices)))
    for a, b in zip(inters, inters[1:]):
        assert a <= b
    # brute-force nestedness oracle over all pairs
    for a, b in itertools.combinations(inters, 2):
        assert a <= b or b <= a


def test_chain_decomposition_all_both_sides_cuts_no_violation():
    support = long_edge_fig6_fixture(8)
    atlas = build_atlas(support, Fraction(1, 20))
    comp = next(c for c in atlas.components if not c.singleton)
    for i, cut in enumerate(comp.cuts):
        for side in ("left", "right"):
            chain_decomposition(comp, support, comp.cut_atom_masks[i],
                                side, atlas.eta)  # must not raise


def test_uncrossing_report_cycle_masses():
    support = cycle_fixture(6)
    atlas = build_atlas(support, Fraction(1, 20))
    report = uncrossing_report(atlas)
    comp = report["components"][0]
    masses = [Fraction(entry["x_mass"]) for entry in comp["adjacent_masses"]]
    assert all(m == 1 for m in masses)  # F_i = E(v_i, v_{i+1}), mass 1


def test_uncrossing_report_laminar_chain():
    support = laminar_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    report = uncrossing_report(atlas)
    assert report["laminar"], "laminar difference sets expected"
    for entry in report["laminar"]:
        assert Fraction(entry["x_mass"]) >= 1  # x(F_A) >= 1


def test_uncrossing_report_mixed_fixture_recount():
    support = long_edge_fig6_fixture(6)
    atlas = build_atlas(support, Fraction(1, 20))
    report = uncrossing_report(atlas)
    eta = Fraction(1, 20)
    x = {e.id: e.x for e in support.edges}
    for comp in report["components"]:
        for entry in comp["increase_sets"]:
            mass = sum((x[e] for e in entry["edges"]), Fraction(0))
            assert mass == Fraction(entry["x_mass"])
            assert mass >= 1 - eta
    counts = report["edge_membership"]
    assert all(v <= 4 for v in counts.values())


def test_atlas_json_dump_round_trip_values(tmp_path):
    import json

    support = one_side_polygon_fixture()
    atlas = build_atlas(support, Fraction(1, 20))
    path = tmp_path / "atlas.json"
    dump_atlas(atlas, path)
    data = json.loads(path.read_text())
    assert data["eta"] == "1/20"
    values = {tuple(c["vertices"]): Fraction(c["value"]) for c in data["cuts"]}
    for cut in atlas.cuts:
        assert values[cut.vertices] == cut.value


def test_random_lp_atlases_match_naive_oracle():
    rng = np.random.default_rng(99)
    for trial in range(3):
        inst = random_euclidean_instance(f"a{trial}", 6 + trial, rng)
        support = split_node(inst, solve_subtour_lp(inst).x)
        eta = Fraction(1, 20)
        got = sorted((c.vertices, c.value)
                     for c in enumerate_near_min_cuts(support, eta))
        assert got == naive_near_min_cuts(support, eta)
        build_atlas(support, eta)  # structural checks run inline
