"""Synthetic fractional support graphs exhibiting named cut structures.

Each fixture ships with its golden atlas signature in `meta`: component
count, atom counts, inside atoms, and the eta it was designed for.  All
weights are exact rationals derived so that the intended cuts are the
near-minimum ones; where the source figures are schematic the weights
were re-derived from the degree and min-cut constraints.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import BadParams
from .instances import Edge, SupportGraph
from .rationals import to_fraction

F = Fraction


def _support(name, n_vertices, u0, v0, weighted_edges, meta, pivot=None):
    edges = tuple(
        Edge(i, u, v, to_fraction(x), F(0))
        for i, (u, v, x) in enumerate(weighted_edges)
    )
    sup = SupportGraph(name=name, n_vertices=n_vertices, u0=u0, v0=v0,
                       edges=edges, pivot=pivot, meta=meta)
    sup.validate()
    return sup


def _split_vertex(weighted_edges, pivot, new_id):
    """Halve every edge at `pivot` between pivot and `new_id`."""
    out = []
    for (u, v, x) in weighted_edges:
        if pivot in (u, v):
            w = v if u == pivot else u
            out.append((pivot, w, to_fraction(x) / 2))
            out.append((new_id, w, to_fraction(x) / 2))
        else:
            out.append((u, v, x))
    return out


def cycle_fixture(n: int = 6) -> SupportGraph:
    """Cycle C_n with x = 1, rooted by splitting vertex 0.

    All near-min cuts are the intervals of 1..n-1; the crossing component
    is a pure cycle whose atoms are exactly the vertices.
    """
    if n < 4:
        raise BadParams("cycle fixture needs n >= 4")
    ring = [(i, (i + 1) % n, F(1)) for i in range(n)]
    edges = _split_vertex(ring, 0, n)
    meta = {
        "kind": "cycle", "eta": "1/20",
        "golden": {"nonsingleton_components": 1, "atoms": n, "inside": 0},
    }
    return _support(f"cycle{n}", n + 1, 0, n, edges, meta, pivot=0)


def wheel_fig5_fixture() -> SupportGraph:
    """Eight-spoke wheel: ring 7/8, spokes 1/4, center vertex 9.

    The adjacent ring pairs are the circled near-min cuts (value 9/4),
    so the fixture ships with eta = 0.26; the component has 8 outside
    atoms in wheel order and the center is the unique inside atom with
    an 8-cycle witness (k >= 2/eta forces eta >= 1/4 here).
    """
    center = 8
    ring = [(i, (i + 1) % 8, F(7, 8)) for i in range(8)]
    spokes = [(center, i, F(1, 4)) for i in range(8)]
    edges = _split_vertex(ring + spokes, 0, 9)
    meta = {
        "kind": "wheel-fig5", "eta": "13/50",
        "golden": {"nonsingleton_components": 1, "atoms": 9, "inside": 1,
                   "outside": 8, "inside_vertices": [center], "kcycle": 8},
    }
    return _support("wheel-fig5", 10, 0, 9, edges, meta, pivot=0)


def laminar_fixture() -> SupportGraph:
    """Two triangles (x = 1/2) joined by three unit rungs; laminar cuts.

    Near-min cuts are the vertices and the rung pairs; nothing crosses,
    so every cut is a singleton component (the laminar pattern).
    """
    tri_a = [(0, 1, F(1, 2)), (1, 2, F(1, 2)), (0, 2, F(1, 2))]
    tri_b = [(3, 4, F(1, 2)), (4, 5, F(1, 2)), (3, 5, F(1, 2))]
    rungs = [(0, 3, F(1)), (1, 4, F(1)), (2, 5, F(1))]
    edges = _split_vertex(tri_a + tri_b + rungs, 0, 6)
    meta = {
        "kind": "laminar", "eta": "1/20",
        "golden": {"nonsingleton_components": 0, "cuts": 9},
    }
    return _support("laminar", 7, 0, 6, edges, meta, pivot=0)


def one_side_polygon_fixture() -> SupportGraph:
    """One-side polygon with five atoms and a non-extremal one-side cut.

    Vertices r,1,2,3,4 with exact weights chosen so that N_eta at
    eta = 1/20 is {1,2}, {2,3}, {1,2,3}, {2,3,4} plus singletons and the
    full side.  {2,3} is crossed only on the left (non-extremal), the
    component is crossed on one side throughout, and the polygon order
    is (root, 1, 2, 3, 4).
    """
    r = 0
    base = [
        (r, 1, F(99, 100)),   # a
        (1, 2, F(49, 50)),    # b
        (2, 3, F(49, 50)),    # c
        (3, 4, F(97, 100)),   # d
        (4, r, F(99, 100)),   # e
        (1, 3, F(3, 100)),    # f
        (2, 4, F(1, 25)),     # g
        (r, 3, F(1, 50)),     # h
    ]
    edges = _split_vertex(base, r, 5)
    meta = {
        "kind": "one-side-polygon", "eta": "1/20",
        "golden": {"nonsingleton_components": 1, "atoms": 5, "inside": 0,
                   "polygon_cuts": 4, "both_sides": 0},
    }
    return _support("one-side-polygon", 6, 0, 5, edges, meta, pivot=0)


def long_edge_fig6_fixture(n: int = 6, eta=F(1, 20)) -> SupportGraph:
    """Ring with antipodal chords: long edges crossing many cut boundaries.

    Ring edges 1 - eta/4, chords eta/2; adjacent pairs are near-min at
    2 + eta/2, and middle pairs are crossed on both sides, so this is
    also the standard both-sides fixture.
    """
    eta = to_fraction(eta)
    if n < 6 or n % 2:
        raise BadParams("long-edge fixture needs even n >= 6")
    gamma = eta / 4
    ring = [(i, (i + 1) % n, 1 - gamma) for i in range(n)]
    chords = [(i, i + n // 2, 2 * gamma) for i in range(n // 2)]
    edges = _split_vertex(ring + chords, 0, n)
    meta = {
        "kind": "long-edge-fig6", "eta": str(eta),
        "golden": {"nonsingleton_components": 1, "atoms": n, "inside": 0,
                   "both_sides": n - 4},
    }
    return _support(f"long-edge-fig6-{n}", n + 1, 0, n, edges, meta, pivot=0)


def eta_comb_fig8_fixture(sections: int = 3) -> SupportGraph:
    """Comb of blue/black sections with empty adjacent-atom edge sets.

    Each section is [G, c1, c2, c3, c4, H] with bundle weights
    (1, 1, 4/5, 1/5, 1) along the path, G fanning to c3 (1/5) and c4
    (4/5), and H fanning into the next section's c2 (1/5) and c3 (4/5).
    The blue pair (H_s, G_{s+1}) is polygon-adjacent with no edges
    between, the gap being spanned by the near-min cut
    {H_s, G_{s+1}, c1', c2', c3'}.  All intended cuts have value exactly
    2; default eta 1/10.
    """
    if sections < 3:
        raise BadParams("comb needs at least 3 sections")
    L = 6  # vertices per section: G c1 c2 c3 c4 H
    n = sections * L
    edges = []

    def vid(s, k):
        return (s % sections) * L + k

    for s in range(sections):
        G, c1, c2, c3, c4, H = (vid(s, k) for k in range(6))
        edges += [
            (G, c1, F(1)), (c1, c2, F(1)), (c2, c3, F(4, 5)),
            (c3, c4, F(1, 5)), (c4, H, F(1)),
            (G, c3, F(1, 5)), (G, c4, F(4, 5)),
            (H, vid(s + 1, 2), F(1, 5)), (H, vid(s + 1, 3), F(4, 5)),
        ]
    pivot = 1  # c1 of section 0: two unit bundles, splits cleanly
    edges = _split_vertex(edges, pivot, n)
    meta = {
        "kind": "eta-comb-fig8", "eta": "1/10",
        "golden": {"nonsingleton_components": 1, "atoms": n,
                   "empty_adjacent_pairs": sections},
    }
    return _support(f"eta-comb-fig8-{sections}", n + 1, pivot, n, edges,
                    meta, pivot=pivot)


_FIXTURES = {
    "cycle": cycle_fixture,
    "wheel-fig5": wheel_fig5_fixture,
    "laminar": laminar_fixture,
    "one-side-polygon": one_side_polygon_fixture,
    "long-edge-fig6": long_edge_fig6_fixture,
    "eta-comb-fig8": eta_comb_fig8_fixture,
}


def generate_fixture(kind: str, **params) -> SupportGraph:
    if kind not in _FIXTURES:
        raise BadParams(f"unknown fixture kind {kind!r}; have {sorted(_FIXTURES)}")
    try:
        return _FIXTURES[kind](**params)
    except TypeError as exc:
        raise BadParams(f"bad params for {kind}: {exc}") from exc


def fixture_kinds():
    return sorted(_FIXTURES)
