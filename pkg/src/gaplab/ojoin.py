"""Exact matchings on odd tree vertices and O-join LP verification.

Matching is exact bitmask DP over the metric closure (odd sets are small
at desk scale; Blossom is out of scope).  O-join feasibility enumerates
the root-free sides exhaustively; cuts crossing e_0 are covered by the
y_{e_0} = infinity sentinel of the rooting convention.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import TooLarge, TooManyOdd
from .instances import SupportGraph, metric_with_root
from .rationals import to_fraction
from .trees import tree_parity_odd_vertices

_EXHAUSTIVE_BOUND = 22


def odd_vertices(support: SupportGraph, tree_edges) -> tuple:
    """Sorted vertices of odd degree in T + e_0; always even cardinality."""
    odd = tree_parity_odd_vertices(support, tree_edges)
    assert len(odd) % 2 == 0, "handshake violated"
    return odd


def min_cost_matching(odd, dist, cap: int = 20):
    """Exact minimum perfect matching on `odd` under metric `dist`.

    O(2^k k^2) bitmask DP; cost is exact when the metric is rational.
    Returns (pairs, cost).
    """
    odd = list(odd)
    k = len(odd)
    if k % 2 != 0:
        raise ValueError("odd set must have even cardinality")
    if k > cap:
        raise TooManyOdd(f"|odd| = {k} exceeds cap {cap}")
    if k == 0:
        return [], Fraction(0)
    full = (1 << k) - 1
    INF = None
    dp = [INF] * (1 << k)
    choice = [None] * (1 << k)
    dp[0] = Fraction(0)
    for mask in range(1 << k):
        if dp[mask] is None or mask == full:
            continue
        i = next(b for b in range(k) if not mask >> b & 1)
        for j in range(i + 1, k):
            if mask >> j & 1:
                continue
            nxt = mask | 1 << i | 1 << j
            cost = dp[mask] + dist(odd[i], odd[j])
            if dp[nxt] is None or cost < dp[nxt]:
                dp[nxt] = cost
                choice[nxt] = (i, j)
    pairs = []
    mask = full
    while mask:
        i, j = choice[mask]
        pairs.append((odd[i], odd[j]))
        mask &= ~(1 << i | 1 << j)
    return sorted(pairs), dp[full]


def match_odd_vertices(instance, support: SupportGraph, tree_edges, cap: int = 20):
    """Matching for one tree on the instance metric (u0/v0 map to the pivot)."""
    odd = odd_vertices(support, tree_edges)
    dist = metric_with_root(instance, support)
    return min_cost_matching(odd, dist, cap)


def verify_ojoin_feasible(y: dict, odd, support: SupportGraph,
                          tol: Fraction = Fraction(1, 10**9)):
    """Exhaustively check y(delta(S)) >= 1 for all S with |S∩O| odd.

    `y` maps edge ids of E to values (Fractions or floats, promoted);
    e_0 carries the unbounded sentinel, so only root-free sides are
    scanned.  Returns (True, None) or (False, first_violated_S).
    """
    rf = support.root_free_vertices
    if len(rf) > _EXHAUSTIVE_BOUND:
        raise TooLarge(f"exhaustive O-join check limited to {_EXHAUSTIVE_BOUND} root-free vertices")
    yv = {eid: to_fraction(v) for eid, v in y.items()}
    odd_set = set(odd)
    pos = {v: i for i, v in enumerate(rf)}
    incident = [[] for _ in rf]
    for e in support.edges:
        w = yv.get(e.id, Fraction(0))
        ui, vi = pos.get(e.u), pos.get(e.v)
        if ui is not None:
            incident[ui].append((vi, w))  # vi None means root side
        if vi is not None:
            incident[vi].append((ui, w))
    in_s = [False] * len(rf)
    boundary = Fraction(0)
    parity = 0
    one = Fraction(1)
    for g in range(1, 1 << len(rf)):
        v = (g & -g).bit_length() - 1
        delta = Fraction(0)
        for u, w in incident[v]:
            if u is None or not in_s[u]:
                delta += w
            else:
                delta -= w
        if in_s[v]:
            in_s[v] = False
            boundary -= delta
        else:
            boundary += delta
            in_s[v] = True
        if rf[v] in odd_set:
            parity ^= 1
        if parity == 1 and boundary < one - tol:
            witness = sorted(rf[i] for i in range(len(rf)) if in_s[i])
            return False, witness
    return True, None


def satisfied_cuts_report(y: dict, odd, support: SupportGraph, cuts,
                          tree_edges) -> list:
    """Per near-min-cut evaluation of the 'satisfies S' definition.

    For each root-free cut S: satisfied iff delta(S)_T is even or
    y(delta(S)) >= 1.  Returns a list of dict records.
    """
    yv = {eid: to_fraction(v) for eid, v in y.items()}
    tree = set(tree_edges)
    records = []
    for cut in cuts:
        side = set(cut)
        boundary_ids = [
            e.id for e in support.edges if (e.u in side) != (e.v in side)
        ]
        parity = sum(1 for eid in boundary_ids if eid in tree) % 2
        mass = sum((yv.get(eid, Fraction(0)) for eid in boundary_ids), Fraction(0))
        records.append({
            "cut": sorted(side),
            "tree_parity_odd": parity == 1,
            "y_mass": mass,
            "satisfied": parity == 0 or mass >= 1,
        })
    return records


def euler_shortcut_tour(instance, support: SupportGraph, tree_edges, pairs):
    """Shortcut T + M + e_0 to a Hamiltonian cycle on instance vertices.

    Returns (tour_vertices, cost).  All degrees in the multigraph are
    even and it is connected, so an Euler circuit exists; shortcutting
    repeated vertices cannot increase cost under the triangle inequality.
    """
    dist = metric_with_root(instance, support)
    by_id = {e.id: e for e in support.edges}
    multi: dict[int, list] = {v: [] for v in range(support.n_vertices)}
    arcs = []
    for eid in tree_edges:
        e = by_id[eid]
        arcs.append((e.u, e.v))
    for u, v in pairs:
        arcs.append((u, v))
    arcs.append((support.u0, support.v0))
    for i, (u, v) in enumerate(arcs):
        multi[u].append((v, i))
        multi[v].append((u, i))
    for v, lst in multi.items():
        assert len(lst) % 2 == 0, f"odd degree {v} in Eulerian multigraph"
    # Hierholzer
    used = [False] * len(arcs)
    stack = [support.u0]
    circuit = []
    iters = {v: 0 for v in multi}
    while stack:
        v = stack[-1]
        advanced = False
        while iters[v] < len(multi[v]):
            w, idx = multi[v][iters[v]]
            iters[v] += 1
            if not used[idx]:
                used[idx] = True
                stack.append(w)
                advanced = True
                break
        if not advanced:
            circuit.append(stack.pop())
    assert all(used), "multigraph disconnected"
    # shortcut: collapse u0/v0 to the pivot, drop repeats
    pivot = support.pivot if support.pivot is not None else support.u0
    seen = set()
    tour = []
    for v in circuit:
        w = pivot if v in (support.u0, support.v0) else v
        if w not in seen:
            seen.add(w)
            tour.append(w)
    cost = sum(
        (instance.d(tour[i], tour[(i + 1) % len(tour)]) for i in range(len(tour))),
        Fraction(0),
    )
    return tour, cost
