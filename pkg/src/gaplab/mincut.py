"""Deterministic global minimum cut (Stoer-Wagner) on exact weights.

Maximum-adjacency ordering with vertex-id tie breaking; works unchanged
for Fractions and floats.  Used as the separation oracle for the subtour
LP and as the fast membership path for the spanning tree polytope.
"""

from __future__ import annotations

from .errors import DisconnectedSupport


def connected_components(n: int, edges) -> list[list[int]]:
    """Components under edges given as (u, v[, w]) tuples with w > 0."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in edges:
        u, v = e[0], e[1]
        ra, rb = find(u), find(v)
        if ra != rb:
            parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return [sorted(g) for g in sorted(groups.values())]


def stoer_wagner(n: int, weighted_edges):
    """Exact global min cut of an undirected graph.

    `weighted_edges` is an iterable of (u, v, w) with u != v, w >= 0.
    Returns (value, side) where side is the sorted vertex list of one
    shore.  Raises DisconnectedSupport when the graph is disconnected.
    """
    if n < 2:
        raise ValueError("min cut needs at least two vertices")
    adj = [dict() for _ in range(n)]
    for u, v, w in weighted_edges:
        if u == v or w == 0:
            continue
        adj[u][v] = adj[u].get(v, 0) + w
        adj[v][u] = adj[v].get(u, 0) + w

    comps = connected_components(n, [(u, v) for u in range(n) for v in adj[u] if u < v])
    if len(comps) > 1:
        raise DisconnectedSupport(
            f"support has {len(comps)} components", component=comps[0]
        )

    # merged[v] lists the original vertices contracted into v
    merged = [[v] for v in range(n)]
    active = sorted(range(n))
    best_value = None
    best_side = None

    while len(active) > 1:
        # maximum adjacency order from the smallest active id
        start = active[0]
        in_a = {start}
        weights = {v: adj[start].get(v, 0) for v in active if v != start}
        order = [start]
        while len(in_a) < len(active):
            # deterministic: max weight, ties to smallest vertex id
            nxt = max(
                (v for v in active if v not in in_a),
                key=lambda v: (weights.get(v, 0), -v),
            )
            order.append(nxt)
            in_a.add(nxt)
            for w, x in adj[nxt].items():
                if w not in in_a and w in weights:
                    weights[w] = weights.get(w, 0) + x
        t = order[-1]
        s = order[-2]
        cut_of_phase = sum(adj[t].values())
        side = sorted(merged[t])
        if best_value is None or cut_of_phase < best_value:
            best_value = cut_of_phase
            best_side = side
        # merge t into s
        for w, x in list(adj[t].items()):
            if w == s:
                continue
            adj[s][w] = adj[s].get(w, 0) + x
            adj[w][s] = adj[w].get(s, 0) + x
        for w in list(adj[t]):
            del adj[w][t]
        adj[t] = {}
        merged[s].extend(merged[t])
        merged[t] = []
        active.remove(t)

    return best_value, best_side
