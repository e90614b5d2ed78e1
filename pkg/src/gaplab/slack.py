"""Slack vector s* construction and per-tree audits.

Two mechanisms combine additively:

* both-sides machinery: per polygon point p, the largest both-sides
  cuts L(p), R(p) define bad events whose occurrence triggers
  s*_e = alpha x_e on the increase sets E(B->(p)), E(B<-(p)); within
  this mechanism assignments are idempotent (never stacked).
* one-side machinery: per one-side polygon, relevant cuts are mapped to
  adjacent-atom edge groups (load at most 4); per-group events assign
  alpha x_e or alpha x_e / 2 by the doubly/singly-mapped rule; plus the
  triangle rule for two-children hierarchy cuts.

Structural lemma checks run inline while building the contexts and are
hard failures inside the eta <= 1/10 regime; outside it they downgrade
to recorded warnings (some fixtures, like the 8-wheel, need eta > 1/4).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .atlas import (
    CrossingComponent,
    CutAtlas,
    crosses_general,
    crossing_side,
    edges_between,
    x_delta_of_vertex_set,
)
from .errors import HierarchyViolation, MappingUnavailable, StructureViolation
from .instances import SupportGraph
from .rationals import to_fraction

F = Fraction


def _edge_mask(edge_ids) -> int:
    mask = 0
    for eid in edge_ids:
        mask |= 1 << eid
    return mask


def _popcount(mask: int) -> int:
    return mask.bit_count()


def _atoms_to_vertices(comp: CrossingComponent, atom_mask: int) -> list:
    return [v for atom in comp.atoms if atom_mask >> atom.index & 1
            for v in atom.vertices]


@dataclass
class PointContext:
    """Everything attached to one polygon point of a both-sides polygon."""

    comp: CrossingComponent
    point: int
    # clockwise side: L(p), its right-crosser, intersection, L*(p)
    L: int | None = None  # cut index in comp
    L_R: int | None = None
    L_capR: int = 0  # atom mask
    L_star: int | None = None  # cut index or None
    L_alt_differs: bool = False  # outside-atom-count maximizer differs
    e_right_mask: int = 0  # E->(L(p)) edge mask
    e_circ_L_mask: int = 0  # E°(L(p)) edge mask
    increase_right: list | None = None  # E(B->(p)) edge ids
    # counterclockwise side: R(p)
    R: int | None = None
    R_L: int | None = None
    R_capL: int = 0
    R_star: int | None = None
    R_alt_differs: bool = False
    e_left_mask: int = 0  # E<-(R(p)) edge mask
    e_circ_R_mask: int = 0  # E°(R(p)) edge mask
    increase_left: list | None = None  # E(B<-(p)) edge ids


@dataclass
class SlackAssignment:
    """Per-edge s* for one tree plus the fired-event trace."""

    both: dict = field(default_factory=dict)  # edge id -> Fraction
    one: dict = field(default_factory=dict)
    alpha: Fraction = F(0)
    trace: list = field(default_factory=list)

    def total(self, eid: int) -> Fraction:
        return self.both.get(eid, F(0)) + self.one.get(eid, F(0))

    def mass_on(self, edge_ids, which: str = "total") -> Fraction:
        src = {"both": self.both, "one": self.one}.get(which)
        if src is None:
            return sum((self.total(e) for e in edge_ids), F(0))
        return sum((src.get(e, F(0)) for e in edge_ids), F(0))


class _Relations:
    """Left/right crossers and the canonical S_L, S_R per cut."""

    def __init__(self, comp: CrossingComponent):
        self.comp = comp
        n = len(comp.cuts)
        self.left = [[] for _ in range(n)]
        self.right = [[] for _ in range(n)]
        for i in range(n):
            for j in comp.crossing_adj[i]:
                side = crossing_side(comp, comp.cut_atom_masks[j],
                                     comp.cut_atom_masks[i])
                (self.left if side == "left" else self.right)[i].append(j)
        self.s_l = [self._pick_min(i, self.left[i]) for i in range(n)]
        self.s_r = [self._pick_min(i, self.right[i]) for i in range(n)]

    def _outside_count(self, atom_mask: int) -> int:
        return sum(1 for a in self.comp.outside_order if atom_mask >> a & 1)

    def _pick_min(self, i: int, candidates):
        if not candidates:
            return None
        comp = self.comp
        s = comp.cut_atom_masks[i]

        def key(j):
            inter = comp.cut_atom_masks[j] & s
            return (
                self._outside_count(inter),
                _popcount(comp.cut_atom_masks[j]),
                len(comp.cuts[j].vertices),
                comp.cuts[j].vertices,
            )

        return min(candidates, key=key)


def _e_partition(support, comp, rel, i):
    """E<-(S), E->(S), E°(S) for a both-sides cut index i (edge id sets)."""
    s_mask = comp.cut_atom_masks[i]
    sl, sr = rel.s_l[i], rel.s_r[i]
    s_verts = set(comp.cuts[i].vertices)
    delta = [e.id for e in support.edges
             if (e.u in s_verts) != (e.v in s_verts)]
    left = right = []
    if sl is not None:
        l_mask = comp.cut_atom_masks[sl]
        left = edges_between(
            support,
            _atoms_to_vertices(comp, s_mask & l_mask),
            _atoms_to_vertices(comp, l_mask & ~s_mask),
        )
    if sr is not None:
        r_mask = comp.cut_atom_masks[sr]
        right = edges_between(
            support,
            _atoms_to_vertices(comp, s_mask & r_mask),
            _atoms_to_vertices(comp, r_mask & ~s_mask),
        )
    circ = sorted(set(delta) - set(left) - set(right))
    return sorted(left), sorted(right), circ


def _largest(comp, candidates, by_outside=False):
    """Largest cut by atom count (or outside-atom count), deterministic ties."""
    if not candidates:
        return None
    outside_set = set(comp.outside_order)

    def atoms(j):
        return _popcount(comp.cut_atom_masks[j])

    def outside(j):
        return sum(1 for a in outside_set if comp.cut_atom_masks[j] >> a & 1)

    primary = outside if by_outside else atoms
    return min(candidates, key=lambda j: (-primary(j), -atoms(j),
                                          -len(comp.cuts[j].vertices),
                                          comp.cuts[j].vertices))


def build_point_contexts(atlas: CutAtlas, comp: CrossingComponent,
                         strict: bool | None = None) -> list:
    """All PointContexts of one polygon, with inline lemma checks.

    `strict` defaults to (eta <= 1/10); outside the regime the checks
    only warn via the returned contexts' validity flags.
    """
    support = atlas.support
    if comp.singleton:
        return []
    if strict is None:
        strict = atlas.eta <= F(1, 10)
    both_indices = [i for i, c in enumerate(comp.cuts)
                    if atlas.tags.get(c.bits) == "crossed-both-sides"]
    if not both_indices:
        return []
    rel = _Relations(comp)
    m = comp.m_outside
    universe = (1 << len(comp.atoms)) - 1

    partitions = {i: _e_partition(support, comp, rel, i) for i in both_indices}

    def fail(msg):
        if strict:
            raise StructureViolation(msg)

    # Cor 5.9 first claim: E<-(S) and E->(S) disjoint
    for i in both_indices:
        left, right, _ = partitions[i]
        if set(left) & set(right):
            fail(f"E<- and E-> overlap at cut {comp.cuts[i].vertices}")

    contexts = []
    for p in range(m):
        ctx = PointContext(comp=comp, point=p)
        enders = [i for i in both_indices if comp.cut_points(i)[1] == p]
        starters = [i for i in both_indices if comp.cut_points(i)[0] == p]
        ctx.L = _largest(comp, enders)
        ctx.R = _largest(comp, starters)
        if ctx.L is not None:
            alt = _largest(comp, enders, by_outside=True)
            ctx.L_alt_differs = alt != ctx.L
            _fill_clockwise(support, atlas, comp, rel, ctx, partitions)
        if ctx.R is not None:
            alt = _largest(comp, starters, by_outside=True)
            ctx.R_alt_differs = alt != ctx.R
            _fill_counterclockwise(support, atlas, comp, rel, ctx, partitions)
        contexts.append(ctx)

    _check_lemma_5_1(comp, rel, both_indices, partitions, fail)
    _check_lemma_5_8(comp, rel, both_indices, partitions, contexts, fail)
    _check_cor_5_9_pairs(comp, rel, both_indices, partitions, fail)
    _check_lemma_5_10(support, comp, contexts, fail)
    _check_mass_bounds(support, atlas, contexts, fail)
    return contexts


def _cross_candidates(comp, target_mask, side_wanted):
    universe = (1 << len(comp.atoms)) - 1
    out = []
    for j in range(len(comp.cuts)):
        mask = comp.cut_atom_masks[j]
        if not crosses_general(mask, target_mask, universe):
            continue
        if crossing_side(comp, mask, target_mask) == side_wanted:
            out.append(j)
    return out


def _maximizer(comp, candidates, inter_mask_of):
    """Cut maximizing outside-atom intersection; spec tie-breaking."""
    if not candidates:
        return None
    outside = set(comp.outside_order)

    def key(j):
        inter = inter_mask_of(j)
        o = sum(1 for a in outside if inter >> a & 1)
        return (-o, -_popcount(comp.cut_atom_masks[j]),
                comp.cuts[j].vertices)

    return min(candidates, key=key)


def _fill_clockwise(support, atlas, comp, rel, ctx, partitions):
    i = ctx.L
    ctx.L_R = rel.s_r[i]
    left, right, circ = partitions[i]
    ctx.e_right_mask = _edge_mask(right)
    ctx.e_circ_L_mask = _edge_mask(circ)
    l_mask = comp.cut_atom_masks[i]
    r_mask = comp.cut_atom_masks[ctx.L_R]
    cap = l_mask & r_mask
    ctx.L_capR = cap
    cands = _cross_candidates(comp, cap, "left")
    ctx.L_star = _maximizer(comp, cands,
                            lambda j: comp.cut_atom_masks[j] & cap)
    star_mask = comp.cut_atom_masks[ctx.L_star] if ctx.L_star is not None else 0
    inner = _atoms_to_vertices(comp, cap & ~star_mask)
    outer = _atoms_to_vertices(comp, r_mask & ~cap)
    ids = edges_between(support, inner, outer)
    ctx.increase_right = sorted(ids)
    if set(ids) - set(right):
        raise StructureViolation(
            f"E(B->) at point {ctx.point} escapes E->(L(p))"
        )


def _fill_counterclockwise(support, atlas, comp, rel, ctx, partitions):
    i = ctx.R
    ctx.R_L = rel.s_l[i]
    left, right, circ = partitions[i]
    ctx.e_left_mask = _edge_mask(left)
    ctx.e_circ_R_mask = _edge_mask(circ)
    r_mask = comp.cut_atom_masks[i]
    l_mask = comp.cut_atom_masks[ctx.R_L]
    cap = r_mask & l_mask
    ctx.R_capL = cap
    cands = _cross_candidates(comp, cap, "right")
    ctx.R_star = _maximizer(comp, cands,
                            lambda j: comp.cut_atom_masks[j] & cap)
    star_mask = comp.cut_atom_masks[ctx.R_star] if ctx.R_star is not None else 0
    inner = _atoms_to_vertices(comp, cap & ~star_mask)
    outer = _atoms_to_vertices(comp, l_mask & ~cap)
    ids = edges_between(support, inner, outer)
    ctx.increase_left = sorted(ids)
    if set(ids) - set(left):
        raise StructureViolation(
            f"E(B<-) at point {ctx.point} escapes E<-(R(p))"
        )


def _check_lemma_5_1(comp, rel, both_indices, partitions, fail):
    """Shared right point => same S_R and same E->."""
    for a, b in combinations(both_indices, 2):
        if comp.cut_points(a)[1] != comp.cut_points(b)[1]:
            continue
        if rel.s_r[a] != rel.s_r[b]:
            fail(f"Lemma 5.1: A_R != B_R for {comp.cuts[a].vertices} / "
                 f"{comp.cuts[b].vertices}")
        if partitions[a][1] != partitions[b][1]:
            fail(f"Lemma 5.1: E->(A) != E->(B) for {comp.cuts[a].vertices} / "
                 f"{comp.cuts[b].vertices}")


def _check_lemma_5_8(comp, rel, both_indices, partitions, contexts, fail):
    """E°(S) ⊆ E°(L(p_r)) ∪ E°(R(p_l))."""
    for i in both_indices:
        p_l, p_r = comp.cut_points(i)
        circ = set(partitions[i][2])
        allowed = set()
        ctx_r = contexts[p_r]
        ctx_l = contexts[p_l]
        if ctx_r.L is not None:
            allowed |= set(partitions[ctx_r.L][2])
        if ctx_l.R is not None:
            allowed |= set(partitions[ctx_l.R][2])
        if not circ <= allowed:
            fail(f"Lemma 5.8 fails at {comp.cuts[i].vertices}: "
                 f"E° escapes {sorted(circ - allowed)}")


def _check_cor_5_9_pairs(comp, rel, both_indices, partitions, fail):
    """B crossing A on the right => E<-(A) ∩ E->(B) = ∅."""
    universe = (1 << len(comp.atoms)) - 1
    for a in both_indices:
        for b in both_indices:
            if a == b:
                continue
            am, bm = comp.cut_atom_masks[a], comp.cut_atom_masks[b]
            if not crosses_general(am, bm, universe):
                continue
            if crossing_side(comp, bm, am) != "right":
                continue
            if set(partitions[a][0]) & set(partitions[b][1]):
                fail(f"Cor 5.9: E<-(A) meets E->(B) for "
                     f"{comp.cuts[a].vertices} / {comp.cuts[b].vertices}")


def _check_lemma_5_10(support, comp, contexts, fail):
    """Increase-set membership bounds per edge.

    The paper's conditional form: if a ∈ L(p) ∩ L(q) then e is not in
    both E(B->(p)) and E(B->(q)); consequently at most 2 points per
    direction (at most 1 when the polygon has no inside atoms), and at
    most 4 events in total.
    """
    right_member: dict[int, list] = {}
    left_member: dict[int, list] = {}
    for ctx in contexts:
        if ctx.increase_right:
            for e in ctx.increase_right:
                right_member.setdefault(e, []).append(ctx)
        if ctx.increase_left:
            for e in ctx.increase_left:
                left_member.setdefault(e, []).append(ctx)
    no_inside = not comp.inside_atoms
    edge_by_id = {e.id: e for e in support.edges}
    for table, attr in ((right_member, "L"), (left_member, "R")):
        for eid, ctxs in table.items():
            if len(ctxs) > 2 or (no_inside and len(ctxs) > 1):
                fail(f"edge {eid} in {len(ctxs)} E(B{attr}) increase sets")
            for c1, c2 in combinations(ctxs, 2):
                m1 = comp.cut_atom_masks[getattr(c1, attr)]
                m2 = comp.cut_atom_masks[getattr(c2, attr)]
                shared = m1 & m2
                e = edge_by_id[eid]
                for v in (e.u, e.v):
                    va = next(a.index for a in comp.atoms if v in a.vertices)
                    if shared >> va & 1:
                        fail(f"Lemma 5.10: edge {eid} with endpoint atom in "
                             f"L(p) ∩ L(q) lies in both increase sets")
    for eid in set(right_member) | set(left_member):
        total = len(right_member.get(eid, [])) + len(left_member.get(eid, []))
        if total > 4:
            fail(f"edge {eid} in {total} > 4 increase sets")


def _check_mass_bounds(support, atlas, contexts, fail):
    """Lemma 5.6: x(E(B->(p))), x(E(B<-(p))) >= 1 - eta when defined."""
    x = {e.id: e.x for e in support.edges}
    bound = 1 - atlas.eta
    for ctx in contexts:
        for ids in (ctx.increase_right, ctx.increase_left):
            if ids is None:
                continue
            mass = sum((x[e] for e in ids), F(0))
            if mass < bound:
                fail(f"Lemma 5.6: increase mass {mass} < {bound} at point "
                     f"{ctx.point}")


def fired_events(contexts, tree_mask: int) -> list:
    """Bad events that occur for this tree: list of (ctx, direction)."""
    fired = []
    for ctx in contexts:
        if ctx.L is not None:
            if (_popcount(ctx.e_right_mask & tree_mask) != 1
                    or _popcount(ctx.e_circ_L_mask & tree_mask) != 0):
                fired.append((ctx, "right"))
        if ctx.R is not None:
            if (_popcount(ctx.e_left_mask & tree_mask) != 1
                    or _popcount(ctx.e_circ_R_mask & tree_mask) != 0):
                fired.append((ctx, "left"))
    return fired


def compute_sstar_bothsides(support: SupportGraph, contexts_by_comp,
                            tree_mask: int, alpha) -> SlackAssignment:
    """Theorem-5.2 contribution: alpha x_e on fired increase sets, idempotent."""
    alpha = to_fraction(alpha)
    x = {e.id: e.x for e in support.edges}
    out = SlackAssignment(alpha=alpha)
    for contexts in contexts_by_comp:
        for ctx, direction in fired_events(contexts, tree_mask):
            ids = ctx.increase_right if direction == "right" else ctx.increase_left
            for eid in ids:
                out.both[eid] = alpha * x[eid]  # assignment, never additive
            out.trace.append({
                "mechanism": "both-sides", "point": ctx.point,
                "direction": direction, "edges": list(ids),
            })
    return out


# ---------------------------------------------------------------------------
# hierarchy (appendix B)


@dataclass
class HNode:
    """One laminar-family cut with its classification."""

    index: int
    vertices: frozenset
    kind: str = "degree"  # near-cycle | triangle | degree | leaf
    parent: int | None = None
    children: list = field(default_factory=list)
    comp: CrossingComponent | None = None  # for near-cycle nodes
    child_order: list = field(default_factory=list)  # near-cycle atom order
    abc: tuple | None = None  # (A, B, C) edge-id lists


@dataclass
class Hierarchy:
    support: SupportGraph
    eta: Fraction
    eps_eta: Fraction
    nodes: list = field(default_factory=list)
    root: int = -1
    edge_parent: dict = field(default_factory=dict)  # edge id -> node index

    def node_by_vertices(self, vertices):
        key = frozenset(vertices)
        for node in self.nodes:
            if node.vertices == key:
                return node
        return None


def build_hierarchy(atlas: CutAtlas) -> Hierarchy:
    """Appendix-B procedure on N_{eta,<=1} with full validation."""
    support = atlas.support
    eta = atlas.eta
    eps_eta = 7 * eta
    if eta > F(1, 100):
        import warnings
        warnings.warn(f"hierarchy built at eta = {eta} above the 1e-2 "
                      "operational regime", stacklevel=2)
    sets: dict[frozenset, dict] = {}

    def add(vertices, **info):
        key = frozenset(vertices)
        entry = sets.setdefault(key, {})
        entry.update(info)

    root_key = frozenset(support.root_free_vertices)
    add(root_key)
    for comp in atlas.oneside_components:
        if comp.singleton:
            add(comp.cuts[0].vertices)
            continue
        order = comp.outside_order
        if order[0] != comp.root_atom:
            raise HierarchyViolation(
                "one-side polygon order does not start at the root atom"
            )
        union = []
        child_order = []
        for a in order[1:]:
            verts = comp.atoms[a].vertices
            add(verts)
            union.extend(verts)
            child_order.append(frozenset(verts))
        add(union, comp=comp, child_order=child_order)

    keys = sorted(sets, key=lambda k: (len(k), sorted(k)))
    nodes = [HNode(i, k) for i, k in enumerate(keys)]
    index = {k: i for i, k in enumerate(keys)}

    # laminarity + parents
    for a, b in combinations(nodes, 2):
        inter = a.vertices & b.vertices
        if inter and inter != a.vertices and inter != b.vertices:
            raise HierarchyViolation(
                f"cuts {sorted(a.vertices)} and {sorted(b.vertices)} cross"
            )
    for node in nodes:
        supersets = [o for o in nodes
                     if o.vertices > node.vertices]
        if supersets:
            parent = min(supersets, key=lambda o: len(o.vertices))
            node.parent = parent.index
            parent.children.append(node.index)
    hierarchy = Hierarchy(support=support, eta=eta, eps_eta=eps_eta,
                          nodes=nodes, root=index[root_key])
    if nodes[hierarchy.root].parent is not None:
        raise HierarchyViolation("root has a parent")

    for node in nodes:
        node.children.sort(key=lambda i: (len(nodes[i].vertices),
                                          sorted(nodes[i].vertices)))
        if node.children:
            covered = set()
            for c in node.children:
                covered |= nodes[c].vertices
            if covered != set(node.vertices):
                raise HierarchyViolation(
                    f"cut {sorted(node.vertices)} is not the union of its "
                    f"children (missing {sorted(set(node.vertices) - covered)})"
                )
        else:
            node.kind = "leaf"

    # classification + A/B/C partitions
    for key, info in sets.items():
        node = nodes[index[key]]
        if "comp" in info:
            node.kind = "near-cycle"
            node.comp = info["comp"]
            node.child_order = [index[k] for k in info["child_order"]]
            node.abc = _near_cycle_partition(support, node)
            _validate_near_cycle(support, hierarchy, node)
        elif len(node.children) == 2:
            node.kind = "triangle"
            node.abc = _triangle_partition(support, hierarchy, node)
        elif len(node.children) > 2:
            node.kind = "degree"

    # per-edge parent
    root_free = set(support.root_free_vertices)
    by_size = sorted(nodes, key=lambda n: len(n.vertices))
    for e in support.edges:
        if e.u not in root_free or e.v not in root_free:
            continue
        for node in by_size:
            if e.u in node.vertices and e.v in node.vertices:
                hierarchy.edge_parent[e.id] = node.index
                break
    return hierarchy


def _near_cycle_partition(support, node: HNode):
    comp = node.comp
    root_verts = comp.atoms[comp.root_atom].vertices
    order = comp.outside_order
    first = comp.atoms[order[1]].vertices
    last = comp.atoms[order[-1]].vertices
    a_ids = edges_between(support, root_verts, first)
    b_ids = edges_between(support, last, root_verts)
    boundary = [e.id for e in support.edges
                if (e.u in node.vertices) != (e.v in node.vertices)]
    c_ids = sorted(set(boundary) - set(a_ids) - set(b_ids))
    return (sorted(a_ids), sorted(b_ids), c_ids)


def _triangle_partition(support, hierarchy, node: HNode):
    x_set = hierarchy.nodes[node.children[0]].vertices
    y_set = hierarchy.nodes[node.children[1]].vertices
    all_v = set(range(support.n_vertices))
    a_ids = edges_between(support, x_set, all_v - set(x_set) - set(y_set))
    b_ids = edges_between(support, y_set, all_v - set(x_set) - set(y_set))
    return (sorted(a_ids), sorted(b_ids), [])


def _validate_near_cycle(support, hierarchy, node: HNode):
    comp = node.comp
    eps = hierarchy.eps_eta
    x = {e.id: e.x for e in support.edges}

    def mass(ids):
        return sum((x[i] for i in ids), F(0))

    a_ids, b_ids, c_ids = node.abc
    if mass(a_ids) < 1 - eps or mass(b_ids) < 1 - eps:
        raise HierarchyViolation(
            f"near-cycle {sorted(node.vertices)}: A/B mass below 1-eps_eta"
        )
    if mass(c_ids) > eps:
        raise HierarchyViolation(
            f"near-cycle {sorted(node.vertices)}: C mass {mass(c_ids)} > eps_eta"
        )
    order = comp.outside_order
    for i in range(1, len(order) - 1):
        u = comp.atoms[order[i]].vertices
        v = comp.atoms[order[i + 1]].vertices
        if mass(edges_between(support, u, v)) < 1 - eps:
            raise HierarchyViolation(
                f"near-cycle {sorted(node.vertices)}: adjacent mass "
                f"E({list(u)},{list(v)}) below 1-eps_eta"
            )
    for a in order:
        if comp.atoms[a].x_delta > 2 + eps:
            raise HierarchyViolation(
                f"near-cycle atom {comp.atoms[a].vertices} has x(delta) "
                f"{comp.atoms[a].x_delta} > 2+eps_eta"
            )


# ---------------------------------------------------------------------------
# one-side machinery (appendix A)


@dataclass
class GroupItem:
    """One relevant cut mapped into adjacent-atom edge groups."""

    kind: str  # 'cut' or 'atom'
    arc: tuple  # (start_pos, end_pos) in polygon positions, root at 0
    vertices: frozenset
    boundary_mask: int = 0
    happy_mask: int | None = None  # for extremal cuts/atoms
    role: str = "middle"  # 'leftmost' | 'rightmost' | 'middle'
    assignments: list = field(default_factory=list)  # group indices (units)


@dataclass
class OneSideEngine:
    """Precomputed per-polygon data for the appendix-A slack vector."""

    comp: CrossingComponent
    a_mask: int = 0
    b_mask: int = 0
    c_mask: int = 0
    groups: list = field(default_factory=list)  # per group: edge id list
    group_masks: list = field(default_factory=list)
    items: list = field(default_factory=list)
    group_items: list = field(default_factory=list)  # per group: item indices


def _arc_of(comp, atom_mask) -> tuple:
    order = comp.outside_order
    m = len(order)
    pos = sorted(order.index(a) for a in order if atom_mask >> a & 1)
    start = next(p for p in pos if (p - 1) % m not in pos)
    return (start, (start + len(pos) - 1) % m)


def build_one_side_engine(atlas: CutAtlas, comp: CrossingComponent,
                          c_plus_entries) -> OneSideEngine:
    """Groups, relevant-cut mapping (load <= 4 units) and happiness masks."""
    support = atlas.support
    eng = OneSideEngine(comp=comp)
    order = comp.outside_order
    m = len(order)
    if order[0] != comp.root_atom:
        raise StructureViolation("one-side polygon must start at the root")
    root_verts = comp.atoms[comp.root_atom].vertices
    atom_verts = [comp.atoms[a].vertices for a in order]
    eng.a_mask = _edge_mask(edges_between(support, root_verts, atom_verts[1]))
    eng.b_mask = _edge_mask(edges_between(support, atom_verts[m - 1], root_verts))
    union = [v for a in order[1:] for v in comp.atoms[a].vertices]
    boundary = _edge_mask([e.id for e in support.edges
                           if (e.u in set(union)) != (e.v in set(union))])
    eng.c_mask = boundary & ~eng.a_mask & ~eng.b_mask

    for i in range(1, m - 1):
        ids = edges_between(support, atom_verts[i], atom_verts[i + 1])
        eng.groups.append(sorted(ids))
        eng.group_masks.append(_edge_mask(ids))

    all_vertices = set(range(support.n_vertices))
    items = []
    for kind, ref in c_plus_entries:
        if kind == "cut":
            amask = comp.cut_atom_masks[ref]
            verts = frozenset(comp.cuts[ref].vertices)
        else:
            amask = 1 << ref
            verts = frozenset(comp.atoms[ref].vertices)
        arc = _arc_of(comp, amask)
        item = GroupItem(kind=kind, arc=arc, vertices=verts)
        item.boundary_mask = _edge_mask(
            e.id for e in support.edges if (e.u in verts) != (e.v in verts)
        )
        if arc[0] == 1:
            item.role = "leftmost"
        elif arc[1] == m - 1:
            item.role = "rightmost"
        if item.role != "middle":
            others = all_vertices - verts - set(root_verts)
            item.happy_mask = _edge_mask(edges_between(support, verts, others))
        items.append(item)
    eng.items = items
    _assign_mapping(eng, m)
    return eng


def _assign_mapping(eng: OneSideEngine, m: int):
    """Exhaustive two-choice search; each group takes at most 4 units.

    Group g holds the edges E(a_{g+1}, a_{g+2}); an item with arc
    (start, end) may map left to group start-2 or right to group end-1.
    """
    n_groups = len(eng.groups)
    options = []
    for item in eng.items:
        start, end = item.arc
        left = start - 2  # E(a_{start-1}, a_{start})
        right = end - 1  # E(a_{end}, a_{end+1})
        if item.kind == "cut":
            opts = [g for g in {left, right} if 0 <= g < n_groups]
            if item.role == "leftmost":
                opts = [g for g in opts if g == right]
            if item.role == "rightmost":
                opts = [g for g in opts if g == left]
            options.append([(g,) for g in sorted(set(opts))])
        else:
            sides = [g for g in (left, right) if 0 <= g < n_groups]
            pairs = sorted({tuple(sorted((g1, g2)))
                            for g1 in sides for g2 in sides})
            options.append(pairs)
        if not options[-1]:
            raise MappingUnavailable(
                f"no admissible group for item {sorted(item.vertices)}"
            )

    loads = [0] * n_groups
    chosen = [None] * len(eng.items)
    item_order = sorted(range(len(eng.items)),
                        key=lambda i: len(options[i]))

    def backtrack(k):
        if k == len(item_order):
            return True
        idx = item_order[k]
        for opt in options[idx]:
            if all(loads[g] + opt.count(g) <= 4 for g in set(opt)):
                for g in opt:
                    loads[g] += 1
                chosen[idx] = opt
                if backtrack(k + 1):
                    return True
                for g in opt:
                    loads[g] -= 1
                chosen[idx] = None
        return False

    if not backtrack(0):
        raise MappingUnavailable(
            "exhausted the two-choice assignment space; contradicts the "
            "imported mapping lemma"
        )
    for item, opt in zip(eng.items, chosen):
        item.assignments = list(opt)
    eng.group_items = [[] for _ in range(n_groups)]
    for idx, item in enumerate(eng.items):
        for g in set(item.assignments):
            eng.group_items[g].append(idx)


def polygon_happiness(eng: OneSideEngine, tree_mask: int) -> dict:
    a_t = _popcount(eng.a_mask & tree_mask)
    b_t = _popcount(eng.b_mask & tree_mask)
    c_t = _popcount(eng.c_mask & tree_mask)
    return {
        "A_T": a_t, "B_T": b_t, "C_T": c_t,
        "left_happy": a_t % 2 == 1 and c_t == 0,
        "right_happy": b_t % 2 == 1 and c_t == 0,
        "happy": a_t % 2 == 1 and b_t % 2 == 1 and c_t == 0,
    }


def _item_triggers(item: GroupItem, tree_mask: int) -> bool:
    if item.role in ("leftmost", "rightmost"):
        return _popcount(item.happy_mask & tree_mask) != 1  # not happy
    return _popcount(item.boundary_mask & tree_mask) % 2 == 1  # odd


def compute_sstar_oneside(support: SupportGraph, engines, hierarchy,
                          tree_mask: int, alpha) -> SlackAssignment:
    """Appendix-A contribution: group events plus the triangle rule."""
    alpha = to_fraction(alpha)
    x = {e.id: e.x for e in support.edges}
    out = SlackAssignment(alpha=alpha)
    for eng in engines:
        for g, ids in enumerate(eng.groups):
            fired_full = False
            fired_half = False
            for idx in eng.group_items[g]:
                item = eng.items[idx]
                if not _item_triggers(item, tree_mask):
                    continue
                doubly = item.assignments.count(g) == 2
                if item.kind == "cut" or doubly:
                    fired_full = True
                else:
                    fired_half = True
            if not (fired_full or fired_half):
                continue
            factor = F(1) if fired_full else F(1, 2)
            for eid in ids:
                value = alpha * x[eid] * factor
                if out.one.get(eid, F(0)) < value:
                    out.one[eid] = value
            out.trace.append({
                "mechanism": "one-side", "group": ids,
                "factor": str(factor),
            })
    if hierarchy is not None:
        for node in hierarchy.nodes:
            if node.kind != "triangle":
                continue
            xs = hierarchy.nodes[node.children[0]].vertices
            ys = hierarchy.nodes[node.children[1]].vertices
            if _triangle_increase_event(support, node, xs, ys, tree_mask):
                ids = edges_between(support, xs, ys)
                for eid in ids:
                    value = alpha * x[eid]
                    if out.one.get(eid, F(0)) < value:
                        out.one[eid] = value
                out.trace.append({
                    "mechanism": "triangle",
                    "cut": sorted(node.vertices), "edges": sorted(ids),
                })
    return out


_INNER_CACHE = {}


def _inner_edge_mask(support, vertices):
    key = (id(support), frozenset(vertices))
    if key not in _INNER_CACHE:
        vs = frozenset(vertices)
        _INNER_CACHE[key] = _edge_mask(
            e.id for e in support.edges if e.u in vs and e.v in vs
        )
    return _INNER_CACHE[key]


def _triangle_increase_event(support, node, xs, ys, tree_mask) -> bool:
    """True when any of T∩E(X), T∩E(Y), T∩E(S) fails to be a tree."""
    for vs in (xs, ys, node.vertices):
        mask = _inner_edge_mask(support, vs)
        if _popcount(mask & tree_mask) != len(vs) - 1:
            return True
    return False


# ---------------------------------------------------------------------------
# per-tree audit and statistics


@dataclass
class SlackStructures:
    """Everything the per-tree audit needs, built once per atlas."""

    atlas: CutAtlas
    alpha: Fraction
    beta: Fraction
    eta: Fraction
    eps_eta: Fraction
    contexts_by_comp: list = field(default_factory=list)
    hierarchy: Hierarchy | None = None
    engines: list = field(default_factory=list)
    cut_boundary: dict = field(default_factory=dict)  # cut.bits -> edge mask
    point_index: dict = field(default_factory=dict)  # (comp id, point) -> ctx


def default_beta(eta) -> Fraction:
    eta = to_fraction(eta)
    return eta / (4 + 2 * eta)


def wire_alpha(beta, eta, mode: str = "appendix-b") -> Fraction:
    beta, eta = to_fraction(beta), to_fraction(eta)
    if mode == "two-beta":
        return 2 * beta
    if mode == "appendix-b":
        return (2 + eta) / (1 - 7 * eta) * beta
    raise ValueError(f"unknown alpha wiring {mode!r}")


def build_slack_structures(atlas: CutAtlas, beta=None,
                           alpha_mode: str = "appendix-b") -> SlackStructures:
    support = atlas.support
    eta = atlas.eta
    beta = default_beta(eta) if beta is None else to_fraction(beta)
    alpha = wire_alpha(beta, eta, alpha_mode)
    s = SlackStructures(atlas=atlas, alpha=alpha, beta=beta, eta=eta,
                        eps_eta=7 * eta)
    for comp in atlas.components:
        ctxs = build_point_contexts(atlas, comp)
        if ctxs:
            s.contexts_by_comp.append(ctxs)
    s.hierarchy = build_hierarchy(atlas)
    for comp, entries in zip(atlas.oneside_components, atlas.c_plus):
        if not comp.singleton and entries:
            s.engines.append(build_one_side_engine(atlas, comp, entries))
    for cut in atlas.cuts:
        side = set(cut.vertices)
        s.cut_boundary[cut.bits] = _edge_mask(
            e.id for e in support.edges if (e.u in side) != (e.v in side)
        )
    _assert_root_free_support(s)
    return s


def _assert_root_free_support(s: SlackStructures):
    """s* may only touch edges between distinct non-root atoms (Fact 4.8)."""
    support = s.atlas.support
    root_pair = {support.u0, support.v0}
    for ctxs in s.contexts_by_comp:
        for ctx in ctxs:
            for ids in (ctx.increase_right, ctx.increase_left):
                if not ids:
                    continue
                for eid in ids:
                    e = support.edges[eid]
                    if root_pair & {e.u, e.v}:
                        raise StructureViolation(
                            f"increase set touches the root pair at edge {eid}"
                        )


def tree_edge_mask(tree_edges) -> int:
    return _edge_mask(tree_edges)


def compute_sstar(s: SlackStructures, tree_mask: int) -> SlackAssignment:
    """Combined s*: both-sides plus one-side, summed per edge."""
    support = s.atlas.support
    both = compute_sstar_bothsides(support, s.contexts_by_comp, tree_mask,
                                   s.alpha)
    one = compute_sstar_oneside(support, s.engines, s.hierarchy, tree_mask,
                                s.alpha)
    merged = SlackAssignment(alpha=s.alpha, both=both.both, one=one.one,
                             trace=both.trace + one.trace)
    return merged


def audit_tree(s: SlackStructures, tree_edges, draw_index: int = 0,
               strict: bool | None = None) -> dict:
    """Per-tree audit record: parities, slack totals, case verdicts.

    Deterministic paper guarantees are asserted (strict mode, the
    default inside the eta regime); Case 2 is recorded, never asserted,
    with the worst-case substitute s_e = -beta x_e (payment vector out
    of scope).
    """
    atlas = s.atlas
    support = atlas.support
    if strict is None:
        strict = s.eta <= F(1, 10)
    tree_mask = _edge_mask(tree_edges)
    assignment = compute_sstar(s, tree_mask)
    x = {e.id: e.x for e in support.edges}

    def boundary_ids(bits):
        mask = s.cut_boundary[bits]
        return [e.id for e in support.edges if mask >> e.id & 1]

    record = {
        "draw": draw_index,
        "fired": assignment.trace,
        "odd_cuts": [],
        "case1_identity": (F(1, 2) - s.beta) * (2 + s.eta) >= 1,
        "case3_failures": [],
        "lemma_5_3_failures": [],
        "appendix_a_failures": [],
        "case2": [],
        "case3_y": [],
    }
    alpha_bound = s.alpha * (1 - s.eta)
    half_beta = F(1, 2) - s.beta

    for cut in atlas.cuts:
        mask = s.cut_boundary[cut.bits]
        parity = _popcount(mask & tree_mask) % 2
        tag = atlas.tags[cut.bits]
        if parity == 0 and _popcount(mask & tree_mask) == 2:
            even2 = True
        else:
            even2 = False
        ids = boundary_ids(cut.bits)
        s_total = assignment.mass_on(ids)
        s_both = assignment.mass_on(ids, "both")
        if parity == 1:
            record["odd_cuts"].append({
                "cut": list(cut.vertices), "tag": tag,
                "sstar": str(s_total),
            })
        if tag == "crossed-both-sides":
            if parity == 1 and s_both < alpha_bound:
                record["case3_failures"].append(list(cut.vertices))
            if _popcount(mask & tree_mask) != 2:
                comp, idx = _find_comp_cut(atlas, cut)
                p_l, p_r = comp.cut_points(idx)
                if not _lemma_5_3_fired(s, comp, p_l, p_r, tree_mask):
                    record["lemma_5_3_failures"].append(list(cut.vertices))
            y_val = half_beta * cut.value + s_total
            record["case3_y"].append({"cut": list(cut.vertices),
                                      "ok": y_val >= 1 or parity == 0})
        elif parity == 1:
            y_val = half_beta * cut.value + s_total
            record["case2"].append({
                "cut": list(cut.vertices),
                "y": str(y_val),
                "ok_with_worst_case_payment": bool(y_val >= 1),
                "note": "not asserted - payment vector out of scope",
            })

    _audit_appendix_a(s, tree_mask, assignment, record)

    if strict:
        if record["case3_failures"]:
            raise StructureViolation(
                f"Theorem 5.2 bullet violated at {record['case3_failures']}"
            )
        if record["lemma_5_3_failures"]:
            raise StructureViolation(
                f"Lemma 5.3 violated at {record['lemma_5_3_failures']}"
            )
        if record["appendix_a_failures"]:
            raise StructureViolation(
                f"Appendix A bullet violated: {record['appendix_a_failures']}"
            )
    return record


def _find_comp_cut(atlas, cut):
    for comp in atlas.components:
        for i, c in enumerate(comp.cuts):
            if c.bits == cut.bits:
                return comp, i
    raise KeyError(cut)


def _lemma_5_3_fired(s, comp, p_l, p_r, tree_mask) -> bool:
    for ctxs in s.contexts_by_comp:
        if ctxs and ctxs[0].comp is comp:
            ctx_r = ctxs[p_r]
            ctx_l = ctxs[p_l]
            fired = False
            if ctx_r.L is not None:
                if (_popcount(ctx_r.e_right_mask & tree_mask) != 1
                        or _popcount(ctx_r.e_circ_L_mask & tree_mask) != 0):
                    fired = True
            if ctx_l.R is not None:
                if (_popcount(ctx_l.e_left_mask & tree_mask) != 1
                        or _popcount(ctx_l.e_circ_R_mask & tree_mask) != 0):
                    fired = True
            return fired
    return False


def _audit_appendix_a(s, tree_mask, assignment, record):
    """Thm A.3 deterministic bullets plus the triangle rule (Lemma A.9)."""
    support = s.atlas.support
    bound = s.alpha * (1 - s.eps_eta)
    for eng in s.engines:
        hap = polygon_happiness(eng, tree_mask)
        for item in eng.items:
            parity = _popcount(item.boundary_mask & tree_mask) % 2
            if parity == 0:
                continue
            if item.role == "leftmost" and not hap["left_happy"]:
                continue
            if item.role == "rightmost" and not hap["right_happy"]:
                continue
            ids = [e.id for e in support.edges
                   if item.boundary_mask >> e.id & 1]
            got = assignment.mass_on(ids, "one")
            if got < bound:
                record["appendix_a_failures"].append({
                    "cut": sorted(item.vertices), "role": item.role,
                    "sstar": str(got), "need": str(bound),
                })
    if s.hierarchy is None:
        return
    x = {e.id: e.x for e in support.edges}
    for node in s.hierarchy.nodes:
        if node.kind != "triangle":
            continue
        a_ids, b_ids, _ = node.abc
        a_t = sum(1 for eid in a_ids if tree_mask >> eid & 1)
        b_t = sum(1 for eid in b_ids if tree_mask >> eid & 1)
        for child_pos, (side_ids, side_t) in enumerate(
                ((a_ids, a_t), (b_ids, b_t))):
            if side_t % 2 != 1:
                continue  # triangle not happy on this side
            child = s.hierarchy.nodes[node.children[child_pos]]
            cmask = _edge_mask(
                e.id for e in support.edges
                if (e.u in child.vertices) != (e.v in child.vertices)
            )
            if _popcount(cmask & tree_mask) % 2 == 0:
                continue
            ids = [e.id for e in support.edges if cmask >> e.id & 1]
            got = assignment.mass_on(ids, "one")
            if got < bound:
                record["appendix_a_failures"].append({
                    "cut": sorted(child.vertices), "role": "triangle-child",
                    "sstar": str(got), "need": str(bound),
                })


# ---------------------------------------------------------------------------
# statistical suite (Wilson intervals at 99%)

_Z99 = 2.5758293035489004


def wilson_halfwidth(p_hat: float, n: int, z: float = _Z99) -> float:
    if n == 0:
        return 1.0
    denom = 1 + z * z / n
    return (z * ((p_hat * (1 - p_hat) / n + z * z / (4 * n * n)) ** 0.5)) / denom


def wilson_center(p_hat: float, n: int, z: float = _Z99) -> float:
    if n == 0:
        return 0.5
    return (p_hat + z * z / (2 * n)) / (1 + z * z / n)


@dataclass
class _Counter:
    hits: int = 0
    total: int = 0

    def add(self, flag: bool):
        self.hits += bool(flag)
        self.total += 1

    @property
    def mean(self) -> float:
        return self.hits / self.total if self.total else 0.0


@dataclass
class _MeanCounter:
    acc: float = 0.0
    total: int = 0

    def add(self, value: float):
        self.acc += value
        self.total += 1

    @property
    def mean(self) -> float:
        return self.acc / self.total if self.total else 0.0


class SlackStatistics:
    """Accumulates per-tree observations for every statistical invariant."""

    def __init__(self, s: SlackStructures):
        self.s = s
        self.n_trees = 0
        self.bad_event_freq = {}  # (comp idx, point, dir) -> _Counter
        self.edge_both = {}  # edge id -> _Counter (fired at alpha x)
        self.edge_one = {}  # edge id -> _MeanCounter of s*/(alpha x)
        self.both_even2 = {}  # cut bits -> _Counter of delta(S)_T == 2
        self.a5 = {}  # item key -> _Counter of even
        self.a6 = {}
        self.a7 = {}
        self.happy = {}  # engine idx -> dict counters
        self.subtree = {}  # cut bits -> _Counter (Lemma 2.11)
        self.one_edge_pairs = []  # (A ids, B ids, bound) for Lemma 2.12
        self.pair_counts = {}
        self.zero_sets = {}  # label -> (_Counter, x mass)
        self._prepare()

    def _prepare(self):
        atlas = self.s.atlas
        support = atlas.support
        x = {e.id: e.x for e in support.edges}
        for bits, mask in self.s.cut_boundary.items():
            self.both_even2[bits] = _Counter()
            self.subtree[bits] = _Counter()
        cuts = atlas.cuts
        by_bits = {c.bits: c for c in cuts}
        for a, b in combinations(cuts, 2):
            if a.bits & b.bits:
                continue
            union = a.bits | b.bits
            if union in by_bits:
                eps = (a.value - 2) + (b.value - 2) + (by_bits[union].value - 2)
                ids = edges_between(support, a.vertices, b.vertices)
                if ids:
                    key = (a.bits, b.bits)
                    self.one_edge_pairs.append(
                        (key, _edge_mask(ids), 1 - eps / 2)
                    )
                    self.pair_counts[key] = _Counter()
        for ci, ctxs in enumerate(self.s.contexts_by_comp):
            for ctx in ctxs:
                if ctx.L is not None:
                    self.bad_event_freq[(ci, ctx.point, "right")] = _Counter()
                if ctx.R is not None:
                    self.bad_event_freq[(ci, ctx.point, "left")] = _Counter()
                for label, mask in (("circL", ctx.e_circ_L_mask),
                                    ("circR", ctx.e_circ_R_mask)):
                    if mask:
                        ids = [e.id for e in support.edges if mask >> e.id & 1]
                        mass = sum((x[i] for i in ids), F(0))
                        if mass < 1:
                            self.zero_sets[(ci, ctx.point, label)] = (
                                _Counter(), mask, mass)

    def observe(self, tree_mask: int, assignment: SlackAssignment):
        s = self.s
        atlas = s.atlas
        support = atlas.support
        x = {e.id: e.x for e in support.edges}
        self.n_trees += 1
        for ci, ctxs in enumerate(s.contexts_by_comp):
            for ctx, direction in fired_events(ctxs, tree_mask):
                pass  # frequency handled below per defined event
            for ctx in ctxs:
                if ctx.L is not None:
                    fired = (_popcount(ctx.e_right_mask & tree_mask) != 1
                             or _popcount(ctx.e_circ_L_mask & tree_mask) != 0)
                    self.bad_event_freq[(ci, ctx.point, "right")].add(fired)
                if ctx.R is not None:
                    fired = (_popcount(ctx.e_left_mask & tree_mask) != 1
                             or _popcount(ctx.e_circ_R_mask & tree_mask) != 0)
                    self.bad_event_freq[(ci, ctx.point, "left")].add(fired)
        for eid, e in ((e.id, e) for e in support.edges):
            both_val = assignment.both.get(eid, F(0))
            self.edge_both.setdefault(eid, _Counter()).add(both_val > 0)
            one_val = assignment.one.get(eid, F(0))
            ratio = float(one_val / (s.alpha * x[eid])) if x[eid] else 0.0
            self.edge_one.setdefault(eid, _MeanCounter()).add(ratio)
        for cut in atlas.cuts:
            mask = s.cut_boundary[cut.bits]
            cnt = _popcount(mask & tree_mask)
            if atlas.tags[cut.bits] == "crossed-both-sides":
                self.both_even2[cut.bits].add(cnt == 2)
            inner = _inner_edge_mask(support, cut.vertices)
            self.subtree[cut.bits].add(
                _popcount(inner & tree_mask) == len(cut.vertices) - 1
            )
        for key, mask, _bound in self.one_edge_pairs:
            self.pair_counts[key].add(_popcount(mask & tree_mask) == 1)
        for label, (counter, mask, _mass) in self.zero_sets.items():
            counter.add(mask & tree_mask == 0)
        for ei, eng in enumerate(s.engines):
            hap = polygon_happiness(eng, tree_mask)
            h = self.happy.setdefault(ei, {
                "left": _Counter(), "right": _Counter(), "full": _Counter()})
            h["left"].add(hap["left_happy"])
            h["right"].add(hap["right_happy"])
            h["full"].add(hap["happy"])
            for ii, item in enumerate(eng.items):
                key = (ei, ii)
                if item.role == "middle":
                    even = _popcount(item.boundary_mask & tree_mask) % 2 == 0
                    table = self.a5 if item.kind == "cut" else self.a6
                    table.setdefault(key, _Counter()).add(even)
                else:
                    happy = _popcount(item.happy_mask & tree_mask) == 1
                    self.a7.setdefault(key, _Counter()).add(happy)

    def bound_rows(self) -> list:
        """One row per statistical invariant: (name, bound, measured, ci, ok)."""
        s = self.s
        eta = float(s.eta)
        rows = []

        def row(name, bound, measured, n, direction):
            ci = wilson_halfwidth(min(max(measured, 0.0), 1.0), n)
            if direction == "<=":
                ok = measured <= bound + 3 * ci
            else:
                ok = measured >= bound - 3 * ci
            rows.append({
                "invariant": name, "bound": bound, "measured": measured,
                "ci": ci, "n": n, "ok": bool(ok), "direction": direction,
            })

        for key, counter in sorted(self.bad_event_freq.items()):
            row(f"lemma5.5 P[B {key[2]} point {key[1]} comp {key[0]}]",
                4.5 * eta, counter.mean, counter.total, "<=")
        worst_both = None
        for eid, counter in sorted(self.edge_both.items()):
            if counter.hits == 0 and worst_both is not None:
                continue
            if worst_both is None or counter.mean > worst_both[1].mean:
                worst_both = (eid, counter)
        if worst_both is not None:
            row(f"thm5.2 E[s*_e]/(alpha x_e) worst edge {worst_both[0]}",
                18 * eta, worst_both[1].mean, worst_both[1].total, "<=")
        worst_one = None
        for eid, counter in sorted(self.edge_one.items()):
            if worst_one is None or counter.mean > worst_one[1].mean:
                worst_one = (eid, counter)
        if worst_one is not None and self.s.engines:
            row(f"thmA.3 E[s*_e]/(alpha x_e) worst edge {worst_one[0]}",
                44 * eta, worst_one[1].mean, worst_one[1].total, "<=")
        for bits, counter in sorted(self.both_even2.items()):
            if counter.total and self.s.atlas.tags[bits] == "crossed-both-sides":
                cut = next(c for c in self.s.atlas.cuts if c.bits == bits)
                slack_const = ((1 - counter.mean) / eta) if eta else 0.0
                row(f"claim3.2 P[delta_T=2] cut {list(cut.vertices)} "
                    f"(const {slack_const:.2f})",
                    1 - 10 * eta, counter.mean, counter.total, ">=")
        for bits, counter in sorted(self.subtree.items()):
            cut = next(c for c in self.s.atlas.cuts if c.bits == bits)
            bound = 1 - float(cut.value - 2) / 2
            row(f"lemma2.11 P[subtree] cut {list(cut.vertices)}",
                bound, counter.mean, counter.total, ">=")
        for key, mask, bound in self.one_edge_pairs:
            counter = self.pair_counts[key]
            row(f"cor2.12 P[E(A,B)_T=1] pair {key}",
                float(bound), counter.mean, counter.total, ">=")
        for label, (counter, mask, mass) in sorted(self.zero_sets.items()):
            row(f"fact2.13 P[T∩A=∅] set {label}",
                1 - float(mass), counter.mean, counter.total, ">=")
        for key, counter in sorted(self.a5.items()):
            row(f"lemmaA.5 P[even] non-extremal cut {key}",
                1 - 11 * eta, counter.mean, counter.total, ">=")
        for key, counter in sorted(self.a6.items()):
            row(f"lemmaA.6 P[even] middle atom {key}",
                1 - 21 * eta, counter.mean, counter.total, ">=")
        for key, counter in sorted(self.a7.items()):
            eng = self.s.engines[key[0]]
            item = eng.items[key[1]]
            bound = 1 - (5 if item.kind == "cut" else 12) * eta
            row(f"lemmaA.7 P[happy] {item.role} {item.kind} {key}",
                bound, counter.mean, counter.total, ">=")
        return rows
