"""Near-minimum-cut atlas: enumeration, atoms, polygons, classification.

Cuts are identified with the side not containing u0, v0 and stored as
bitmasks over the root-free vertices.  Enumeration is Gray-code
incremental on integer-scaled exact weights, so membership under the
strict 2+eta threshold is an exact comparison.

The polygon arrangement is found combinatorially: inside atoms are the
ones avoidable by a k-cycle, and the remaining (outside) atoms are
ordered by backtracking so that every cut projects to a contiguous
proper interval with distinct projections.  The two methods must agree;
any discrepancy is a hard failure, as is a missing arrangement.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd
from pathlib import Path

from .errors import ChainViolation, NoArrangement, StructureViolation, TooLarge
from .instances import SupportGraph
from .rationals import frac_str, to_fraction

_ENUM_BOUND = 23  # root-free vertices


@dataclass(frozen=True)
class Cut:
    """A root-free near-min cut side with its exact value."""

    bits: int  # mask over root-free vertex positions
    vertices: tuple  # sorted vertex ids
    value: Fraction

    @property
    def slack(self) -> Fraction:
        return self.value - 2

    def __repr__(self):
        return f"Cut({list(self.vertices)}, {self.value})"


@dataclass
class Atom:
    """One block of the coarsest partition refining a component's cuts."""

    index: int
    vertices: tuple  # sorted vertex ids (root atom includes u0, v0)
    is_root: bool
    x_delta: Fraction | None = None


@dataclass
class CrossingComponent:
    """A connected component of crossing cuts plus its polygon data."""

    cuts: list  # list[Cut], canonical order
    atoms: list = field(default_factory=list)  # list[Atom]
    root_atom: int = -1
    cut_atom_masks: list = field(default_factory=list)  # per cut, mask over atom ids
    crossing_adj: list = field(default_factory=list)  # per cut, list of cut indices
    outside_order: list = field(default_factory=list)  # atom ids, circular
    inside_atoms: list = field(default_factory=list)  # atom ids
    kcycle_witnesses: dict = field(default_factory=dict)  # atom id -> list of vertex tuples
    projections: list = field(default_factory=list)  # per cut, (start_pos, end_pos)

    @property
    def singleton(self) -> bool:
        return len(self.cuts) == 1

    @property
    def m_outside(self) -> int:
        return len(self.outside_order)

    def atom_position(self, atom_id: int):
        return self.outside_order.index(atom_id)

    def cut_points(self, cut_index: int):
        """(left point, right point) of the cut's projection interval.

        Point i is the gap immediately clockwise of circular position i.
        """
        start, end = self.projections[cut_index]
        return start, (end + 1) % self.m_outside


@dataclass
class CutAtlas:
    """Everything we know about N_eta for one support graph."""

    support: SupportGraph
    eta: Fraction
    closed_threshold: bool
    cuts: list  # list[Cut]
    components: list = field(default_factory=list)  # components of N_eta
    tags: dict = field(default_factory=dict)  # cut.bits -> tag string
    oneside_components: list = field(default_factory=list)  # components of N_{eta,<=1}
    c_plus: list = field(default_factory=list)  # per oneside comp: list of ('cut', i) / ('atom', a)

    def tag_of(self, cut: Cut) -> str:
        return self.tags[cut.bits]

    @property
    def both_sides_cuts(self) -> list:
        return [c for c in self.cuts if self.tags.get(c.bits) == "crossed-both-sides"]


def _root_free_positions(support: SupportGraph):
    rf = support.root_free_vertices
    return rf, {v: i for i, v in enumerate(rf)}


def enumerate_near_min_cuts(support: SupportGraph, eta,
                            closed_threshold: bool = False) -> list:
    """All root-free sides S with x(delta(S)) < 2+eta (<= when closed).

    Gray-code incremental updates on integer-scaled weights; exact.
    """
    eta = to_fraction(eta)
    if eta > Fraction(1, 10):
        warnings.warn(f"eta = {eta} above the 1/10 structure regime", stacklevel=2)
    rf, pos = _root_free_positions(support)
    if len(rf) > _ENUM_BOUND:
        raise TooLarge(f"exact enumeration limited to {_ENUM_BOUND} root-free vertices")
    denom = reduce(lambda a, b: a * b // gcd(a, b),
                   (e.x.denominator for e in support.edges), 1)
    incident = [[] for _ in rf]
    for e in support.edges:
        w = int(e.x * denom)
        ui = pos.get(e.u)
        vi = pos.get(e.v)
        if ui is not None:
            incident[ui].append((vi, w))
        if vi is not None:
            incident[vi].append((ui, w))
    threshold = 2 + eta
    tn, td = threshold.numerator, threshold.denominator

    def keep(val: int) -> bool:
        lhs = val * td
        rhs = tn * denom
        return lhs <= rhs if closed_threshold else lhs < rhs

    cuts = []
    in_s = [False] * len(rf)
    boundary = 0
    mask = 0
    for g in range(1, 1 << len(rf)):
        v = (g & -g).bit_length() - 1
        delta = 0
        for u, w in incident[v]:
            if u is None or not in_s[u]:
                delta += w
            else:
                delta -= w
        if in_s[v]:
            in_s[v] = False
            boundary -= delta
            mask &= ~(1 << v)
        else:
            boundary += delta
            in_s[v] = True
            mask |= 1 << v
        if keep(boundary):
            verts = tuple(rf[i] for i in range(len(rf)) if mask >> i & 1)
            cuts.append(Cut(mask, verts, Fraction(boundary, denom)))
    cuts.sort(key=lambda c: (len(c.vertices), c.vertices))
    return cuts


def crosses(a: int, b: int) -> bool:
    """Fact-4.7 crossing for root-free sides (bitmasks)."""
    return bool(a & b) and bool(a & ~b) and bool(b & ~a)


def crosses_general(a: int, b: int, universe: int) -> bool:
    """Four-condition crossing for arbitrary atom-mask sides."""
    return (bool(a & b) and bool(a & ~b) and bool(b & ~a)
            and bool(universe & ~(a | b)))


def x_delta_of_vertex_set(support: SupportGraph, vertices) -> Fraction:
    side = set(vertices)
    total = Fraction(0)
    for e in support.edges:
        if (e.u in side) != (e.v in side):
            total += e.x
    if (support.u0 in side) != (support.v0 in side):
        total += 1
    return total


def build_components(support: SupportGraph, cuts) -> list:
    """Group cuts by the crossing relation and compute atoms per component."""
    n = len(cuts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if crosses(cuts[i].bits, cuts[j].bits):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    rf, _pos = _root_free_positions(support)
    comps = []
    for indices in sorted(groups.values(), key=lambda g: (len(cuts[g[0]].vertices), cuts[g[0]].vertices)):
        comp_cuts = [cuts[i] for i in indices]
        comp_cuts.sort(key=lambda c: (len(c.vertices), c.vertices))
        comp = CrossingComponent(cuts=comp_cuts)
        _compute_atoms(support, comp, rf)
        comps.append(comp)
    return comps


def _compute_atoms(support: SupportGraph, comp: CrossingComponent, rf):
    signatures: dict[tuple, list[int]] = {}
    for i, v in enumerate(rf):
        sig = tuple((c.bits >> i) & 1 for c in comp.cuts)
        signatures.setdefault(sig, []).append(v)
    zero_sig = tuple(0 for _ in comp.cuts)
    root_vertices = sorted(
        signatures.pop(zero_sig, []) + [support.u0, support.v0]
    )
    atom_vertex_lists = sorted(signatures.values(), key=lambda vs: vs[0])
    atoms = [Atom(0, tuple(root_vertices), True)]
    for verts in atom_vertex_lists:
        atoms.append(Atom(len(atoms), tuple(sorted(verts)), False))
    for a in atoms:
        a.x_delta = x_delta_of_vertex_set(support, a.vertices)
    comp.atoms = atoms
    comp.root_atom = 0

    vert_to_atom = {}
    for a in atoms:
        for v in a.vertices:
            vert_to_atom[v] = a.index
    masks = []
    for c in comp.cuts:
        amask = 0
        side = set(c.vertices)
        for a in atoms:
            inter = sum(1 for v in a.vertices if v in side)
            if inter == len(a.vertices):
                amask |= 1 << a.index
            elif inter != 0:
                raise StructureViolation(
                    f"cut {c.vertices} is not a union of atoms (atom {a.vertices})"
                )
        masks.append(amask)
    comp.cut_atom_masks = masks
    comp.crossing_adj = [
        [j for j in range(len(comp.cuts)) if j != i
         and crosses(comp.cuts[i].bits, comp.cuts[j].bits)]
        for i in range(len(comp.cuts))
    ]


def _kcycle_search(comp: CrossingComponent, avoid_atom: int,
                   max_nodes: int = 400000):
    """Shortest k-cycle of component cuts avoiding `avoid_atom`.

    Sides may be either the stored side or its complement (as atom sets).
    Returns list of (cut_index, side_mask) or None.  The search carries a
    node budget; a budget exhaustion counts as no witness, which the
    arrangement cross-validation then double-checks.
    """
    universe = (1 << len(comp.atoms)) - 1
    candidates = []
    for i, amask in enumerate(comp.cut_atom_masks):
        for side in (amask, universe & ~amask):
            if not side >> avoid_atom & 1:
                candidates.append((i, side))
    candidates.sort()
    n_c = len(candidates)
    # pairwise relations, precomputed once
    cross = [0] * n_c
    disjoint = [0] * n_c
    for a in range(n_c):
        for b in range(n_c):
            if a == b or candidates[a][0] == candidates[b][0]:
                continue
            sa, sb = candidates[a][1], candidates[b][1]
            if crosses_general(sa, sb, universe):
                cross[a] |= 1 << b
            if not sa & sb:
                disjoint[a] |= 1 << b
    budget = [max_nodes]

    def extend(path, used_cut_mask, limit):
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        last = path[-1]
        first = path[0]
        if len(path) >= 3 and cross[last] >> first & 1:
            sides = [candidates[i] for i in path]
            union = 0
            for _, s in sides:
                union |= s
            if union != universe and _kcycle_valid(sides, universe):
                return sides
        if len(path) == limit:
            return None
        allowed = cross[last]
        for nxt in _bits(allowed):
            ci = candidates[nxt][0]
            if used_cut_mask >> ci & 1:
                continue
            ok = True
            for mid in path[1:-1]:
                if not disjoint[nxt] >> mid & 1:
                    ok = False
                    break
            if not ok:
                continue
            if len(path) >= 2 and not (disjoint[nxt] >> first & 1
                                       or cross[nxt] >> first & 1):
                continue
            path.append(nxt)
            found = extend(path, used_cut_mask | 1 << ci, limit)
            if found:
                return found
            path.pop()
        return None

    bound = min(len(comp.cuts), 2 * len(comp.atoms) + 2)
    for limit in range(3, bound + 1):
        if budget[0] <= 0:
            break
        for start in range(n_c):
            found = extend([start], 1 << candidates[start][0], limit)
            if found:
                return found
    return None


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _kcycle_valid(path, universe) -> bool:
    k = len(path)
    sides = [s for _, s in path]
    for i in range(k):
        for j in range(i + 1, k):
            adjacent = (j == i + 1) or (i == 0 and j == k - 1)
            if adjacent:
                if not crosses_general(sides[i], sides[j], universe):
                    return False
            else:
                if sides[i] & sides[j]:
                    return False
    if k == 3:
        for i in range(3):
            inter = sides[i] & sides[(i + 1) % 3]
            if inter & ~sides[(i - 1) % 3] == 0:
                return False
    return True


def _find_circular_order(constraint_sets, atoms_outside):
    """Backtracking circular-ones search.

    `constraint_sets` are sets of outside-atom local indices; each must
    land on a contiguous proper arc with at least 2 members, and all
    projections must be distinct.  Returns a tuple of local indices or
    None.
    """
    m = len(atoms_outside)
    csets = [frozenset(c) for c in constraint_sets]
    for c in csets:
        if not 2 <= len(c) <= m - 1:
            return None
    if len(set(csets)) != len(csets):
        return None
    if m <= 2:
        return tuple(range(m)) if not csets else None

    order = [0]
    used = {0}

    def runs_ok(cset):
        placed = [i for i, a in enumerate(order) if a in cset]
        if not placed:
            return True
        runs = 1
        for prev, cur in zip(placed, placed[1:]):
            if cur != prev + 1:
                runs += 1
        if runs == 1:
            return True
        if runs == 2:
            return placed[0] == 0 and placed[-1] == len(order) - 1
        return False

    def feasible_partial():
        return all(runs_ok(c) for c in csets)

    def complete_ok():
        positions = {a: i for i, a in enumerate(order)}
        for c in csets:
            pos = sorted(positions[a] for a in c)
            arcs = []
            run = [pos[0]]
            for p in pos[1:]:
                if p == run[-1] + 1:
                    run.append(p)
                else:
                    arcs.append(run)
                    run = [p]
            arcs.append(run)
            if len(arcs) == 1:
                continue
            if len(arcs) == 2 and arcs[0][0] == 0 and arcs[-1][-1] == m - 1:
                continue
            return False
        return True

    def backtrack():
        if len(order) == m:
            return complete_ok()
        for a in range(1, m):
            if a in used:
                continue
            order.append(a)
            used.add(a)
            if feasible_partial() and backtrack():
                return True
            used.discard(a)
            order.pop()
        return False

    if backtrack():
        return tuple(order)
    return None


def arrange_polygon(support: SupportGraph, comp: CrossingComponent) -> CrossingComponent:
    """Inside/outside flags plus canonical circular order of outside atoms."""
    if comp.singleton:
        raise ValueError("arrangement applies to non-singleton components")
    atom_count = len(comp.atoms)
    witnesses = {}
    inside = []
    for a in range(atom_count):
        found = _kcycle_search(comp, a)
        if found:
            inside.append(a)
            witnesses[a] = [
                (ci, tuple(sorted(
                    v for atom in comp.atoms if found_side >> atom.index & 1
                    for v in atom.vertices)))
                for ci, found_side in found
            ]
    outside = [a for a in range(atom_count) if a not in inside]

    local = {a: i for i, a in enumerate(outside)}
    constraints = [
        {local[a] for a in outside if comp.cut_atom_masks[ci] >> a & 1}
        for ci in range(len(comp.cuts))
    ]
    solution = _find_circular_order(constraints, outside)
    if solution is None:
        raise NoArrangement(
            f"no circular-ones arrangement for component with cuts "
            f"{[c.vertices for c in comp.cuts]}; outside candidates {outside}"
        )
    # maximality cross-validation: no inside atom can be added back
    for a in inside:
        bigger = outside + [a]
        local_b = {atom: i for i, atom in enumerate(bigger)}
        constraints_b = [
            {local_b[x] for x in bigger if comp.cut_atom_masks[ci] >> x & 1}
            for ci in range(len(comp.cuts))
        ]
        if _find_circular_order(constraints_b, bigger) is not None:
            raise StructureViolation(
                f"atom {comp.atoms[a].vertices} has a k-cycle witness yet "
                "admits an outside arrangement; inside/outside discrepancy"
            )

    ordered = [outside[i] for i in solution]
    ordered = _canonicalize_order(comp, ordered)
    comp.outside_order = ordered
    comp.inside_atoms = sorted(inside)
    comp.kcycle_witnesses = witnesses
    comp.projections = []
    position = {a: i for i, a in enumerate(ordered)}
    m = len(ordered)
    for ci in range(len(comp.cuts)):
        proj = sorted(position[a] for a in ordered if comp.cut_atom_masks[ci] >> a & 1)
        start = next(p for p in proj if (p - 1) % m not in proj)
        comp.projections.append((start, (start + len(proj) - 1) % m))
    _validate_arrangement(comp)
    return comp


def _canonicalize_order(comp: CrossingComponent, ordered):
    def atom_key(a):
        return comp.atoms[a].vertices

    m = len(ordered)
    candidates = []
    if comp.root_atom in ordered:
        r = ordered.index(comp.root_atom)
        rot = ordered[r:] + ordered[:r]
        candidates = [rot, [rot[0]] + rot[1:][::-1]]
    else:
        for direction in (ordered, ordered[::-1]):
            for shift in range(m):
                candidates.append(direction[shift:] + direction[:shift])
    return list(min(candidates, key=lambda o: [atom_key(a) for a in o]))


def _validate_arrangement(comp: CrossingComponent):
    m = comp.m_outside
    seen = set()
    for ci, cut in enumerate(comp.cuts):
        proj = frozenset(
            a for a in comp.outside_order if comp.cut_atom_masks[ci] >> a & 1
        )
        if len(proj) < 2:
            raise StructureViolation(f"cut {cut.vertices} has < 2 outside atoms")
        if len(proj) >= m:
            raise StructureViolation(f"cut {cut.vertices} covers all outside atoms")
        if proj in seen:
            raise StructureViolation(f"duplicate outside projection at {cut.vertices}")
        seen.add(proj)
        start, end = comp.projections[ci]
        size = (end - start) % m + 1
        arc = {comp.outside_order[(start + k) % m] for k in range(size)}
        if arc != set(proj):
            raise StructureViolation(f"projection of {cut.vertices} not contiguous")


def projection_mask(comp: CrossingComponent, atom_mask: int) -> frozenset:
    return frozenset(a for a in comp.outside_order if atom_mask >> a & 1)


def is_contiguous_arc(comp: CrossingComponent, atoms_set) -> bool:
    m = comp.m_outside
    position = {a: i for i, a in enumerate(comp.outside_order)}
    pos = sorted(position[a] for a in atoms_set)
    if not pos:
        return False
    if len(pos) == m:
        return True
    run_breaks = sum(1 for p, q in zip(pos, pos[1:]) if q != p + 1)
    if run_breaks == 0:
        return True
    if run_breaks == 1:
        return pos[0] == 0 and pos[-1] == m - 1
    return False


def leftmost_outside_atom(comp: CrossingComponent, atoms_set):
    """Start of the contiguous proper arc formed by `atoms_set` (atom ids)."""
    m = comp.m_outside
    position = {a: i for i, a in enumerate(comp.outside_order)}
    pos = {position[a] for a in atoms_set}
    if len(pos) >= m:
        raise StructureViolation("arc covers all outside atoms; no leftmost")
    starts = [p for p in pos if (p - 1) % m not in pos]
    if len(starts) != 1:
        raise StructureViolation(f"arc {sorted(atoms_set)} is not contiguous")
    return comp.outside_order[starts[0]]


def crossing_side(comp: CrossingComponent, s_other: int, s_base: int) -> str:
    """Does side `s_other` cross `s_base` on the 'left' or the 'right'?

    Both arguments are atom masks; the leftmost outside atom of the union
    decides (Def of left crossing).
    """
    union = s_other | s_base
    proj = [a for a in comp.outside_order if union >> a & 1]
    lm = leftmost_outside_atom(comp, proj)
    return "left" if s_other >> lm & 1 else "right"


def classify_cuts(atlas: CutAtlas) -> CutAtlas:
    """Tag cuts uncrossed / crossed-one-side / crossed-both-sides, build
    the one-side component list on N_{eta,<=1}, and attach C_plus."""
    tags = {}
    for comp in atlas.components:
        if comp.singleton:
            tags[comp.cuts[0].bits] = "uncrossed"
            continue
        for i, cut in enumerate(comp.cuts):
            sides = set()
            for j in comp.crossing_adj[i]:
                sides.add(crossing_side(comp, comp.cut_atom_masks[j],
                                        comp.cut_atom_masks[i]))
            if sides == {"left", "right"}:
                tags[cut.bits] = "crossed-both-sides"
            elif sides:
                tags[cut.bits] = "crossed-one-side"
            else:
                tags[cut.bits] = "uncrossed"
        _check_lemma_4_12(comp, tags)
    atlas.tags = tags

    sub = [c for c in atlas.cuts if tags[c.bits] != "crossed-both-sides"]
    oneside = build_components(atlas.support, sub)
    for comp in oneside:
        if not comp.singleton:
            arrange_polygon(atlas.support, comp)
            if comp.inside_atoms:
                raise StructureViolation(
                    "one-side component produced inside atoms: "
                    f"{[atlas_atoms(comp, a) for a in comp.inside_atoms]}"
                )
    atlas.oneside_components = oneside
    atlas.c_plus = []
    threshold = 2 + atlas.eta
    for comp in oneside:
        entries = []
        if not comp.singleton:
            for i in range(len(comp.cuts)):
                entries.append(("cut", i))
            for a in comp.outside_order:
                if a == comp.root_atom:
                    continue
                if comp.atoms[a].x_delta <= threshold:
                    entries.append(("atom", a))
        atlas.c_plus.append(entries)
    return atlas


def atlas_atoms(comp: CrossingComponent, a: int):
    return comp.atoms[a].vertices


def _check_lemma_4_12(comp: CrossingComponent, tags):
    """Both-sides iff two crossers A,B with (A\\S) ∩ (B\\S) = ∅."""
    for i, cut in enumerate(comp.cuts):
        s = cut.bits
        crossers = [comp.cuts[j].bits for j in comp.crossing_adj[i]]
        exists = False
        for a in range(len(crossers)):
            for b in range(a + 1, len(crossers)):
                if (crossers[a] & ~s) & (crossers[b] & ~s) == 0:
                    exists = True
                    break
            if exists:
                break
        both = tags[cut.bits] == "crossed-both-sides"
        if both != exists:
            raise StructureViolation(
                f"Lemma-4.12 cross-check failed at {cut.vertices}: "
                f"tag={tags[cut.bits]}, disjoint-crosser-pair={exists}"
            )


def build_atlas(support: SupportGraph, eta, closed_threshold: bool = False) -> CutAtlas:
    eta = to_fraction(eta)
    cuts = enumerate_near_min_cuts(support, eta, closed_threshold)
    atlas = CutAtlas(support=support, eta=eta, closed_threshold=closed_threshold,
                     cuts=cuts)
    atlas.components = build_components(support, cuts)
    for comp in atlas.components:
        if not comp.singleton:
            arrange_polygon(support, comp)
    classify_cuts(atlas)
    return atlas


def almost_diagonal(comp: CrossingComponent, support: SupportGraph,
                    atom_mask: int, eta: Fraction) -> bool:
    """2-eta near min, nonempty proper contiguous projection, root-free."""
    if atom_mask >> comp.root_atom & 1:
        return False
    atoms_set = [a for a in comp.outside_order if atom_mask >> a & 1]
    if not atoms_set or len(atoms_set) >= comp.m_outside:
        return False
    if not is_contiguous_arc(comp, atoms_set):
        return False
    verts = [v for atom in comp.atoms if atom_mask >> atom.index & 1
             for v in atom.vertices]
    return x_delta_of_vertex_set(support, verts) < 2 + 2 * eta


def chain_decomposition(comp: CrossingComponent, support: SupportGraph,
                        s_mask: int, side: str, eta: Fraction) -> list:
    """Cuts crossing S on `side`, ordered by containment of S-intersections.

    S is an atom mask (a cut of the component or an almost diagonal cut).
    Raises ChainViolation if the intersections fail to form a chain.
    """
    if not almost_diagonal(comp, support, s_mask, eta):
        raise ValueError("S is not an almost diagonal cut of this component")
    crossers = []
    universe = (1 << len(comp.atoms)) - 1
    for i in range(len(comp.cuts)):
        mask = comp.cut_atom_masks[i]
        if not crosses_general(mask, s_mask, universe):
            continue
        if crossing_side(comp, mask, s_mask) == side:
            crossers.append(i)

    def inter_vertices(i):
        inter = comp.cut_atom_masks[i] & s_mask
        return frozenset(
            v for atom in comp.atoms if inter >> atom.index & 1
            for v in atom.vertices
        )

    ordered = sorted(crossers, key=lambda i: (len(inter_vertices(i)),
                                              sorted(inter_vertices(i))))
    for a, b in zip(ordered, ordered[1:]):
        if not inter_vertices(a) <= inter_vertices(b):
            raise ChainViolation(
                f"intersections of {comp.cuts[a].vertices} and "
                f"{comp.cuts[b].vertices} with S are not nested"
            )
    return ordered


def boundary_edge_ids(support: SupportGraph, vertices) -> list:
    side = set(vertices)
    return [e.id for e in support.edges if (e.u in side) != (e.v in side)]


def edges_between(support: SupportGraph, left, right) -> list:
    a, b = set(left), set(right)
    assert not a & b, "edge set between overlapping vertex groups"
    return [e.id for e in support.edges
            if (e.u in a and e.v in b) or (e.u in b and e.v in a)]


def uncrossing_report(atlas: CutAtlas) -> dict:
    """Candidate F-set decomposition: cycle-adjacent masses, laminar
    differences, and the slack-engine increase sets.  Report only."""
    support = atlas.support
    x = {e.id: e.x for e in support.edges}
    report = {"components": [], "laminar": [], "edge_membership": {}}

    def mass(ids):
        return sum((x[i] for i in ids), Fraction(0))

    membership: dict[int, int] = {}

    for comp in atlas.components:
        if comp.singleton:
            continue
        entry = {"atoms": [list(a.vertices) for a in comp.atoms],
                 "adjacent_masses": [], "increase_sets": []}
        order = comp.outside_order
        m = len(order)
        for i in range(m):
            a = comp.atoms[order[i]].vertices
            b = comp.atoms[order[(i + 1) % m]].vertices
            ids = edges_between(support, a, b)
            entry["adjacent_masses"].append({
                "pair": [list(a), list(b)], "x_mass": frac_str(mass(ids)),
                "edges": ids,
            })
        from .slack import build_point_contexts  # lazy: avoids import cycle
        try:
            contexts = build_point_contexts(atlas, comp)
        except Exception:
            contexts = []
        for ctx in contexts:
            for label, ids in (("right", ctx.increase_right), ("left", ctx.increase_left)):
                if ids is None:
                    continue
                entry["increase_sets"].append({
                    "point": ctx.point, "direction": label,
                    "x_mass": frac_str(mass(ids)), "edges": sorted(ids),
                })
                for eid in ids:
                    membership[eid] = membership.get(eid, 0) + 1
        report["components"].append(entry)

    # laminar difference sets F_A = delta(A) \ delta(B) over nested pairs
    uncrossed = [c for c in atlas.cuts if atlas.tags.get(c.bits) == "uncrossed"]
    for child in uncrossed:
        parents = [p for p in uncrossed
                   if p.bits != child.bits and child.bits & ~p.bits == 0]
        if not parents:
            continue
        parent = min(parents, key=lambda p: len(p.vertices))
        d_child = set(boundary_edge_ids(support, child.vertices))
        d_parent = set(boundary_edge_ids(support, parent.vertices))
        ids = sorted(d_child - d_parent)
        report["laminar"].append({
            "child": list(child.vertices), "parent": list(parent.vertices),
            "x_mass": frac_str(mass(ids)), "edges": ids,
        })
        for eid in ids:
            membership[eid] = membership.get(eid, 0) + 1
    report["edge_membership"] = {str(k): v for k, v in sorted(membership.items())}
    return report


def atlas_to_json_dict(atlas: CutAtlas) -> dict:
    def comp_dict(comp: CrossingComponent):
        return {
            "cuts": [
                {"vertices": list(c.vertices), "value": frac_str(c.value)}
                for c in comp.cuts
            ],
            "atoms": [
                {"vertices": list(a.vertices), "is_root": a.is_root,
                 "x_delta": frac_str(a.x_delta)}
                for a in comp.atoms
            ],
            "outside_order": list(comp.outside_order),
            "inside_atoms": list(comp.inside_atoms),
            "projections": [list(p) for p in comp.projections],
            "kcycle_witnesses": {
                str(a): [list(v) for _, v in w]
                for a, w in comp.kcycle_witnesses.items()
            },
        }

    return {
        "eta": frac_str(atlas.eta),
        "closed_threshold": atlas.closed_threshold,
        "support": atlas.support.to_json_dict(),
        "cuts": [
            {"vertices": list(c.vertices), "value": frac_str(c.value),
             "tag": atlas.tags.get(c.bits)}
            for c in atlas.cuts
        ],
        "components": [comp_dict(c) for c in atlas.components],
        "oneside_components": [comp_dict(c) for c in atlas.oneside_components],
    }


def dump_atlas(atlas: CutAtlas, path) -> None:
    Path(path).write_text(json.dumps(atlas_to_json_dict(atlas), indent=1) + "\n")
