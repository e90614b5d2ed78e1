"""Metric TSP instance ingestion and the node-split support graph.

Owns vertex/edge identity for the whole artifact.  Distances given as a
matrix are validated exactly on rationals (symmetry, zero diagonal,
triangle inequality); Euclidean distances are stored as doubles promoted
to exact dyadic rationals, with the triangle inequality holding by
construction (documented float caveat, not re-validated).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import InfeasibleInput, MetricViolation, ParseError
from .rationals import frac_str, to_fraction


@dataclass(frozen=True)
class Instance:
    """A metric TSP instance: n vertices with exact pairwise distances."""

    name: str
    n: int
    dist: tuple  # tuple of tuples of Fraction, full symmetric matrix
    points: tuple | None = None  # 2-D coordinates when Euclidean

    def d(self, u: int, v: int) -> Fraction:
        return self.dist[u][v]

    def validate(self, check_triangle: bool = True) -> None:
        if self.n < 3:
            raise MetricViolation(f"{self.name}: need n >= 3, got {self.n}")
        d = self.dist
        for u in range(self.n):
            if d[u][u] != 0:
                raise MetricViolation(f"{self.name}: d({u},{u}) != 0")
            for v in range(self.n):
                if d[u][v] < 0:
                    raise MetricViolation(f"{self.name}: d({u},{v}) < 0")
                if d[u][v] != d[v][u]:
                    raise MetricViolation(f"{self.name}: d({u},{v}) != d({v},{u})")
        if check_triangle:
            for u in range(self.n):
                for v in range(self.n):
                    for w in range(self.n):
                        if d[u][w] > d[u][v] + d[v][w]:
                            raise MetricViolation(
                                f"{self.name}: triangle fails at ({u},{v},{w})"
                            )


@dataclass(frozen=True)
class Edge:
    """One support edge; parallel edges are distinct ids."""

    id: int
    u: int
    v: int
    x: Fraction
    cost: Fraction

    def other(self, w: int) -> int:
        return self.v if w == self.u else self.u


@dataclass(frozen=True)
class SupportGraph:
    """Support of x^0 after node splitting: E_0 = E + {e_0}.

    `edges` excludes e_0 (the tree edges E); e_0 always joins u0,v0 with
    x = 1 and cost 0.  Vertices are 0..n_vertices-1.
    """

    name: str
    n_vertices: int
    u0: int
    v0: int
    edges: tuple  # tuple[Edge]
    pivot: int | None = None  # original instance vertex that was split
    meta: dict = field(default_factory=dict)

    @property
    def root_free_vertices(self) -> list[int]:
        return [v for v in range(self.n_vertices) if v not in (self.u0, self.v0)]

    def incident(self, v: int) -> list[Edge]:
        return [e for e in self.edges if v in (e.u, e.v)]

    def x_degree(self, v: int) -> Fraction:
        deg = sum((e.x for e in self.incident(v)), Fraction(0))
        if v in (self.u0, self.v0):
            deg += 1  # e_0
        return deg

    def cut_value(self, side: set[int]) -> Fraction:
        """x(delta(S)) over E only; exact.  e_0 never crosses a root-free S."""
        total = Fraction(0)
        for e in self.edges:
            if (e.u in side) != (e.v in side):
                total += e.x
        if (self.u0 in side) != (self.v0 in side):
            total += 1
        return total

    def validate(self) -> None:
        for v in range(self.n_vertices):
            if self.x_degree(v) != 2:
                raise InfeasibleInput(
                    f"{self.name}: x(delta({v})) = {self.x_degree(v)} != 2"
                )
        for e in self.edges:
            if not 0 < e.x <= 1:
                raise InfeasibleInput(f"{self.name}: edge {e.id} has x = {e.x}")

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "n_vertices": self.n_vertices,
            "u0": self.u0,
            "v0": self.v0,
            "pivot": self.pivot,
            "edges": [
                {"id": e.id, "u": e.u, "v": e.v, "x": frac_str(e.x), "cost": frac_str(e.cost)}
                for e in self.edges
            ],
            "meta": dict(self.meta),
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    @staticmethod
    def from_json_dict(data: dict) -> "SupportGraph":
        edges = tuple(
            Edge(e["id"], e["u"], e["v"], to_fraction(e["x"]), to_fraction(e["cost"]))
            for e in data["edges"]
        )
        return SupportGraph(
            name=data["name"],
            n_vertices=data["n_vertices"],
            u0=data["u0"],
            v0=data["v0"],
            edges=edges,
            pivot=data.get("pivot"),
            meta=data.get("meta", {}),
        )

    @staticmethod
    def load(path) -> "SupportGraph":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read support graph {path}: {exc}") from exc
        return SupportGraph.from_json_dict(data)


def _euclidean_instance(name: str, points) -> Instance:
    pts = tuple((float(x), float(y)) for x, y in points)
    n = len(pts)
    dist = []
    for u in range(n):
        row = []
        for v in range(n):
            if u == v:
                row.append(Fraction(0))
            else:
                row.append(Fraction(math.hypot(pts[u][0] - pts[v][0], pts[u][1] - pts[v][1])))
        dist.append(tuple(row))
    inst = Instance(name=name, n=n, dist=tuple(dist), points=pts)
    inst.validate(check_triangle=False)  # exact by construction up to double rounding
    return inst


def _matrix_instance(name: str, matrix) -> Instance:
    n = len(matrix)
    for row in matrix:
        if len(row) != n:
            raise ParseError(f"{name}: matrix is not square")
    dist = tuple(tuple(to_fraction(x) for x in row) for row in matrix)
    inst = Instance(name=name, n=n, dist=dist)
    inst.validate(check_triangle=True)
    return inst


def load_instance(path, fmt: str) -> Instance:
    """Load and validate an instance.

    Formats: 'tsplib-euc2d' (NODE_COORD_SECTION subset, distances NOT
    rounded to integers), 'json-matrix', 'json-points'.
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"no such file: {path}")
    if fmt == "tsplib-euc2d":
        return _load_tsplib(path)
    if fmt in ("json-matrix", "json-points"):
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc}") from exc
        name = data.get("name", path.stem)
        if fmt == "json-matrix":
            if "matrix" not in data:
                raise ParseError(f"{path}: missing 'matrix'")
            return _matrix_instance(name, data["matrix"])
        if "points" not in data:
            raise ParseError(f"{path}: missing 'points'")
        return _euclidean_instance(name, data["points"])
    raise ParseError(f"unknown format {fmt!r}")


def instance_from_points(name: str, points) -> Instance:
    return _euclidean_instance(name, points)


def instance_from_matrix(name: str, matrix) -> Instance:
    return _matrix_instance(name, matrix)


def _load_tsplib(path: Path) -> Instance:
    name = path.stem
    coords = {}
    in_section = False
    edge_weight_type = None
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("NAME"):
            name = line.split(":", 1)[1].strip() if ":" in line else name
        elif upper.startswith("EDGE_WEIGHT_TYPE"):
            edge_weight_type = line.split(":", 1)[1].strip().upper()
        elif upper.startswith("NODE_COORD_SECTION"):
            in_section = True
        elif upper.startswith("EOF"):
            break
        elif in_section:
            parts = line.split()
            if len(parts) < 3:
                raise ParseError(f"{path}: bad coord line {line!r}")
            try:
                coords[int(parts[0])] = (float(parts[1]), float(parts[2]))
            except ValueError as exc:
                raise ParseError(f"{path}: bad coord line {line!r}") from exc
    if edge_weight_type not in (None, "EUC_2D"):
        raise ParseError(f"{path}: unsupported EDGE_WEIGHT_TYPE {edge_weight_type}")
    if not coords:
        raise ParseError(f"{path}: no NODE_COORD_SECTION entries")
    points = [coords[k] for k in sorted(coords)]
    return _euclidean_instance(name, points)


def random_euclidean_instance(name: str, n: int, rng, box: float = 1.0, grid: int = 10**6) -> Instance:
    """Random points snapped to a grid so coordinates are tame dyadics."""
    pts = []
    seen = set()
    while len(pts) < n:
        x = int(rng.integers(0, grid + 1)) * box / grid
        y = int(rng.integers(0, grid + 1)) * box / grid
        if (x, y) not in seen:
            seen.add((x, y))
            pts.append((x, y))
    return _euclidean_instance(name, pts)


def split_node(instance: Instance, x0: dict, pivot: int | None = None) -> SupportGraph:
    """Turn an LP solution on `instance` into the rooted support graph.

    `x0` maps unordered original-vertex pairs (u, v), u < v, to Fraction
    values.  If some edge already has x = 1 and cost 0 it becomes e_0 and
    no split happens; otherwise the pivot (lowest-numbered vertex by
    default) is split into u0, v0 and every incident edge's mass is
    halved between them.
    """
    n = instance.n
    x0 = {tuple(sorted(k)): to_fraction(v) for k, v in x0.items() if to_fraction(v) != 0}
    # exact degree re-check
    for v in range(n):
        deg = sum((x for (a, b), x in x0.items() if v in (a, b)), Fraction(0))
        if deg != 2:
            raise InfeasibleInput(f"x0 degree at {v} is {deg} != 2")

    unit_zero = [
        (u, v) for (u, v), x in sorted(x0.items())
        if x == 1 and instance.d(u, v) == 0
    ]
    edges = []
    if unit_zero and pivot is None:
        u0, v0 = unit_zero[0]
        eid = 0
        for (u, v), x in sorted(x0.items()):
            if (u, v) == (u0, v0):
                continue
            edges.append(Edge(eid, u, v, x, instance.d(u, v)))
            eid += 1
        support = SupportGraph(
            name=instance.name, n_vertices=n, u0=u0, v0=v0,
            edges=tuple(edges), pivot=None,
        )
    else:
        p = pivot if pivot is not None else 0
        if not 0 <= p < n:
            raise InfeasibleInput(f"pivot {p} not a vertex")
        v0 = n  # new vertex id; u0 keeps the pivot id
        eid = 0
        for (u, v), x in sorted(x0.items()):
            if p in (u, v):
                w = v if u == p else u
                half = x / 2
                edges.append(Edge(eid, p, w, half, instance.d(u, v)))
                eid += 1
                edges.append(Edge(eid, v0, w, half, instance.d(u, v)))
                eid += 1
            else:
                edges.append(Edge(eid, u, v, x, instance.d(u, v)))
                eid += 1
        support = SupportGraph(
            name=instance.name, n_vertices=n + 1, u0=p, v0=v0,
            edges=tuple(edges), pivot=p,
        )
    support.validate()
    return support


def metric_with_root(instance: Instance, support: SupportGraph):
    """Distance function on support-graph vertices (u0, v0 map to the pivot)."""
    pivot = support.pivot

    def d(a: int, b: int) -> Fraction:
        if pivot is not None:
            a = pivot if a == support.v0 else a
            b = pivot if b == support.v0 else b
        if a == b:
            return Fraction(0)
        return instance.d(a, b)

    return d
