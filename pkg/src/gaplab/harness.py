"""Experiment orchestration: pipeline runs, aggregation, reports.

Determinism contract: identical config + seed produce byte-identical
CSV/JSONL outputs.  Randomness uses counter-based streams: the
per-instance stream is seeded by (seed, sha256(instance name)) and the
per-tree stream by (instance stream, draw index).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .atlas import build_atlas, x_delta_of_vertex_set
from .errors import GaplabError
from .fixtures import generate_fixture
from .instances import (
    Instance,
    SupportGraph,
    load_instance,
    metric_with_root,
    random_euclidean_instance,
    split_node,
)
from .ojoin import euler_shortcut_tour, match_odd_vertices, odd_vertices
from .rationals import to_fraction
from .slack import (
    SlackStatistics,
    audit_tree,
    build_slack_structures,
    compute_sstar,
    tree_edge_mask,
    wilson_halfwidth,
)
from .subtour import LpSolution, solve_subtour_lp, verify_termination_certificate
from .trees import fit_lambda_support, sample_tree, tree_marginals


def instance_stream(seed: int, name: str) -> np.random.Generator:
    digest = hashlib.sha256(name.encode()).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([seed, key]))


def tree_stream(seed: int, name: str, draw: int) -> np.random.Generator:
    digest = hashlib.sha256(name.encode()).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([seed, key, draw]))


@dataclass
class ExperimentConfig:
    """One batch: explicit instances and/or a random-Euclidean generator."""

    instances: list = field(default_factory=list)  # (path, format) pairs
    random_n: list = field(default_factory=list)  # vertex counts to generate
    eta: Fraction = Fraction(1, 20)
    beta: Fraction | str = "auto"
    alpha_mode: str = "appendix-b"
    samples: int = 1000
    seed: int = 0
    out_dir: str | None = None
    fit_eps: float = 1e-6
    allow_large_eta: bool = False

    def validate(self):
        if self.samples < 1:
            raise GaplabError("samples must be >= 1")
        eta = to_fraction(self.eta)
        if not self.allow_large_eta and not 0 < eta <= Fraction(1, 10):
            raise GaplabError(
                f"eta = {eta} outside (0, 1/10]; pass allow_large_eta to override"
            )


@dataclass
class InstanceReport:
    name: str
    n: int
    c_x: Fraction
    mean_tree_cost: float
    mean_match_cost: float
    mean_total: float
    ratio: float  # mean (tree + matching) / c(x)
    ratio_stderr: float
    tree_cost_stderr: float
    mean_tour_cost: float  # after Eulerian shortcutting
    tour_ratio: float
    wolsey_ok: bool
    marginal_dev: float
    lemma_rows: list = field(default_factory=list)
    audit_summary: dict = field(default_factory=dict)
    wall_time: float = 0.0


def run_instance(instance: Instance, cfg: ExperimentConfig,
                 audits: bool = True, collect=None) -> InstanceReport:
    """Full pipeline on one instance: LP, fit, samples, matchings, audits."""
    t_start = time.time()
    sol = solve_subtour_lp(instance)
    assert verify_termination_certificate(sol)
    support = split_node(instance, sol.x)
    lam = fit_lambda_support(support, eps_fit=cfg.fit_eps)
    margins = tree_marginals(lam)
    xs = {e.id: float(e.x) for e in support.edges}
    marginal_dev = max(abs(margins[i] - xs[i]) for i in margins)

    eta = to_fraction(cfg.eta)
    structures = None
    stats = None
    if audits:
        atlas = build_atlas(support, eta)
        beta = None if cfg.beta == "auto" else to_fraction(cfg.beta)
        structures = build_slack_structures(atlas, beta=beta,
                                            alpha_mode=cfg.alpha_mode)
        stats = SlackStatistics(structures)

    cost = {e.id: e.cost for e in support.edges}
    c_x = sum((e.x * e.cost for e in support.edges), Fraction(0))
    half_cx = c_x / 2
    tree_costs = []
    match_costs = []
    tour_costs = []
    wolsey_ok = True
    audit_records = []
    for draw in range(cfg.samples):
        rng = tree_stream(cfg.seed, instance.name, draw)
        tree = sample_tree(lam, rng, draw, seed_info=(cfg.seed, instance.name))
        t_cost = sum((cost[eid] for eid in tree.edges), Fraction(0))
        pairs, m_cost = match_odd_vertices(instance, support, tree.edges)
        if m_cost > half_cx + Fraction(1, 10**9):
            wolsey_ok = False
        _, tour_cost = euler_shortcut_tour(instance, support, tree.edges, pairs)
        tree_costs.append(float(t_cost))
        match_costs.append(float(m_cost))
        tour_costs.append(float(tour_cost))
        if structures is not None:
            record = audit_tree(structures, tree.edges, draw)
            mask = tree_edge_mask(tree.edges)
            stats.observe(mask, compute_sstar(structures, mask))
            audit_records.append(record)
        if collect is not None:
            collect(draw, tree, pairs, m_cost)

    n_s = len(tree_costs)
    tree_arr = np.array(tree_costs)
    match_arr = np.array(match_costs)
    tour_arr = np.array(tour_costs)
    total_arr = tree_arr + match_arr
    cxf = float(c_x)
    report = InstanceReport(
        name=instance.name,
        n=instance.n,
        c_x=c_x,
        mean_tree_cost=float(tree_arr.mean()),
        mean_match_cost=float(match_arr.mean()),
        mean_total=float(total_arr.mean()),
        ratio=float(total_arr.mean()) / cxf,
        ratio_stderr=float(total_arr.std(ddof=1) / math.sqrt(n_s) / cxf) if n_s > 1 else 0.0,
        tree_cost_stderr=float(tree_arr.std(ddof=1) / math.sqrt(n_s)) if n_s > 1 else 0.0,
        mean_tour_cost=float(tour_arr.mean()),
        tour_ratio=float(tour_arr.mean()) / cxf,
        wolsey_ok=wolsey_ok,
        marginal_dev=marginal_dev,
        wall_time=time.time() - t_start,
    )
    if stats is not None:
        report.lemma_rows = stats.bound_rows()
        report.audit_summary = summarize_audits(audit_records)
    return report


def summarize_audits(records) -> dict:
    total = len(records)
    case2_checked = sum(len(r["case2"]) for r in records)
    case2_ok = sum(
        1 for r in records for c in r["case2"] if c["ok_with_worst_case_payment"]
    )
    return {
        "trees": total,
        "case1_identity": all(r["case1_identity"] for r in records) if records else True,
        "case3_failures": sum(len(r["case3_failures"]) for r in records),
        "lemma_5_3_failures": sum(len(r["lemma_5_3_failures"]) for r in records),
        "appendix_a_failures": sum(len(r["appendix_a_failures"]) for r in records),
        "case2_checked": case2_checked,
        "case2_pass_rate": (case2_ok / case2_checked) if case2_checked else None,
    }


OUT_OF_REACH_NOTE = (
    "note: the analysis-grade constants (epsilon > 1e-36, eta = 4.16e-19, "
    "eps_P = 3.12e-16) are documentation-only; the gap improvement they "
    "certify is astronomically below sampling noise at desk scale, so this "
    "report prints measured margins instead of attempting to detect it"
)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the batch and emit CSV/JSONL reports; deterministic given seed."""
    cfg.validate()
    instances = []
    for path, fmt in cfg.instances:
        instances.append(load_instance(path, fmt))
    for i, n in enumerate(cfg.random_n):
        rng = instance_stream(cfg.seed, f"random-{i}-n{n}")
        instances.append(random_euclidean_instance(f"random-{i}-n{n}", n, rng))

    reports = []
    errors = {}
    for inst in instances:
        try:
            reports.append(run_instance(inst, cfg))
        except GaplabError as exc:  # collected, batch keeps going
            errors[inst.name] = f"{type(exc).__name__}: {exc}"

    result = {
        "config": {
            "eta": str(to_fraction(cfg.eta)),
            "beta": str(cfg.beta),
            "alpha_mode": cfg.alpha_mode,
            "samples": cfg.samples,
            "seed": cfg.seed,
        },
        "note": OUT_OF_REACH_NOTE,
        "instances": [
            {
                "name": r.name, "n": r.n, "c_x": str(r.c_x),
                "mean_tree_cost": f"{r.mean_tree_cost:.12g}",
                "mean_match_cost": f"{r.mean_match_cost:.12g}",
                "ratio": f"{r.ratio:.12g}",
                "ratio_stderr": f"{r.ratio_stderr:.12g}",
                "tour_ratio": f"{r.tour_ratio:.12g}",
                "wolsey_ok": r.wolsey_ok,
                "marginal_dev": f"{r.marginal_dev:.3e}",
                "lemma_failures": [row for row in r.lemma_rows if not row["ok"]],
                "audit": r.audit_summary,
            }
            for r in reports
        ],
        "errors": errors,
    }
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "report.csv", reports)
        _write_bounds(out / "bounds.csv", reports)
        # timings are intentionally outside the byte-identical guarantee
        with open(out / "timings.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance", "wall_time_s"])
            for r in reports:
                writer.writerow([r.name, f"{r.wall_time:.2f}"])
        (out / "report.json").write_text(json.dumps(result, indent=1) + "\n")
    return result


def _write_csv(path, reports):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "instance", "n", "c_x", "mean_tree_cost", "mean_match_cost",
            "mean_total", "ratio", "ratio_stderr", "mean_tour_cost",
            "tour_ratio", "wolsey_ok", "marginal_dev",
        ])
        for r in reports:
            writer.writerow([
                r.name, r.n, f"{float(r.c_x):.12g}",
                f"{r.mean_tree_cost:.12g}", f"{r.mean_match_cost:.12g}",
                f"{r.mean_total:.12g}", f"{r.ratio:.12g}",
                f"{r.ratio_stderr:.12g}", f"{r.mean_tour_cost:.12g}",
                f"{r.tour_ratio:.12g}", int(r.wolsey_ok),
                f"{r.marginal_dev:.3e}",
            ])


def _write_bounds(path, reports):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "invariant", "paper_bound", "measured",
                         "ci", "n", "direction", "verdict"])
        for r in reports:
            for row in r.lemma_rows:
                writer.writerow([
                    r.name, row["invariant"], f"{row['bound']:.6g}",
                    f"{row['measured']:.6g}", f"{row['ci']:.6g}", row["n"],
                    row["direction"], "pass" if row["ok"] else "FAIL",
                ])


def fixture_experiment(kind: str, cfg: ExperimentConfig, samples=None,
                       fixture_params=None) -> dict:
    """Structure-only pipeline on a synthetic fixture (no costs/matching)."""
    support = generate_fixture(kind, **(fixture_params or {}))
    eta = to_fraction(support.meta.get("eta", cfg.eta))
    atlas = build_atlas(support, eta)
    beta = None if cfg.beta == "auto" else to_fraction(cfg.beta)
    structures = build_slack_structures(atlas, beta=beta,
                                        alpha_mode=cfg.alpha_mode)
    stats = SlackStatistics(structures)
    lam = fit_lambda_support(support, eps_fit=cfg.fit_eps)
    n_samples = samples if samples is not None else cfg.samples
    strict = eta <= Fraction(1, 10)
    failures = 0
    for draw in range(n_samples):
        rng = tree_stream(cfg.seed, support.name, draw)
        tree = sample_tree(lam, rng, draw)
        record = audit_tree(structures, tree.edges, draw, strict=strict)
        failures += len(record["case3_failures"])
        failures += len(record["appendix_a_failures"])
        mask = tree_edge_mask(tree.edges)
        stats.observe(mask, compute_sstar(structures, mask))
    return {
        "fixture": support.name,
        "eta": str(eta),
        "samples": n_samples,
        "deterministic_failures": failures,
        "bound_rows": stats.bound_rows(),
        "golden": support.meta.get("golden", {}),
    }


def verify_atlas_invariants(atlas) -> list:
    """Deterministic structural lemma suite on a built atlas.

    Returns a list of failure strings; empty means every check passed.
    Covers the uncrossing arithmetic (2.7-2.10), atom-union membership
    (4.5), the crossing characterization (4.12, checked at build), the
    projection distinctness/contiguity (4.16/4.21, checked at build),
    the k-cycle length diagnostic (4.14) and per-edge polygon uniqueness
    (4.8).
    """
    from .atlas import crosses

    support = atlas.support
    failures = []
    cuts = atlas.cuts
    by_bits = {c.bits: c for c in cuts}
    two = Fraction(2)

    def value_of(vertices):
        return x_delta_of_vertex_set(support, vertices)

    rf = support.root_free_vertices
    pos = {v: i for i, v in enumerate(rf)}

    def verts_of(bits):
        return [rf[i] for i in range(len(rf)) if bits >> i & 1]

    for i in range(len(cuts)):
        for j in range(i + 1, len(cuts)):
            a, b = cuts[i], cuts[j]
            if not crosses(a.bits, b.bits):
                continue
            eps_ab = (a.value - 2) + (b.value - 2)
            for bits in (a.bits & b.bits, a.bits | b.bits,
                         a.bits & ~b.bits, b.bits & ~a.bits):
                val = value_of(verts_of(bits))
                if val > 2 + eps_ab:
                    failures.append(
                        f"lemma2.7: corner of {a.vertices}/{b.vertices} "
                        f"has value {val} > 2+eps_A+eps_B"
                    )
            # lemma 2.9: all four corner edge groups >= 1 - eps/2
            eps = max(a.value - 2, b.value - 2)
            quads = [
                (a.bits & b.bits, a.bits & ~b.bits),
                (a.bits & b.bits, b.bits & ~a.bits),
            ]
            full = (1 << len(rf)) - 1
            comp_bits = full & ~(a.bits | b.bits)
            quads += [(comp_bits, a.bits & ~b.bits), (comp_bits, b.bits & ~a.bits)]
            for left_bits, right_bits in quads:
                lv, rv = verts_of(left_bits), verts_of(right_bits)
                mass = _edge_mass_between(support, lv, rv, left_bits, comp_bits,
                                          atlas)
                if mass < 1 - eps / 2:
                    failures.append(
                        f"lemma2.9: corner mass {mass} < 1-eps/2 for "
                        f"{a.vertices}/{b.vertices}"
                    )
    # lemma 2.8 on disjoint pairs with union near-min
    for i in range(len(cuts)):
        for j in range(i + 1, len(cuts)):
            a, b = cuts[i], cuts[j]
            if a.bits & b.bits:
                continue
            union = a.bits | b.bits
            if union in by_bits:
                epsilon = by_bits[union].value - 2
                mass = _between_mass(support, a.vertices, b.vertices)
                if mass < 1 - epsilon / 2:
                    failures.append(
                        f"lemma2.8: E({a.vertices},{b.vertices}) mass {mass}"
                    )
    # lemma 2.10 on nested pairs
    for i in range(len(cuts)):
        for j in range(len(cuts)):
            a, b = cuts[i], cuts[j]
            if i == j or not (a.bits & ~b.bits) == 0 or a.bits == b.bits:
                continue
            eps = max(a.value - 2, b.value - 2)
            shared = _shared_boundary_mass(support, a.vertices, b.vertices)
            if shared > 1 + eps:
                failures.append(
                    f"lemma2.10: shared boundary of {a.vertices}<{b.vertices} "
                    f"is {shared} > 1+eps"
                )
            diff = set(b.vertices) - set(a.vertices)
            mass = _between_mass(support, a.vertices, diff)
            if mass < 1 - eps / 2:
                failures.append(
                    f"lemma2.10: E(A, B-A) mass {mass} for "
                    f"{a.vertices} < {b.vertices}"
                )
    # lemma 4.5: near-min unions of atoms appear in the component
    for comp in atlas.components:
        if comp.singleton:
            continue
        n_atoms = len(comp.atoms)
        comp_bits = set(comp.cut_atom_masks)
        threshold = 2 + atlas.eta
        for mask in range(1, 1 << n_atoms):
            if mask >> comp.root_atom & 1:
                continue
            size = bin(mask).count("1")
            if not 1 < size < n_atoms - 1:
                continue
            verts = [v for a in comp.atoms if mask >> a.index & 1
                     for v in a.vertices]
            val = value_of(verts)
            near = val <= threshold if atlas.closed_threshold else val < threshold
            if near and mask not in comp_bits:
                failures.append(
                    f"lemma4.5: near-min atom union {sorted(verts)} "
                    "missing from its component"
                )
        # lemma 4.14 diagnostic on stored witnesses
        for atom_id, witness in comp.kcycle_witnesses.items():
            k = len(witness)
            if Fraction(k) < 2 / atlas.eta:
                failures.append(
                    f"lemma4.14: k-cycle witness of length {k} < 2/eta"
                )
    # fact 4.8: per-edge at most one polygon with both endpoints non-root
    edge_comp_count = {}
    for ci, comp in enumerate(atlas.components):
        if comp.singleton:
            continue
        root_verts = set(comp.atoms[comp.root_atom].vertices)
        atom_of = {}
        for a in comp.atoms:
            for v in a.vertices:
                atom_of[v] = a.index
        for e in support.edges:
            if e.u in root_verts or e.v in root_verts:
                continue
            if atom_of[e.u] != atom_of[e.v]:
                edge_comp_count.setdefault(e.id, []).append(ci)
    for eid, comps in edge_comp_count.items():
        if len(comps) > 1:
            failures.append(f"fact4.8: edge {eid} internal to polygons {comps}")
    return failures


def _between_mass(support, left, right):
    a, b = set(left), set(right)
    return sum((e.x for e in support.edges
                if (e.u in a and e.v in b) or (e.u in b and e.v in a)),
               Fraction(0))


def _shared_boundary_mass(support, inner, outer):
    a, b = set(inner), set(outer)
    total = Fraction(0)
    for e in support.edges:
        in_a = (e.u in a) != (e.v in a)
        in_b = (e.u in b) != (e.v in b)
        if in_a and in_b:
            total += e.x
    if (support.u0 in a) != (support.v0 in a):
        total += 1  # e_0 cannot appear for root-free sides; defensive
    return total


def _edge_mass_between(support, left_verts, right_verts, left_bits, comp_bits,
                       atlas):
    if left_bits == comp_bits:
        # complement side includes u0, v0
        rf = set(atlas.support.root_free_vertices)
        left = (set(range(support.n_vertices)) - rf) | set(left_verts)
    else:
        left = set(left_verts)
    return _between_mass(support, left, right_verts)
