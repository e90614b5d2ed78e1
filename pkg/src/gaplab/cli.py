"""gaplab command line: lp, tree, tour, cuts, slack, fixture, experiment, verify.

The pipeline passes files between stages: lp emits a solution JSON, tree
emits one sorted edge-id list per line, cuts emits the atlas JSON, slack
emits one audit record per tree.  Exit code is nonzero iff any asserted
invariant fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from .atlas import build_atlas, dump_atlas, uncrossing_report
from .errors import GaplabError
from .fixtures import fixture_kinds, generate_fixture
from .harness import (
    ExperimentConfig,
    fixture_experiment,
    run_experiment,
    tree_stream,
    verify_atlas_invariants,
)
from .instances import SupportGraph, load_instance, split_node
from .ojoin import match_odd_vertices
from .rationals import to_fraction
from .slack import (
    SlackStatistics,
    audit_tree,
    build_slack_structures,
    compute_sstar,
    tree_edge_mask,
)
from .subtour import LpSolution, solve_subtour_lp
from .trees import fit_lambda_support, sample_tree, tree_marginals


def _instance_from_args(args):
    fmt = args.format
    if fmt == "auto":
        fmt = "tsplib-euc2d" if str(args.instance).endswith(".tsp") else None
        if fmt is None:
            data = json.loads(Path(args.instance).read_text())
            fmt = "json-matrix" if "matrix" in data else "json-points"
    return load_instance(args.instance, fmt)


def _support_from_args(args):
    if getattr(args, "support", None):
        return None, SupportGraph.load(args.support)
    sol = LpSolution.load(args.lp)
    inst = _reconstruct_instance(sol)
    return inst, split_node(inst, sol.x)


def _reconstruct_instance(sol: LpSolution):
    """Metric closure over the LP support costs; used by tour/cuts stages."""
    from .instances import Instance

    n = sol.n
    big = sum(sol.cost.values(), Fraction(0)) + 1
    dist = [[big] * n for _ in range(n)]
    for v in range(n):
        dist[v][v] = Fraction(0)
    for (u, v), c in sol.cost.items():
        dist[u][v] = dist[v][u] = c
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i][k] + dist[k][j] < dist[i][j]:
                    dist[i][j] = dist[i][k] + dist[k][j]
    inst = Instance(name=sol.name, n=n, dist=tuple(tuple(r) for r in dist))
    inst.validate(check_triangle=True)
    return inst


def cmd_lp(args):
    inst = _instance_from_args(args)
    sol = solve_subtour_lp(inst, max_cuts=args.max_cuts)
    sol.dump(args.out)
    print(f"objective = {sol.objective} ({float(sol.objective):.6f}), "
          f"support = {len(sol.x)} edges, binding cuts = {len(sol.binding_cuts)}")
    return 0


def cmd_tree(args):
    _, support = _support_from_args(args)
    lam = fit_lambda_support(support, eps_fit=args.fit_eps)
    margins = tree_marginals(lam)
    xs = {e.id: float(e.x) for e in support.edges}
    dev = max(abs(margins[i] - xs[i]) for i in margins)
    with open(args.out, "w") as fh:
        for draw in range(args.samples):
            rng = tree_stream(args.seed, support.name, draw)
            tree = sample_tree(lam, rng, draw)
            fh.write(json.dumps(sorted(tree.edges)) + "\n")
    print(f"fitted lambda in {lam.iterations} iterations, "
          f"marginal deviation {dev:.3e}; wrote {args.samples} trees")
    return 0


def _read_trees(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def cmd_tour(args):
    sol = LpSolution.load(args.lp)
    inst = _reconstruct_instance(sol)
    support = split_node(inst, sol.x)
    cost = {e.id: e.cost for e in support.edges}
    c_x = sum((e.x * e.cost for e in support.edges), Fraction(0))
    trees = _read_trees(args.trees)
    rows = []
    for draw, edges in enumerate(trees):
        t_cost = sum((cost[eid] for eid in edges), Fraction(0))
        pairs, m_cost = match_odd_vertices(inst, support, edges)
        total = t_cost + m_cost
        rows.append([draw, float(t_cost), float(m_cost), float(total),
                     float(total / c_x)])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", "tree_cost", "matching_cost", "total",
                         "total_over_cx"])
        for row in rows:
            writer.writerow([row[0]] + [f"{v:.12g}" for v in row[1:]])
    mean_ratio = sum(r[4] for r in rows) / len(rows)
    print(f"c(x) = {float(c_x):.6f}; mean total/c(x) = {mean_ratio:.6f} "
          f"over {len(rows)} trees")
    return 0


def cmd_cuts(args):
    _, support = _support_from_args(args)
    atlas = build_atlas(support, to_fraction(args.eta),
                        closed_threshold=args.closed_threshold)
    dump_atlas(atlas, args.out)
    nonsing = [c for c in atlas.components if not c.singleton]
    tags = {}
    for c in atlas.cuts:
        tags[atlas.tags[c.bits]] = tags.get(atlas.tags[c.bits], 0) + 1
    print(f"{len(atlas.cuts)} near-min cuts, {len(nonsing)} non-singleton "
          f"components, tags: {tags}")
    if args.report:
        Path(args.report).write_text(
            json.dumps(uncrossing_report(atlas), indent=1, default=str) + "\n")
    return 0


def cmd_slack(args):
    _, support = _support_from_args(args)
    atlas = build_atlas(support, to_fraction(args.eta))
    beta = None if args.beta == "auto" else to_fraction(args.beta)
    structures = build_slack_structures(atlas, beta=beta,
                                        alpha_mode=args.alpha_mode)
    stats = SlackStatistics(structures)
    trees = _read_trees(args.trees)
    failures = 0
    with open(args.out, "w") as fh:
        for draw, edges in enumerate(trees):
            record = audit_tree(structures, edges, draw,
                                strict=not args.no_strict)
            failures += len(record["case3_failures"])
            failures += len(record["appendix_a_failures"])
            failures += len(record["lemma_5_3_failures"])
            mask = tree_edge_mask(edges)
            stats.observe(mask, compute_sstar(structures, mask))
            fh.write(json.dumps(record, default=str) + "\n")
    rows = stats.bound_rows()
    bad = [r for r in rows if not r["ok"]]
    print(f"audited {len(trees)} trees: deterministic failures = {failures}, "
          f"statistical rows = {len(rows)}, out of bound = {len(bad)}")
    for r in bad:
        print(f"  OUT-OF-BOUND {r['invariant']}: measured {r['measured']:.4f} "
              f"vs {r['bound']:.4f} (ci {r['ci']:.4f})")
    return 1 if failures else 0


def cmd_fixture(args):
    params = json.loads(args.params) if args.params else {}
    support = generate_fixture(args.kind, **params)
    support.dump(args.out)
    print(f"wrote {support.name}: {support.n_vertices} vertices, "
          f"{len(support.edges)} edges, golden = {support.meta.get('golden')}")
    return 0


def cmd_experiment(args):
    cfg = ExperimentConfig(
        instances=[(p, args.format) for p in args.instance],
        random_n=args.random_n,
        eta=to_fraction(args.eta),
        beta=args.beta,
        alpha_mode=args.alpha_mode,
        samples=args.samples,
        seed=args.seed,
        out_dir=args.out_dir,
        allow_large_eta=args.allow_large_eta,
    )
    result = run_experiment(cfg)
    print(json.dumps(result, indent=1))
    ok = not result["errors"] and all(
        inst["wolsey_ok"] and not inst["lemma_failures"]
        and inst["audit"].get("case3_failures", 0) == 0
        for inst in result["instances"]
    )
    return 0 if ok else 1


def cmd_verify(args):
    _, support = _support_from_args(args)
    eta = to_fraction(args.eta)
    atlas = build_atlas(support, eta)
    failures = verify_atlas_invariants(atlas)
    for f in failures:
        print(f"FAIL {f}")
    if args.audit:
        with open(args.audit) as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        for rec in records:
            for key in ("case3_failures", "lemma_5_3_failures",
                        "appendix_a_failures"):
                if rec.get(key):
                    failures.append(f"audit draw {rec['draw']}: {key} {rec[key]}")
    print(f"verify: {len(failures)} failures")
    return 1 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gaplab",
        description="metric-TSP integrality-gap laboratory",
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1,
                        help="reserved; instances run sequentially")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lp", help="solve the subtour elimination LP exactly")
    p.add_argument("--instance", required=True)
    p.add_argument("--format", default="auto",
                   choices=["auto", "tsplib-euc2d", "json-matrix", "json-points"])
    p.add_argument("--out", required=True)
    p.add_argument("--max-cuts", type=int, default=400)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("tree", help="fit lambda and sample spanning trees")
    p.add_argument("--lp")
    p.add_argument("--support")
    p.add_argument("--fit-eps", type=float, default=1e-6)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("tour", help="match odd vertices and price the tours")
    p.add_argument("--lp", required=True)
    p.add_argument("--trees", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tour)

    p = sub.add_parser("cuts", help="enumerate near-min cuts and build the atlas")
    p.add_argument("--lp")
    p.add_argument("--support")
    p.add_argument("--eta", default="1/20")
    p.add_argument("--closed-threshold", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="also emit the uncrossing report JSON")
    p.set_defaults(func=cmd_cuts)

    p = sub.add_parser("slack", help="audit s* over sampled trees")
    p.add_argument("--lp")
    p.add_argument("--support")
    p.add_argument("--atlas", help="unused; atlas is rebuilt from the support")
    p.add_argument("--trees", required=True)
    p.add_argument("--eta", default="1/20")
    p.add_argument("--beta", default="auto")
    p.add_argument("--alpha-mode", default="appendix-b",
                   choices=["appendix-b", "two-beta"])
    p.add_argument("--no-strict", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slack)

    p = sub.add_parser("fixture", help="emit a synthetic structure fixture")
    p.add_argument("--kind", required=True, choices=fixture_kinds())
    p.add_argument("--params", help="JSON dict of fixture parameters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("experiment", help="run the full pipeline on a batch")
    p.add_argument("--instance", action="append", default=[])
    p.add_argument("--format", default="auto")
    p.add_argument("--random-n", type=int, action="append", default=[],
                   dest="random_n")
    p.add_argument("--eta", default="1/20")
    p.add_argument("--beta", default="auto")
    p.add_argument("--alpha-mode", default="appendix-b",
                   choices=["appendix-b", "two-beta"])
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--allow-large-eta", action="store_true")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify", help="run the invariant suite on an atlas/audit")
    p.add_argument("--lp")
    p.add_argument("--support")
    p.add_argument("--eta", default="1/20")
    p.add_argument("--audit")
    p.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GaplabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
