import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from gaplab.atlas import build_atlas
from gaplab.errors import BadParams
from gaplab.fixtures import fixture_kinds, generate_fixture
from gaplab.harness import (
    ExperimentConfig,
    fixture_experiment,
    run_experiment,
    run_instance,
    verify_atlas_invariants,
)
from gaplab.instances import instance_from_matrix


def test_fixture_kinds_complete():
    assert fixture_kinds() == [
        "cycle", "eta-comb-fig8", "laminar", "long-edge-fig6",
        "one-side-polygon", "wheel-fig5",
    ]


def test_fixture_bad_params():
    with pytest.raises(BadParams):
        generate_fixture("cycle", n=3)
    with pytest.raises(BadParams):
        generate_fixture("nope")


@pytest.mark.parametrize("kind", ["cycle", "laminar", "one-side-polygon",
                                  "long-edge-fig6", "wheel-fig5"])
def test_fixture_golden_signatures(kind):
    support = generate_fixture(kind)
    eta = Fraction(support.meta["eta"])
    atlas = build_atlas(support, eta)
    golden = support.meta["golden"]
    nonsing = [c for c in atlas.components if not c.singleton]
    assert len(nonsing) == golden["nonsingleton_components"]
    if "cuts" in golden:
        assert len(atlas.cuts) == golden["cuts"]
    if nonsing:
        comp = nonsing[0]
        if "atoms" in golden:
            assert len(comp.atoms) == golden["atoms"]
        if "inside" in golden:
            assert len(comp.inside_atoms) == golden["inside"]
        if "outside" in golden:
            assert len(comp.outside_order) == golden["outside"]
        if "both_sides" in golden:
            both = [c for c in comp.cuts
                    if atlas.tags[c.bits] == "crossed-both-sides"]
            assert len(both) == golden["both_sides"]


def test_structural_suite_on_all_small_fixtures():
    for kind in ("cycle", "laminar", "one-side-polygon", "long-edge-fig6",
                 "wheel-fig5"):
        support = generate_fixture(kind)
        atlas = build_atlas(support, Fraction(support.meta["eta"]))
        assert verify_atlas_invariants(atlas) == []


def test_unit_triangle_ratio_exactly_one():
    inst = instance_from_matrix("tri", [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    cfg = ExperimentConfig(samples=100, seed=1)
    report = run_instance(inst, cfg, audits=False)
    # tree is a path, the matching closes it to the optimal cycle: the
    # shortcut tour costs exactly c(x) on every draw
    assert report.tour_ratio == 1.0
    assert report.ratio <= 1.5
    assert report.wolsey_ok


def test_experiment_batch_and_determinism(tmp_path):
    cfg = dict(random_n=[6], samples=40, seed=9, eta=Fraction(1, 20))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    res_a = run_experiment(ExperimentConfig(out_dir=str(out_a), **cfg))
    res_b = run_experiment(ExperimentConfig(out_dir=str(out_b), **cfg))
    assert res_a == res_b
    assert not res_a["errors"]
    for name in ("report.csv", "bounds.csv", "report.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
    assert "out of reach" in res_a["note"] or "astronomically" in res_a["note"]


def test_fixture_experiment_passes_bounds():
    cfg = ExperimentConfig(samples=400, seed=5)
    res = fixture_experiment("one-side-polygon", cfg)
    assert res["deterministic_failures"] == 0
    assert all(r["ok"] for r in res["bound_rows"])


def test_cli_pipeline_smoke(tmp_path):
    from gaplab.cli import main

    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({
        "name": "prism",
        "matrix": [
            [0, 2, 2, 1, 3, 3], [2, 0, 2, 3, 1, 3], [2, 2, 0, 3, 3, 1],
            [1, 3, 3, 0, 2, 2], [3, 1, 3, 2, 0, 2], [3, 3, 1, 2, 2, 0],
        ],
    }))
    sol = tmp_path / "sol.json"
    trees = tmp_path / "trees.jsonl"
    tours = tmp_path / "tours.csv"
    atlas = tmp_path / "atlas.json"
    audit = tmp_path / "audit.jsonl"
    assert main(["lp", "--instance", str(inst), "--out", str(sol)]) == 0
    assert main(["tree", "--lp", str(sol), "--samples", "25",
                 "--out", str(trees)]) == 0
    assert len(trees.read_text().splitlines()) == 25
    assert main(["tour", "--lp", str(sol), "--trees", str(trees),
                 "--out", str(tours)]) == 0
    assert tours.read_text().startswith("draw,tree_cost,matching_cost")
    assert main(["cuts", "--lp", str(sol), "--eta", "1/20",
                 "--out", str(atlas)]) == 0
    assert main(["slack", "--lp", str(sol), "--trees", str(trees),
                 "--eta", "1/20", "--out", str(audit)]) == 0
    assert main(["verify", "--lp", str(sol), "--eta", "1/20",
                 "--audit", str(audit)]) == 0
    # fixture path: emit a support graph and run cuts on it directly
    wheel = tmp_path / "wheel.json"
    watlas = tmp_path / "watlas.json"
    assert main(["fixture", "--kind", "wheel-fig5", "--out", str(wheel)]) == 0
    assert main(["cuts", "--support", str(wheel), "--eta", "13/50",
                 "--out", str(watlas)]) == 0


def test_cli_tree_determinism(tmp_path):
    from gaplab.cli import main

    support = generate_fixture("one-side-polygon")
    sup_path = tmp_path / "sup.json"
    support.dump(sup_path)
    t1 = tmp_path / "t1.jsonl"
    t2 = tmp_path / "t2.jsonl"
    assert main(["--seed", "3", "tree", "--support", str(sup_path),
                 "--samples", "30", "--out", str(t1)]) == 0
    assert main(["--seed", "3", "tree", "--support", str(sup_path),
                 "--samples", "30", "--out", str(t2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()
