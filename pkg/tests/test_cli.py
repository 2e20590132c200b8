"""End-to-end pipeline runs over the bundled fixture via the CLI."""

from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

from conftest import PIPELINE_STAGES as STAGES, tree_digest
from icskg.cli import default_config_path, main


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Build
# ---------------------------------------------------------------------------

def test_build_counts_match_manifest(pipeline_out):
    summary = json.loads((pipeline_out / "graph-summary.json").read_text())
    manifest = json.loads(
        (default_config_path().parent / "manifest.json").read_text())
    assert summary["counts"] == manifest["counts"]
    assert summary["nodeTotal"] == manifest["nodeTotal"]
    assert summary["edgeTotal"] == manifest["edgeTotal"]
    assert summary["products"] == manifest["products"]
    assert summary["vulnerabilityLinks"] == manifest["vulnerabilityLinks"]
    assert summary["predictionsImported"] == manifest["predictionsImported"]


def test_build_missing_input_exits_2(tmp_path, capsys):
    config = {
        "paths": {
            "testbed": "missing-testbed.json",
            "advisories": "advisories.json",
            "nodes": "node.csv",
            "relations": "relation.csv",
            "scenarios": "scenarios.json",
            "riskConfig": "risk_config.json",
        },
        "seed": 1,
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    code = main(["--config", str(cfg_path), "--out", str(tmp_path / "out"), "build"])
    assert code == 2
    assert "missing-testbed.json" in capsys.readouterr().err


def test_build_validate_only_writes_nothing(tmp_path):
    out = tmp_path / "out"
    code = main(["--out", str(out), "build", "--validate-only"])
    assert code == 0
    assert not out.exists()


# ---------------------------------------------------------------------------
# Stage ordering
# ---------------------------------------------------------------------------

def test_stage_order_enforced(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out", str(out), "annotate"]) == 3
    assert main(["--out", str(out), "build"]) == 0
    assert main(["--out", str(out), "annotate"]) == 3  # logs still missing
    err = capsys.readouterr().err
    assert "synth-logs stage required" in err


def test_simulate_controlled_requires_controls(tmp_path, capsys):
    out = tmp_path / "out"
    for stage in ("build", "synth-logs", "annotate"):
        assert main(["--out", str(out), stage]) == 0
    code = main(["--out", str(out), "simulate", "--config", "Controlled"])
    assert code == 3
    assert "controls stage required" in capsys.readouterr().err


def test_simulate_original_only_needs_annotate(tmp_path):
    out = tmp_path / "out"
    for stage in ("build", "synth-logs", "annotate"):
        assert main(["--out", str(out), stage]) == 0
    assert main(["--out", str(out), "simulate", "--config", "Original"]) == 0
    rows = read_csv(out / "propagation" / "propagation.csv")
    assert rows and all(r["config"] == "Original" for r in rows)


def test_seed_mismatch_rejected(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--out", str(out), "build"]) == 0
    code = main(["--out", str(out), "--seed", "777", "synth-logs"])
    assert code == 2
    assert "differs" in capsys.readouterr().err


def test_rerunning_stage_invalidates_downstream(tmp_path):
    out = tmp_path / "out"
    for stage in ("build", "synth-logs", "annotate", "enrich", "controls"):
        assert main(["--out", str(out), stage]) == 0
    # re-running enrich drops the controls marker: its mirrors are stale
    assert main(["--out", str(out), "enrich"]) == 0
    state = json.loads((out / "state.json").read_text())
    assert state["stages"] == ["build", "synth-logs", "annotate", "enrich"]
    assert main(["--out", str(out), "simulate", "--config", "Controlled"]) == 3


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def test_report_schemas(pipeline_out):
    propagation = read_csv(pipeline_out / "propagation" / "propagation.csv")
    assert list(propagation[0].keys()) == [
        "scenario", "source", "target", "config",
        "avgHops", "minHops", "maxHops", "affected"]
    scenarios = {r["scenario"] for r in propagation}
    assert len(scenarios) == 15
    assert len(propagation) == 45  # 15 scenarios x 3 configurations

    interproduct = read_csv(pipeline_out / "reports" / "interproduct.csv")
    assert list(interproduct[0].keys()) == [
        "source", "target", "risk", "exploitProb", "attackCost"]

    centrality = read_csv(pipeline_out / "reports" / "centrality.csv")
    assert list(centrality[0].keys()) == [
        "node", "type", "pageRankBefore", "pageRankAfter", "deltaPageRank",
        "betweennessBefore", "betweennessAfter", "deltaBetweenness"]
    assert len(centrality) == 61

    communities = read_csv(pipeline_out / "reports" / "communities.csv")
    assert list(communities[0].keys()) == [
        "communityId", "size", "keyAssets", "risk", "cascade"]
    assert sum(int(r["size"]) for r in communities) == 61

    residual = read_csv(pipeline_out / "reports" / "residual.csv")
    assert list(residual[0].keys()) == [
        "product", "zone", "raw", "enriched", "after", "delta", "reductionPct"]
    assert len(residual) == 61


def test_report_top_n(tmp_path, pipeline_out):
    out = tmp_path / "copy"
    shutil.copytree(pipeline_out, out)
    code = main(["--out", str(out), "report", "--table", "interproduct",
                 "--top", "5"])
    assert code == 0
    rows = read_csv(out / "reports" / "interproduct.csv")
    assert len(rows) == 5
    risks = [float(r["risk"]) for r in rows]
    assert risks == sorted(risks, reverse=True)


def test_residual_controlled_not_above_enriched(pipeline_out):
    for row in read_csv(pipeline_out / "reports" / "residual.csv"):
        assert float(row["after"]) <= float(row["enriched"]) + 1e-9


def test_enriched_never_lengthens_fixture_distances(pipeline_out):
    from icskg.graph import Configuration
    from icskg.ingest import load_state

    graph = load_state(pipeline_out / "graph")
    graph.finalize()
    original = graph.project_view(Configuration.ORIGINAL)
    enriched = graph.project_view(Configuration.ENRICHED)

    def distances(view, src):
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for node in frontier:
                for nbr, _ in view.neighbors(node):
                    if nbr not in dist:
                        dist[nbr] = dist[node] + 1
                        nxt.append(nbr)
            frontier = nxt
        return dist

    for src in original.nodes():
        base = distances(original, src)
        rich = distances(enriched, src)
        for dst, hops in base.items():
            assert rich[dst] <= hops


def test_controls_report_contents(pipeline_out):
    report = json.loads((pipeline_out / "controls-report.json").read_text())
    assert report["edgesRecomputed"] > 0
    assert 0 < report["edgesPruned"] <= report["edgesRecomputed"]
    assert report["profile"] == "secured"


def test_export_artifacts(pipeline_out):
    export_dir = pipeline_out / "export" / "original"
    dot = (export_dir / "graph.dot").read_text()
    assert dot.count("->") == 101  # observed dataflow edges
    assert (export_dir / "graph.graphml").exists()
    edges = read_csv(export_dir / "edges.csv")
    assert len(edges) == 101
    assert list(edges[0].keys()) == ["src", "dst", "kind", "riskWeight",
                                     "pExploit", "attackCost",
                                     "controlStrength", "protocol"]
    nodes = read_csv(export_dir / "nodes.csv")
    assert len(nodes) == 233


def test_state_tracks_stages(pipeline_out):
    state = json.loads((pipeline_out / "state.json").read_text())
    assert state["stages"] == STAGES
    assert state["seed"] == 42
    assert state["convention"] == "complement"


# ---------------------------------------------------------------------------
# Determinism
# ---------------------------------------------------------------------------

def test_pipeline_deterministic(pipeline_out, pipeline_out_rerun):
    second, _ = pipeline_out_rerun
    assert tree_digest(second) == tree_digest(pipeline_out)
