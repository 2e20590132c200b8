"""CSV/JSON serialization of the analysis reports.

Column orders are fixed and versioned; identical inputs always produce
byte-identical files (fixed float formatting, no timestamps).
"""

from __future__ import annotations

import csv
import json
from io import StringIO
from typing import Sequence

from icskg.analytics import CommunityReport
from icskg.scenarios import CentralityRow, PropagationReport, SuiteReport

SCHEMA_VERSION = "1"

PROPAGATION_COLUMNS = ["scenario", "source", "target", "config",
                       "avgHops", "minHops", "maxHops", "affected"]
INTERPRODUCT_COLUMNS = ["source", "target", "risk", "exploitProb", "attackCost"]
CENTRALITY_COLUMNS = ["node", "type", "pageRankBefore", "pageRankAfter",
                      "deltaPageRank", "betweennessBefore", "betweennessAfter",
                      "deltaBetweenness"]
COMMUNITY_COLUMNS = ["communityId", "size", "keyAssets", "risk", "cascade"]
RESIDUAL_COLUMNS = ["product", "zone", "raw", "enriched", "after",
                    "delta", "reductionPct"]


def _csv_bytes(columns: Sequence[str], rows: Sequence[Sequence]) -> bytes:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")


def _f(x: float, places: int = 6) -> str:
    return f"{x:.{places}f}"


def propagation_csv(rows: Sequence[PropagationReport]) -> bytes:
    return _csv_bytes(PROPAGATION_COLUMNS, [
        [r.scenario_id, r.source_label, r.target_label, r.config,
         _f(r.avg_hops, 4), r.min_hops, r.max_hops, r.affected]
        for r in rows])


def interproduct_csv(rows: Sequence[dict]) -> bytes:
    return _csv_bytes(INTERPRODUCT_COLUMNS, [
        [r["source"], r["target"], _f(r["risk"]), _f(r["exploitProb"]),
         _f(r["attackCost"])]
        for r in rows])


def centrality_csv(rows: Sequence[CentralityRow]) -> bytes:
    return _csv_bytes(CENTRALITY_COLUMNS, [
        [r.node, r.node_type, _f(r.pagerank_before), _f(r.pagerank_after),
         _f(r.delta_pagerank), _f(r.betweenness_before), _f(r.betweenness_after),
         _f(r.delta_betweenness)]
        for r in rows])


def communities_csv(report: CommunityReport, key_assets: int = 2) -> bytes:
    rows = []
    for c in report.communities:
        # Key assets: the highest-exposure members are listed in the risk
        # computation order; members are already sorted by id, so take the
        # first entries as stable representatives.
        rows.append([c.id, c.size, "|".join(c.members[:key_assets]),
                     _f(c.risk, 4), "Y" if c.cascade else "N"])
    return _csv_bytes(COMMUNITY_COLUMNS, rows)


def residual_csv(rows: Sequence[dict]) -> bytes:
    return _csv_bytes(RESIDUAL_COLUMNS, [
        [r["product"], r["zone"], _f(r["raw"], 4), _f(r["enriched"], 4),
         _f(r["after"], 4), _f(r["delta"], 4), r["reductionPct"]]
        for r in rows])


def suite_json(report: SuiteReport) -> bytes:
    payload = {
        "schemaVersion": SCHEMA_VERSION,
        "rows": [
            {
                "scenario": r.scenario_id,
                "source": r.source_label,
                "target": r.target_label,
                "config": r.config,
                "avgHops": round(r.avg_hops, 6),
                "minHops": r.min_hops,
                "maxHops": r.max_hops,
                "affected": r.affected,
            }
            for r in report.rows
        ],
        "aggregates": [
            {
                "config": a.config,
                "meanHops": round(a.mean_hops, 6),
                "ci95Low": round(a.ci95_low, 6),
                "ci95High": round(a.ci95_high, 6),
                "samples": a.sample_count,
            }
            for a in report.aggregates
        ],
    }
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def hop_plot_csv(report: SuiteReport) -> bytes:
    """Per-scenario average hop count per configuration (figure 'hops' data)."""
    return _per_scenario_plot(report, lambda r: _f(r.avg_hops, 4))


def affected_plot_csv(report: SuiteReport) -> bytes:
    """Per-scenario reachable-target count per configuration."""
    return _per_scenario_plot(report, lambda r: str(r.affected))


def _per_scenario_plot(report: SuiteReport, cell) -> bytes:
    configs = [a.config for a in report.aggregates]
    by_scenario: dict[str, dict[str, str]] = {}
    for r in report.rows:
        by_scenario.setdefault(r.scenario_id, {})[r.config] = cell(r)
    rows = []
    for scenario_id in sorted(by_scenario):
        per = by_scenario[scenario_id]
        rows.append([scenario_id] + [per.get(c, "") for c in configs])
    return _csv_bytes(["scenario"] + configs, rows)


def mean_ci_csv(report: SuiteReport) -> bytes:
    """Pooled mean path length with 95% interval per configuration."""
    return _csv_bytes(["config", "meanHops", "ci95Low", "ci95High", "samples"], [
        [a.config, _f(a.mean_hops, 4), _f(a.ci95_low, 4), _f(a.ci95_high, 4),
         a.sample_count]
        for a in report.aggregates])


def rows_json(rows: Sequence[dict]) -> bytes:
    return (json.dumps(list(rows), indent=2, sort_keys=True, default=float)
            + "\n").encode("utf-8")
