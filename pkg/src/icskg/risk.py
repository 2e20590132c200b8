"""Edge-level risk scoring from operational logs and vulnerability metadata.

The scoring chain per communication edge (u, v):

1. derive four weakness fractions (accessibility, configuration hygiene,
   exploitability, hardening residual) from the pair's log records;
2. controlStrength = product of the four factor scores (raw weaknesses under
   the Literal convention, their complements under Complement);
3. pExploit = (1 - prod(1 - epss_i)) * (1 - controlStrength) over the target
   product's CVEs;
4. attackCost = mean over CVEs of baseScore/10 + f_AC + f_AV + epss;
5. riskWeight = pExploit * criticality(v) / 10.

Applying a control profile mirrors every communication edge as a
CONTROLLED_COMMUNICATES_WITH edge recomputed from secured logs; edges whose
recomputed riskWeight falls below the prune threshold are counted as pruned
and drop out of the Controlled view.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from icskg.config import Convention, FactorCoefficients, RiskConfig
from icskg.errors import (
    DiscontiguousPath,
    MissingSecuredLogs,
    NoLogsForPair,
)
from icskg.graph import (
    Edge,
    EdgeKind,
    Graph,
    GraphView,
    RiskAttributes,
)
from icskg.ingest import CvssSummary, VulnRecord
from icskg.logsynth import ControlProfile, LogRecord

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Factor derivation
# ---------------------------------------------------------------------------

@dataclass
class ControlFactors:
    """Weakness fractions in [0,1]: accessibility, config hygiene,
    exploitability, hardening residual."""

    a: float
    c: float
    e: float
    h: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.c, self.e, self.h)


@dataclass
class PairStats:
    """Additive event counts for one communication pair (or a merged set)."""

    sessions: int = 0
    anon: int = 0
    insecure: int = 0
    cert: int = 0
    writes: int = 0
    failed_writes: int = 0
    audit_writes: int = 0
    checks: int = 0
    check_fails: int = 0
    client_ips: set[str] = field(default_factory=set)

    def add(self, other: "PairStats") -> None:
        self.sessions += other.sessions
        self.anon += other.anon
        self.insecure += other.insecure
        self.cert += other.cert
        self.writes += other.writes
        self.failed_writes += other.failed_writes
        self.audit_writes += other.audit_writes
        self.checks += other.checks
        self.check_fails += other.check_fails
        self.client_ips |= other.client_ips

    @property
    def empty(self) -> bool:
        return self.sessions == 0 and self.writes == 0 and self.checks == 0


_WRITE_EVENTS = {"Write", "FailedWrite", "AuditWrite"}
_CHECK_EVENTS = {"ConfigCheckPass", "ConfigCheckFail"}


def stats_from_records(records: Iterable[LogRecord]) -> PairStats:
    s = PairStats()
    for r in records:
        s.client_ips.add(r.client_ip)
        if r.event == "Session":
            s.sessions += 1
            if r.auth_mode == "Anonymous":
                s.anon += 1
            elif r.auth_mode == "Certificate":
                s.cert += 1
            if r.security_mode == "None":
                s.insecure += 1
        elif r.event in _WRITE_EVENTS:
            s.writes += 1
            if r.event == "FailedWrite":
                s.failed_writes += 1
            elif r.event == "AuditWrite":
                s.audit_writes += 1
        elif r.event in _CHECK_EVENTS:
            s.checks += 1
            if r.event == "ConfigCheckFail":
                s.check_fails += 1
    return s


def weakness_from_stats(stats: PairStats,
                        coeffs: Optional[FactorCoefficients] = None) -> ControlFactors:
    k = coeffs or FactorCoefficients()
    sessions = max(stats.sessions, 1)
    writes = max(stats.writes, 1)
    checks = max(stats.checks, 1)
    anon_frac = stats.anon / sessions
    insecure_frac = stats.insecure / sessions
    cert_frac = stats.cert / sessions
    misconfig_rate = stats.check_fails / sessions
    failed_frac = stats.failed_writes / writes
    audit_frac = stats.audit_writes / writes
    fail_check_frac = stats.check_fails / checks
    a = min(1.0, anon_frac + k.a_insecure * insecure_frac + k.a_ip * len(stats.client_ips))
    c = min(1.0, misconfig_rate + k.c_cert * (1.0 - cert_frac) + fail_check_frac)
    e = min(1.0, k.e_failed * failed_frac + k.e_audit * audit_frac + k.e_access * a)
    h = min(1.0, k.h_scale * ((1.0 - cert_frac) + insecure_frac + fail_check_frac))
    return ControlFactors(a, c, e, h)


def derive_factors(logs: Sequence[LogRecord], pair: tuple[str, str],
                   coeffs: Optional[FactorCoefficients] = None) -> ControlFactors:
    """Weakness scores for one communication pair, either direction.

    Raises :class:`NoLogsForPair` when the stream holds no record for the
    pair; callers fall back to the zone-default presets in that case.
    """
    u, v = pair
    wanted = {(u, v), (v, u)}
    records = [r for r in logs if (r.src, r.dst) in wanted]
    if not records:
        raise NoLogsForPair(f"no log records for pair ({u!r}, {v!r})")
    return weakness_from_stats(stats_from_records(records), coeffs)


class LogIndex:
    """Per-pair pre-aggregated statistics for fast edge annotation."""

    def __init__(self, logs: Sequence[LogRecord]) -> None:
        grouped: dict[frozenset[str], list[LogRecord]] = {}
        for r in logs:
            grouped.setdefault(frozenset((r.src, r.dst)), []).append(r)
        self._pair_stats: dict[frozenset[str], PairStats] = {
            pair: stats_from_records(recs) for pair, recs in grouped.items()}
        self._by_endpoint: dict[str, list[frozenset[str]]] = {}
        for pair in sorted(self._pair_stats, key=sorted):
            for endpoint in pair:
                self._by_endpoint.setdefault(endpoint, []).append(pair)

    def pair(self, u: str, v: str) -> Optional[PairStats]:
        return self._pair_stats.get(frozenset((u, v)))

    def merged(self, u: str, v: str) -> Optional[PairStats]:
        """Union of all records touching either endpoint (for inferred links)."""
        pairs = set(self._by_endpoint.get(u, ())) | set(self._by_endpoint.get(v, ()))
        if not pairs:
            return None
        merged = PairStats()
        for pair in sorted(pairs, key=sorted):
            merged.add(self._pair_stats[pair])
        return merged


# ---------------------------------------------------------------------------
# The scoring formulas
# ---------------------------------------------------------------------------

def control_strength(factors: ControlFactors,
                     convention: Convention = Convention.COMPLEMENT) -> float:
    """Composite control effectiveness of a link, in [0,1].

    Literal multiplies the raw weakness scores; Complement multiplies their
    complements so that weaker observed behavior lowers the result.
    """
    a, c, e, h = factors.as_tuple()
    if convention is Convention.LITERAL:
        return a * c * e * h
    return (1.0 - a) * (1.0 - c) * (1.0 - e) * (1.0 - h)


def p_exploit(epss_list: Sequence[float], cs: float) -> float:
    """Aggregated exploitation likelihood attenuated by control strength.

    Multiple CVEs combine as 1 - prod(1 - e_i): the chance that at least one
    exploit succeeds.  An empty CVE list yields 0.
    """
    survive = 1.0
    for e in epss_list:
        survive *= (1.0 - e)
    aggregated = 1.0 - survive
    return min(1.0, max(0.0, aggregated * (1.0 - cs)))


def attack_cost(cvss: CvssSummary, epss: float,
                f_ac: Optional[dict[str, float]] = None,
                f_av: Optional[dict[str, float]] = None) -> float:
    """Adversary-effort estimate for a single CVE (unclamped, >= 0)."""
    cfg = RiskConfig()
    f_ac = f_ac if f_ac is not None else cfg.f_ac
    f_av = f_av if f_av is not None else cfg.f_av
    return cvss.base_score / 10.0 + f_ac[cvss.access_complexity] \
        + f_av[cvss.attack_vector] + epss


def aggregate_attack_cost(costs: Sequence[float]) -> float:
    """Multi-CVE edges average per-CVE costs: cost is an effort estimate,
    not a survival probability, so the mean is the sensible aggregate."""
    if not costs:
        return 0.0
    return sum(costs) / len(costs)


def risk_weight(p: float, criticality: int) -> float:
    """Residual risk: exploitation likelihood scaled by target importance."""
    return p * criticality / 10.0


# ---------------------------------------------------------------------------
# Vulnerability lookup
# ---------------------------------------------------------------------------

@dataclass
class _VulnInfo:
    epss: float
    cvss: CvssSummary


def _target_vulns(graph: Graph, product_id: str,
                  vuln_index: Optional[dict[str, VulnRecord]]) -> list[_VulnInfo]:
    infos = []
    for edge in graph.out_edges(product_id, EdgeKind.HAS_VULNERABILITY):
        if vuln_index is not None and edge.dst in vuln_index:
            rec = vuln_index[edge.dst]
            infos.append(_VulnInfo(rec.epss, rec.cvss))
            continue
        node = graph.node(edge.dst)
        infos.append(_VulnInfo(
            epss=float(node.props.get("epss", 0.0)),
            cvss=CvssSummary(
                base_score=float(node.props.get("baseScore", 5.0)),
                access_complexity=node.props.get("accessComplexity", "Low"),
                attack_vector=node.props.get("attackVector", "Network"),
            ),
        ))
    return infos


# ---------------------------------------------------------------------------
# Annotation
# ---------------------------------------------------------------------------

def _zone_weakness(graph: Graph, src: str, dst: str,
                   config: RiskConfig) -> ControlFactors:
    """Zone-default fallback when no logs exist for a pair; the weaker of the
    two endpoint presets is used (cross-zone links inherit the softer side)."""
    presets = []
    for node_id in (src, dst):
        zone = graph.node(node_id).zone or "DMZ"
        presets.append(config.zone_weakness(zone))
    weaker = max(presets, key=sum)
    return ControlFactors(*weaker)


def _edge_weakness(graph: Graph, edge: Edge, index: LogIndex,
                   config: RiskConfig, merged: bool) -> ControlFactors:
    stats = index.merged(edge.src, edge.dst) if merged \
        else index.pair(edge.src, edge.dst)
    if stats is None or stats.empty:
        return _zone_weakness(graph, edge.src, edge.dst, config)
    return weakness_from_stats(stats, config.coefficients)


def _score_edge(graph: Graph, edge: Edge, weakness: ControlFactors,
                config: RiskConfig, vuln_index: Optional[dict[str, VulnRecord]],
                epss_scale: float = 1.0) -> RiskAttributes:
    cs = control_strength(weakness, config.convention)
    vulns = _target_vulns(graph, edge.dst, vuln_index)
    epss_list = [v.epss * epss_scale for v in vulns]
    p = p_exploit(epss_list, cs)
    cost = aggregate_attack_cost([
        attack_cost(v.cvss, v.epss * epss_scale, config.f_ac, config.f_av)
        for v in vulns])
    rw = risk_weight(p, graph.node(edge.dst).criticality)
    return RiskAttributes(control_strength=cs, p_exploit=p,
                          attack_cost=cost, risk_weight=rw)


ANNOTATED_KINDS = (EdgeKind.COMMUNICATES_WITH, EdgeKind.HAS_POSSIBLE_COMMUNICATION)


def annotate(graph: Graph, logs: Sequence[LogRecord], config: RiskConfig,
             vuln_index: Optional[dict[str, VulnRecord]] = None) -> int:
    """Attach RiskAttributes to every communication-family edge.

    Observed links use their exact pair's log records; inferred possible
    links use the union of both endpoints' logs; pairs with no records at
    all fall back to the zone-default presets.  Edges whose target has no
    CVEs score pExploit 0 and riskWeight 0.  Deterministic and idempotent.
    """
    index = LogIndex(logs)
    count = 0
    for kind in ANNOTATED_KINDS:
        for edge in graph.edges(kind):
            merged = kind is EdgeKind.HAS_POSSIBLE_COMMUNICATION
            weakness = _edge_weakness(graph, edge, index, config, merged)
            edge.risk = _score_edge(graph, edge, weakness, config, vuln_index)
            count += 1
    return count


@dataclass
class ControlApplicationReport:
    edges_recomputed: int
    edges_pruned: int


def apply_controls(graph: Graph, controls: ControlProfile,
                   secured_logs: Optional[Sequence[LogRecord]],
                   config: RiskConfig,
                   vuln_index: Optional[dict[str, VulnRecord]] = None,
                   ) -> ControlApplicationReport:
    """Mirror communication edges as CONTROLLED_COMMUNICATES_WITH edges with
    attributes recomputed from the secured logs.

    With NetworkSegmentation enabled, cross-zone pairs off the allowlist are
    treated as blocked: their mirror gets pExploit 0 / riskWeight 0 and falls
    below any positive prune threshold.  With PatchManagement enabled, every
    EPSS input is scaled down before aggregation.  Mirrors below the prune
    threshold are counted in ``edges_pruned``.
    """
    if secured_logs is None:
        raise MissingSecuredLogs("apply_controls requires a secured log stream")
    index = LogIndex(secured_logs)
    segmented = "NetworkSegmentation" in controls.controls
    epss_scale = controls.overrides.epss_scale \
        if "PatchManagement" in controls.controls else 1.0
    recomputed = 0
    pruned = 0
    for kind in ANNOTATED_KINDS:
        for edge in graph.edges(kind):
            src_zone = graph.node(edge.src).zone
            dst_zone = graph.node(edge.dst).zone
            blocked = segmented and src_zone != dst_zone \
                and not controls.allows(edge.src, edge.dst)
            if blocked:
                zero = ControlFactors(0.0, 0.0, 0.0, 0.0)
                cs = control_strength(zero, config.convention)
                risk = RiskAttributes(control_strength=cs, p_exploit=0.0,
                                      attack_cost=0.0, risk_weight=0.0)
            else:
                merged = kind is EdgeKind.HAS_POSSIBLE_COMMUNICATION
                weakness = _edge_weakness(graph, edge, index, config, merged)
                risk = _score_edge(graph, edge, weakness, config, vuln_index,
                                   epss_scale=epss_scale)
            mirror = Edge(edge.src, edge.dst, EdgeKind.CONTROLLED_COMMUNICATES_WITH,
                          risk=risk,
                          props={**edge.props, "mirrors": kind.value})
            graph.upsert_edge(mirror)
            recomputed += 1
            if risk.risk_weight < config.prune_threshold:
                pruned += 1
    return ControlApplicationReport(recomputed, pruned)


# ---------------------------------------------------------------------------
# Path and node level metrics
# ---------------------------------------------------------------------------

def path_probability(edges: Sequence[Edge]) -> float:
    """Probability of traversing a contiguous multi-hop path (product of
    per-edge pExploit); the empty path has probability 1."""
    if not edges:
        return 1.0
    for e in edges:
        if e.risk is None:
            raise DiscontiguousPath(
                f"edge {e.src}->{e.dst} has no risk attributes")
    if len(edges) > 1:
        first_ends = {edges[0].src, edges[0].dst}
        second_ends = {edges[1].src, edges[1].dst}
        shared = first_ends & second_ends
        if not shared:
            raise DiscontiguousPath("first two edges do not touch")
        start_candidates = first_ends - shared
        current = start_candidates.pop() if start_candidates else edges[0].src
        for e in edges:
            ends = {e.src, e.dst}
            if current not in ends:
                raise DiscontiguousPath(
                    f"edge {e.src}->{e.dst} does not continue from {current!r}")
            current = (ends - {current}).pop() if len(ends) == 2 else current
    prob = 1.0
    for e in edges:
        prob *= e.risk.p_exploit
    return prob


def exposure(view: GraphView, node_id: str) -> float:
    """Sum of riskWeight over the view's active edges targeting the node."""
    total = 0.0
    for edge in view.incoming(node_id):
        if edge.risk is not None:
            total += edge.risk.risk_weight
    return total
