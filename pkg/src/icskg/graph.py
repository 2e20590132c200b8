"""In-memory typed property graph with configuration-filtered views.

The graph is built single-writer, then frozen with :meth:`Graph.finalize`.
After that, any number of :class:`GraphView` projections can be taken and
queried concurrently; a view is a value-like snapshot of the active
communication edge set for one configuration:

* ``Original``   - observed COMMUNICATES_WITH links only
* ``Enriched``   - Original plus inferred HAS_POSSIBLE_COMMUNICATION links
* ``Controlled`` - CONTROLLED_COMMUNICATES_WITH where a pair has one,
  surviving enriched edges otherwise, with every edge whose riskWeight is
  below the prune threshold (default 0.05) removed

Storage keeps edge direction (reports need source/target); traversal inside
views treats communication edges as undirected.
"""

from __future__ import annotations

import json
import xml.sax.saxutils as saxutils
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from icskg.errors import (
    GraphFinalized,
    GraphNotFinalized,
    InvalidCriticality,
    InvalidNode,
    KindConflict,
    KindConstraintViolation,
    MissingEndpoint,
    UnknownNode,
)

PRUNE_THRESHOLD = 0.05


class NodeKind(Enum):
    PRODUCT = "Product"
    VULNERABILITY = "Vulnerability"
    WEAKNESS = "Weakness"
    ATTACK_PATTERN = "AttackPattern"
    TECHNIQUE = "Technique"
    TACTIC = "Tactic"
    ASSET = "Asset"
    MITIGATION = "Mitigation"
    ZONE = "Zone"
    PROTOCOL = "Protocol"
    ENTITY = "Entity"
    ACCOUNT = "Account"
    SOFTWARE = "Software"
    COMPONENT = "Component"
    PROCESS_VARIABLE = "ProcessVariable"
    OBSERVATION = "Observation"


class EdgeKind(Enum):
    COMMUNICATES_WITH = "COMMUNICATES_WITH"
    CONTROLLED_COMMUNICATES_WITH = "CONTROLLED_COMMUNICATES_WITH"
    HAS_POSSIBLE_COMMUNICATION = "HAS_POSSIBLE_COMMUNICATION"
    HAS_VULNERABILITY = "HAS_VULNERABILITY"
    HAS_CWE = "HAS_CWE"
    HAS_POSSIBLE_CWE = "HAS_POSSIBLE_CWE"
    HAS_CAPEC = "HAS_CAPEC"
    HAS_TECHNIQUE = "HAS_TECHNIQUE"
    HAS_POSSIBLE_TECHNIQUE = "HAS_POSSIBLE_TECHNIQUE"
    SUGGESTED_TACTIC = "SUGGESTED_TACTIC"
    MITIGATED_BY = "MITIGATED_BY"
    IN_ZONE = "IN_ZONE"
    USES_PROTOCOL = "USES_PROTOCOL"


COMMUNICATION_KINDS = frozenset({
    EdgeKind.COMMUNICATES_WITH,
    EdgeKind.CONTROLLED_COMMUNICATES_WITH,
    EdgeKind.HAS_POSSIBLE_COMMUNICATION,
})

PREDICTION_KINDS = frozenset({
    EdgeKind.HAS_POSSIBLE_CWE,
    EdgeKind.HAS_POSSIBLE_TECHNIQUE,
    EdgeKind.SUGGESTED_TACTIC,
})

# Admissible (source kind set, target kind set) per edge kind.  The taxonomy
# kinds follow the Product -> CVE -> CWE -> CAPEC -> Technique -> Tactic chain.
_ENDPOINT_RULES: dict[EdgeKind, tuple[frozenset[NodeKind], frozenset[NodeKind]]] = {
    EdgeKind.COMMUNICATES_WITH: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.PRODUCT})),
    EdgeKind.CONTROLLED_COMMUNICATES_WITH: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.PRODUCT})),
    EdgeKind.HAS_POSSIBLE_COMMUNICATION: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.PRODUCT})),
    EdgeKind.HAS_VULNERABILITY: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.VULNERABILITY})),
    EdgeKind.HAS_CWE: (
        frozenset({NodeKind.VULNERABILITY}), frozenset({NodeKind.WEAKNESS})),
    EdgeKind.HAS_POSSIBLE_CWE: (
        frozenset({NodeKind.VULNERABILITY}), frozenset({NodeKind.WEAKNESS})),
    EdgeKind.HAS_CAPEC: (
        frozenset({NodeKind.WEAKNESS}), frozenset({NodeKind.ATTACK_PATTERN})),
    EdgeKind.HAS_TECHNIQUE: (
        frozenset({NodeKind.ATTACK_PATTERN}), frozenset({NodeKind.TECHNIQUE})),
    EdgeKind.HAS_POSSIBLE_TECHNIQUE: (
        frozenset({NodeKind.ATTACK_PATTERN}), frozenset({NodeKind.TECHNIQUE})),
    EdgeKind.SUGGESTED_TACTIC: (
        frozenset({NodeKind.TECHNIQUE}), frozenset({NodeKind.TACTIC})),
    EdgeKind.MITIGATED_BY: (
        frozenset({NodeKind.PRODUCT, NodeKind.VULNERABILITY, NodeKind.WEAKNESS,
                   NodeKind.ATTACK_PATTERN, NodeKind.TECHNIQUE}),
        frozenset({NodeKind.MITIGATION})),
    EdgeKind.IN_ZONE: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.ZONE})),
    EdgeKind.USES_PROTOCOL: (
        frozenset({NodeKind.PRODUCT}), frozenset({NodeKind.PROTOCOL})),
}


class Configuration(Enum):
    ORIGINAL = "Original"
    ENRICHED = "Enriched"
    CONTROLLED = "Controlled"


@dataclass
class RiskAttributes:
    """Per-edge risk metrics carried by communication-family edges.

    riskWeight is always pExploit scaled by target criticality / 10; the
    four values are recomputed together and never set independently.
    """

    control_strength: float = 0.0
    p_exploit: float = 0.0
    attack_cost: float = 0.0
    risk_weight: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {
            "controlStrength": self.control_strength,
            "pExploit": self.p_exploit,
            "attackCost": self.attack_cost,
            "riskWeight": self.risk_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RiskAttributes":
        return cls(
            control_strength=float(d.get("controlStrength", 0.0)),
            p_exploit=float(d.get("pExploit", 0.0)),
            attack_cost=float(d.get("attackCost", 0.0)),
            risk_weight=float(d.get("riskWeight", 0.0)),
        )


@dataclass
class Node:
    id: str
    kind: NodeKind
    props: dict[str, str] = field(default_factory=dict)
    criticality: int = 0
    zone: Optional[str] = None
    # Dense index assigned at finalize(); analytics index arrays by it.
    index: int = -1

    def validate(self) -> None:
        if not self.id:
            raise InvalidNode("node id must be a non-empty string")
        if not isinstance(self.criticality, int) or isinstance(self.criticality, bool):
            raise InvalidCriticality(
                f"criticality of {self.id!r} must be an integer, got {self.criticality!r}")
        if not 0 <= self.criticality <= 10:
            raise InvalidCriticality(
                f"criticality of {self.id!r} is {self.criticality}, must be in 0..10")
        if self.kind is NodeKind.PRODUCT and not self.zone:
            raise InvalidNode(f"Product {self.id!r} must carry a zone")


@dataclass
class Edge:
    src: str
    dst: str
    kind: EdgeKind
    risk: Optional[RiskAttributes] = None
    props: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)

    @property
    def pair(self) -> frozenset[str]:
        return frozenset((self.src, self.dst))

    def is_communication(self) -> bool:
        return self.kind in COMMUNICATION_KINDS


class Graph:
    """Typed directed property graph; single-writer until :meth:`finalize`."""

    def __init__(self) -> None:
        self._nodes: dict[str, Node] = {}
        self._edges: dict[tuple[str, str, str], Edge] = {}
        self._finalized = False

    # ------------------------------------------------------------------
    # Build phase
    # ------------------------------------------------------------------

    def upsert_node(self, node: Node) -> str:
        self._check_mutable()
        node.validate()
        existing = self._nodes.get(node.id)
        if existing is not None:
            if existing.kind is not node.kind:
                raise KindConflict(
                    f"node {node.id!r} already exists with kind {existing.kind.value}, "
                    f"cannot re-upsert as {node.kind.value}")
            existing.props.update(node.props)
            if node.zone is not None:
                existing.zone = node.zone
            if node.criticality:
                existing.criticality = node.criticality
            return existing.id
        self._nodes[node.id] = node
        return node.id

    def upsert_edge(self, edge: Edge) -> None:
        self._check_mutable()
        src = self._nodes.get(edge.src)
        dst = self._nodes.get(edge.dst)
        if src is None or dst is None:
            missing = edge.src if src is None else edge.dst
            raise MissingEndpoint(f"edge endpoint {missing!r} does not exist")
        if edge.src == edge.dst:
            raise KindConstraintViolation(f"self-loop on {edge.src!r} is not allowed")
        src_ok, dst_ok = _ENDPOINT_RULES[edge.kind]
        if src.kind not in src_ok or dst.kind not in dst_ok:
            raise KindConstraintViolation(
                f"{edge.kind.value} does not admit "
                f"{src.kind.value} -> {dst.kind.value} ({edge.src!r} -> {edge.dst!r})")
        if edge.risk is not None and not edge.is_communication():
            raise KindConstraintViolation(
                f"{edge.kind.value} edges cannot carry risk attributes")
        self._edges[edge.key] = edge

    def finalize(self) -> None:
        """Freeze the graph and assign dense node indexes (sorted by id)."""
        for i, node_id in enumerate(sorted(self._nodes)):
            self._nodes[node_id].index = i
        self._finalized = True

    def _check_mutable(self) -> None:
        if self._finalized:
            raise GraphFinalized("graph is finalized; no further mutation allowed")

    # ------------------------------------------------------------------
    # Queries (allowed in both phases)
    # ------------------------------------------------------------------

    @property
    def finalized(self) -> bool:
        return self._finalized

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def nodes(self, kind: Optional[NodeKind] = None) -> list[Node]:
        out = [n for n in self._nodes.values() if kind is None or n.kind is kind]
        out.sort(key=lambda n: n.id)
        return out

    def edges(self, kind: Optional[EdgeKind] = None) -> list[Edge]:
        out = [e for e in self._edges.values() if kind is None or e.kind is kind]
        out.sort(key=lambda e: e.key)
        return out

    def edge(self, src: str, dst: str, kind: EdgeKind) -> Optional[Edge]:
        return self._edges.get((src, dst, kind.value))

    def node_count(self) -> int:
        return len(self._nodes)

    def edge_count(self) -> int:
        return len(self._edges)

    def out_edges(self, node_id: str, kind: Optional[EdgeKind] = None) -> list[Edge]:
        self.node(node_id)
        out = [e for e in self._edges.values()
               if e.src == node_id and (kind is None or e.kind is kind)]
        out.sort(key=lambda e: e.key)
        return out

    def in_edges(self, node_id: str, kind: Optional[EdgeKind] = None) -> list[Edge]:
        self.node(node_id)
        out = [e for e in self._edges.values()
               if e.dst == node_id and (kind is None or e.kind is kind)]
        out.sort(key=lambda e: e.key)
        return out

    def counts_by_kind(self) -> dict[str, dict[str, int]]:
        nodes: dict[str, int] = {}
        for n in self._nodes.values():
            nodes[n.kind.value] = nodes.get(n.kind.value, 0) + 1
        edges: dict[str, int] = {}
        for e in self._edges.values():
            edges[e.kind.value] = edges.get(e.kind.value, 0) + 1
        return {"nodes": dict(sorted(nodes.items())),
                "edges": dict(sorted(edges.items()))}

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    def project_view(self, config: Configuration,
                     prune_threshold: float = PRUNE_THRESHOLD) -> "GraphView":
        if not self._finalized:
            raise GraphNotFinalized(
                "finalize() the graph before projecting configuration views")
        active = self._active_edges(config, prune_threshold)
        return GraphView(self, config, active)

    def _active_edges(self, config: Configuration,
                      prune_threshold: float) -> tuple[Edge, ...]:
        comm = [e for e in self._edges.values() if e.kind is EdgeKind.COMMUNICATES_WITH]
        possible = [e for e in self._edges.values()
                    if e.kind is EdgeKind.HAS_POSSIBLE_COMMUNICATION]
        if config is Configuration.ORIGINAL:
            selected = comm
        elif config is Configuration.ENRICHED:
            selected = comm + possible
        else:
            controlled = [e for e in self._edges.values()
                          if e.kind is EdgeKind.CONTROLLED_COMMUNICATES_WITH]
            covered = {(e.src, e.dst) for e in controlled}
            # Enriched edges without a controlled counterpart persist with
            # their own attributes, still subject to the prune below.
            fallback = [e for e in comm + possible if (e.src, e.dst) not in covered]
            selected = [e for e in controlled + fallback
                        if e.risk is not None and e.risk.risk_weight >= prune_threshold]
        return tuple(sorted(selected, key=lambda e: e.key))


class GraphView:
    """Immutable projection of one configuration's communication edges.

    The node universe of a view is every Product node of the base graph;
    communication edges are traversed as undirected.
    """

    def __init__(self, graph: Graph, config: Configuration,
                 active: tuple[Edge, ...]) -> None:
        self.graph = graph
        self.config = config
        self.edges = active
        self._adj: dict[str, list[tuple[str, Edge]]] = {}
        for e in active:
            self._adj.setdefault(e.src, []).append((e.dst, e))
            self._adj.setdefault(e.dst, []).append((e.src, e))
        for lst in self._adj.values():
            lst.sort(key=lambda t: (t[0], t[1].kind.value))

    def edge_count(self) -> int:
        return len(self.edges)

    def nodes(self) -> list[str]:
        return [n.id for n in self.graph.nodes(NodeKind.PRODUCT)]

    def neighbors(self, node_id: str) -> list[tuple[str, Edge]]:
        self.graph.node(node_id)
        return list(self._adj.get(node_id, ()))

    def incoming(self, node_id: str) -> list[Edge]:
        """Active edges stored with ``node_id`` as their target."""
        self.graph.node(node_id)
        return [e for e in self.edges if e.dst == node_id]

    # ------------------------------------------------------------------
    # Export
    # ------------------------------------------------------------------

    EDGE_CSV_HEADER = "src,dst,kind,riskWeight,pExploit,attackCost,controlStrength,protocol"

    def export(self, fmt: str) -> bytes:
        """Serialize the view; output ordering is deterministic.

        Nodes are emitted sorted by id and edges sorted by (src, dst, kind);
        ``edge-csv`` round-trips through :func:`icskg.ingest.load_edge_csv`.
        """
        fmt = fmt.lower()
        if fmt == "dot":
            return self._export_dot()
        if fmt == "graphml":
            return self._export_graphml()
        if fmt in ("edge-csv", "csv"):
            return self._export_edge_csv()
        raise ValueError(f"unsupported export format {fmt!r}")

    def _export_dot(self) -> bytes:
        lines = [f"digraph {self.config.value.lower()} {{"]
        for node in self.graph.nodes():
            attrs = [f'kind="{node.kind.value}"']
            if node.zone:
                attrs.append(f'zone="{node.zone}"')
            if node.kind is NodeKind.PRODUCT:
                attrs.append(f'criticality="{node.criticality}"')
            lines.append(f'  "{node.id}" [{" ".join(attrs)}];')
        for e in self.edges:
            attrs = [f'kind="{e.kind.value}"']
            if e.risk is not None:
                attrs.append(f'riskWeight="{e.risk.risk_weight!r}"')
            lines.append(f'  "{e.src}" -> "{e.dst}" [{" ".join(attrs)}];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    def _export_graphml(self) -> bytes:
        esc = saxutils.escape
        q = saxutils.quoteattr
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
            '  <key id="kind" for="all" attr.name="kind" attr.type="string"/>',
            '  <key id="zone" for="node" attr.name="zone" attr.type="string"/>',
            '  <key id="criticality" for="node" attr.name="criticality" attr.type="int"/>',
            '  <key id="riskWeight" for="edge" attr.name="riskWeight" attr.type="double"/>',
            '  <key id="pExploit" for="edge" attr.name="pExploit" attr.type="double"/>',
            '  <key id="attackCost" for="edge" attr.name="attackCost" attr.type="double"/>',
            '  <key id="controlStrength" for="edge" attr.name="controlStrength" attr.type="double"/>',
            f'  <graph id={q(self.config.value)} edgedefault="directed">',
        ]
        for node in self.graph.nodes():
            lines.append(f'    <node id={q(node.id)}>')
            lines.append(f'      <data key="kind">{esc(node.kind.value)}</data>')
            if node.zone:
                lines.append(f'      <data key="zone">{esc(node.zone)}</data>')
            if node.kind is NodeKind.PRODUCT:
                lines.append(f'      <data key="criticality">{node.criticality}</data>')
            lines.append('    </node>')
        for e in self.edges:
            lines.append(f'    <edge source={q(e.src)} target={q(e.dst)}>')
            lines.append(f'      <data key="kind">{esc(e.kind.value)}</data>')
            if e.risk is not None:
                r = e.risk
                lines.append(f'      <data key="riskWeight">{r.risk_weight!r}</data>')
                lines.append(f'      <data key="pExploit">{r.p_exploit!r}</data>')
                lines.append(f'      <data key="attackCost">{r.attack_cost!r}</data>')
                lines.append(f'      <data key="controlStrength">{r.control_strength!r}</data>')
            lines.append('    </edge>')
        lines.append('  </graph>')
        lines.append('</graphml>')
        return ("\n".join(lines) + "\n").encode("utf-8")

    def _export_edge_csv(self) -> bytes:
        rows = [self.EDGE_CSV_HEADER]
        for e in self.edges:
            if e.risk is not None:
                risk_cols = [repr(e.risk.risk_weight), repr(e.risk.p_exploit),
                             repr(e.risk.attack_cost), repr(e.risk.control_strength)]
            else:
                risk_cols = ["", "", "", ""]
            protocol = e.props.get("protocol", "")
            rows.append(",".join([e.src, e.dst, e.kind.value] + risk_cols + [protocol]))
        return ("\n".join(rows) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# Whole-graph audits used by the invariant test suite
# ---------------------------------------------------------------------------

def audit_hierarchy(graph: Graph) -> list[str]:
    """Re-check every stored edge against the endpoint-kind rules.

    Returns human-readable violation strings; an empty list means the
    taxonomy chain and the communication-family constraints all hold.
    """
    violations = []
    for e in graph.edges():
        src_ok, dst_ok = _ENDPOINT_RULES[e.kind]
        src = graph.node(e.src)
        dst = graph.node(e.dst)
        if src.kind not in src_ok or dst.kind not in dst_ok:
            violations.append(
                f"{e.src}->{e.dst} [{e.kind.value}]: "
                f"{src.kind.value}->{dst.kind.value} not admissible")
        if e.risk is not None and not e.is_communication():
            violations.append(f"{e.src}->{e.dst} [{e.kind.value}]: risk on taxonomy edge")
    return violations


def audit_risk_completeness(graph: Graph) -> list[str]:
    """Every stored communication edge must carry full risk attributes."""
    missing = []
    for e in graph.edges():
        if e.is_communication() and e.risk is None:
            missing.append(f"{e.src}->{e.dst} [{e.kind.value}]: missing RiskAttributes")
    return missing


def props_to_json(props: dict[str, str]) -> str:
    return json.dumps(props, sort_keys=True, separators=(",", ":")) if props else "{}"
