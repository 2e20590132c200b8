"""Loaders for public-dataset CSV snapshots, advisories and the testbed spec.

File formats (all UTF-8, comma-separated, first row is the header):

* node.csv      ``id,kind,name,zone,criticality,props_json``
* relation.csv  ``src,dst,kind,props_json``
* edge-CSV      ``src,dst,kind,riskWeight,pExploit,attackCost,controlStrength,protocol``
  (the export format of :meth:`GraphView.export`; re-ingestable here)
* predictions   ``srcId,dstId,kind,confidence`` with kind limited to
  HAS_POSSIBLE_CWE / HAS_POSSIBLE_TECHNIQUE / SUGGESTED_TACTIC
* testbed spec  JSON document, see :class:`TestbedSpec`
* advisories    JSON list of vulnerability records, see :class:`VulnRecord`

Row-level problems (bad enum cell, dangling node reference, invariant
violations) are collected as :class:`RowIssue` entries with their line
number and the row is skipped; a missing header column is fatal.
"""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import Iterable, Optional

from icskg.config import RiskConfig
from icskg.errors import (
    BadEnum,
    DanglingReference,
    GraphError,
    MissingColumn,
)
from icskg.graph import (
    PREDICTION_KINDS,
    Edge,
    EdgeKind,
    Graph,
    Node,
    NodeKind,
    RiskAttributes,
    props_to_json,
)

logger = logging.getLogger(__name__)

NODE_CSV_HEADER = ["id", "kind", "name", "zone", "criticality", "props_json"]
RELATION_CSV_HEADER = ["src", "dst", "kind", "props_json"]
EDGE_CSV_HEADER = ["src", "dst", "kind", "riskWeight", "pExploit", "attackCost",
                   "controlStrength", "protocol"]
PREDICTION_CSV_HEADER = ["srcId", "dstId", "kind", "confidence"]

VULN_STATUSES = ("ACTIVE", "REJECTED", "RESOLVED")


@dataclass
class RowIssue:
    row: int            # 1-based data row number (header not counted)
    kind: str           # "BadEnum" | "DanglingReference" | "InvalidRow"
    message: str


@dataclass
class LoadResult:
    count: int
    issues: list[RowIssue] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Vulnerability records
# ---------------------------------------------------------------------------

@dataclass
class CvssSummary:
    base_score: float = 5.0
    access_complexity: str = "Low"
    attack_vector: str = "Network"


@dataclass
class VulnRecord:
    cve_id: str
    description: str = ""
    status: str = "ACTIVE"
    epss: float = 0.0
    kev: bool = False
    cvss: CvssSummary = field(default_factory=CvssSummary)
    vendor_statements: list[str] = field(default_factory=list)
    cpes: list[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: dict) -> "VulnRecord":
        status = raw.get("status", "ACTIVE")
        if status not in VULN_STATUSES:
            raise BadEnum(f"vulnerability status {status!r} for {raw.get('cveId')!r}")
        cvss_raw = raw.get("cvss") or {}
        # Public feeds are incomplete: absent EPSS means no evidence of
        # exploitation (0.0), absent base score defaults to medium (5.0).
        epss = raw.get("epss")
        if epss is None:
            logger.debug("no EPSS for %s, defaulting to 0.0", raw.get("cveId"))
            epss = 0.0
        base = cvss_raw.get("baseScore")
        if base is None:
            logger.debug("no CVSS base for %s, defaulting to 5.0", raw.get("cveId"))
            base = 5.0
        ac = cvss_raw.get("accessComplexity", "Low")
        av = cvss_raw.get("attackVector", "Network")
        if ac not in ("Low", "High"):
            raise BadEnum(f"accessComplexity {ac!r} for {raw.get('cveId')!r}")
        if av not in ("Network", "Adjacent", "Local", "Physical"):
            raise BadEnum(f"attackVector {av!r} for {raw.get('cveId')!r}")
        epss = float(epss)
        base = float(base)
        if not 0.0 <= epss <= 1.0:
            raise BadEnum(f"EPSS {epss} for {raw.get('cveId')!r} outside [0,1]")
        if not 0.0 <= base <= 10.0:
            raise BadEnum(f"CVSS base {base} for {raw.get('cveId')!r} outside [0,10]")
        return cls(
            cve_id=raw["cveId"],
            description=raw.get("description", ""),
            status=status,
            epss=epss,
            kev=bool(raw.get("kev", False)),
            cvss=CvssSummary(base, ac, av),
            vendor_statements=list(raw.get("vendorStatements", [])),
            cpes=list(raw.get("cpes", [])),
        )


def load_advisories(path: str | Path) -> list[VulnRecord]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return [VulnRecord.from_dict(entry) for entry in raw]


_WS_RE = re.compile(r"\s+")


def _sanitize_text(text: str) -> str:
    cleaned = "".join(ch if ch.isprintable() else " " for ch in text)
    return _WS_RE.sub(" ", cleaned).strip()


def preprocess_cves(records: list[VulnRecord]) -> list[VulnRecord]:
    """Drop REJECTED/RESOLVED entries and sanitize descriptions.

    Non-printable characters are replaced and whitespace collapsed; input
    order is preserved and the operation is idempotent.
    """
    out = []
    for rec in records:
        if rec.status != "ACTIVE":
            continue
        rec.description = _sanitize_text(rec.description)
        rec.vendor_statements = [_sanitize_text(s) for s in rec.vendor_statements]
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# Testbed specification
# ---------------------------------------------------------------------------

@dataclass
class TestbedProduct:
    name: str
    vendor: str
    asset_class: str
    zone: str
    criticality: Optional[int] = None
    protocols: list[str] = field(default_factory=list)


@dataclass
class Dataflow:
    src: str
    dst: str
    protocol: str


@dataclass
class ControlProfileSpec:
    name: str
    controls: list[str]
    # Sanctioned cross-zone flows that NetworkSegmentation keeps open,
    # stored as undirected pairs.
    allowlist: list[tuple[str, str]] = field(default_factory=list)

    def allows(self, a: str, b: str) -> bool:
        return (a, b) in self.allowlist or (b, a) in self.allowlist


@dataclass
class TestbedSpec:
    zones: list[str]
    products: list[TestbedProduct]
    dataflows: list[Dataflow]
    control_profiles: dict[str, ControlProfileSpec] = field(default_factory=dict)
    cpe_overrides: dict[str, str] = field(default_factory=dict)

    def product(self, name: str) -> TestbedProduct:
        for p in self.products:
            if p.name == name:
                return p
        raise DanglingReference(f"testbed references unknown product {name!r}")


def load_testbed(path: str | Path) -> TestbedSpec:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    zones = [z["name"] if isinstance(z, dict) else str(z) for z in raw.get("zones", [])]
    products = []
    for p in raw["products"]:
        crit = p.get("criticality")
        products.append(TestbedProduct(
            name=p["name"],
            vendor=p.get("vendor", ""),
            asset_class=p.get("assetClass", ""),
            zone=p["zone"],
            criticality=int(crit) if crit is not None else None,
            protocols=list(p.get("protocols", [])),
        ))
    names = {p.name for p in products}
    zone_names = set(zones)
    for p in products:
        if zone_names and p.zone not in zone_names:
            raise BadEnum(f"product {p.name!r} declares unknown zone {p.zone!r}")
    dataflows = []
    for f in raw.get("dataflows", []):
        if f["src"] not in names:
            raise DanglingReference(f"dataflow source {f['src']!r} is not a declared product")
        if f["dst"] not in names:
            raise DanglingReference(f"dataflow target {f['dst']!r} is not a declared product")
        dataflows.append(Dataflow(f["src"], f["dst"], f.get("protocol", "")))
    profiles = {}
    for name, prof in raw.get("controlProfiles", {}).items():
        controls = list(prof.get("controls", []))
        allow = [tuple(pair) for pair in prof.get("allowlist", [])]
        profiles[name] = ControlProfileSpec(name=name, controls=controls, allowlist=allow)
    return TestbedSpec(
        zones=zones,
        products=products,
        dataflows=dataflows,
        control_profiles=profiles,
        cpe_overrides=dict(raw.get("cpeOverrides", {})),
    )


def load_testbed_into_graph(graph: Graph, testbed: TestbedSpec,
                            risk_config: RiskConfig) -> int:
    """Materialize products, zones and protocols as graph nodes.

    Product criticality comes from the explicit per-product value when
    present, otherwise from the asset-class defaults in the risk config.
    Returns the number of Product nodes created.
    """
    for zone in testbed.zones:
        graph.upsert_node(Node(id=f"zone:{zone}", kind=NodeKind.ZONE,
                               props={"name": zone}))
    protocols = sorted({proto for p in testbed.products for proto in p.protocols}
                       | {f.protocol for f in testbed.dataflows if f.protocol})
    for proto in protocols:
        graph.upsert_node(Node(id=f"protocol:{proto}", kind=NodeKind.PROTOCOL,
                               props={"name": proto}))
    count = 0
    for p in testbed.products:
        crit = p.criticality if p.criticality is not None \
            else risk_config.default_criticality(p.asset_class)
        graph.upsert_node(Node(
            id=p.name,
            kind=NodeKind.PRODUCT,
            props={"name": p.name, "vendor": p.vendor, "assetClass": p.asset_class},
            criticality=crit,
            zone=p.zone,
        ))
        graph.upsert_edge(Edge(p.name, f"zone:{p.zone}", EdgeKind.IN_ZONE))
        for proto in p.protocols:
            graph.upsert_edge(Edge(p.name, f"protocol:{proto}", EdgeKind.USES_PROTOCOL))
        count += 1
    return count


def build_dataflow_edges(graph: Graph, testbed: TestbedSpec) -> int:
    """One COMMUNICATES_WITH edge per observed dataflow; duplicates merge."""
    before = {e.key for e in graph.edges(EdgeKind.COMMUNICATES_WITH)}
    for flow in testbed.dataflows:
        graph.upsert_edge(Edge(flow.src, flow.dst, EdgeKind.COMMUNICATES_WITH,
                               props={"protocol": flow.protocol}))
    after = {e.key for e in graph.edges(EdgeKind.COMMUNICATES_WITH)}
    return len(after - before)


# ---------------------------------------------------------------------------
# Product <-> CPE matching and vulnerability linking
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def _cpe_vendor_product(cpe: str) -> tuple[str, str]:
    """Extract the vendor and product fields of a ``cpe:2.3:part:...`` URI."""
    parts = cpe.split(":")
    if len(parts) >= 5 and parts[0] == "cpe":
        return parts[3].lower(), parts[4].lower()
    return "", cpe.lower()


def match_product_cpes(product: TestbedProduct, cpes: Iterable[str],
                       overrides: Optional[dict[str, str]] = None) -> list[str]:
    """Case-insensitive (vendor, product) token match with explicit overrides.

    Advisory product names keep their original form, so the match is fuzzy:
    the CPE vendor must equal the product vendor (token-wise) and every CPE
    product token must appear among the product-name tokens.
    """
    overrides = overrides or {}
    matched = []
    override = overrides.get(product.name)
    vendor_tokens = _tokens(product.vendor)
    name_tokens = _tokens(product.name)
    for cpe in cpes:
        if override is not None:
            if cpe == override:
                matched.append(cpe)
            continue
        cpe_vendor, cpe_product = _cpe_vendor_product(cpe)
        if _tokens(cpe_vendor) != vendor_tokens:
            continue
        product_tokens = _tokens(cpe_product)
        if product_tokens and product_tokens <= name_tokens:
            matched.append(cpe)
    return matched


def link_products(graph: Graph, testbed: TestbedSpec,
                  advisories: list[VulnRecord]) -> int:
    """Create Vulnerability nodes and Product->Vulnerability edges.

    Each product is matched against every advisory's CPE list; matched CVEs
    become Vulnerability nodes carrying their scoring metadata as properties.
    Unmatched products are logged as warnings, never fatal.  Returns the
    number of HAS_VULNERABILITY edges created.
    """
    cpe_index: dict[str, list[VulnRecord]] = {}
    for rec in advisories:
        for cpe in rec.cpes:
            cpe_index.setdefault(cpe, []).append(rec)
    all_cpes = sorted(cpe_index)
    edges = 0
    for product in testbed.products:
        matched = match_product_cpes(product, all_cpes, testbed.cpe_overrides)
        records = []
        seen = set()
        for cpe in matched:
            for rec in cpe_index[cpe]:
                if rec.cve_id not in seen:
                    seen.add(rec.cve_id)
                    records.append(rec)
        if not records:
            logger.warning("no advisory/CPE match for product %r", product.name)
            continue
        for rec in sorted(records, key=lambda r: r.cve_id):
            graph.upsert_node(Node(
                id=rec.cve_id,
                kind=NodeKind.VULNERABILITY,
                props={
                    "name": rec.cve_id,
                    "epss": repr(rec.epss),
                    "kev": "true" if rec.kev else "false",
                    "baseScore": repr(rec.cvss.base_score),
                    "accessComplexity": rec.cvss.access_complexity,
                    "attackVector": rec.cvss.attack_vector,
                    "status": rec.status,
                    "vendorStatements": " | ".join(rec.vendor_statements),
                },
            ))
            graph.upsert_edge(Edge(product.name, rec.cve_id, EdgeKind.HAS_VULNERABILITY))
            edges += 1
    return edges


# ---------------------------------------------------------------------------
# CSV loaders
# ---------------------------------------------------------------------------

def _open_reader(path: str | Path, required: list[str]) -> tuple[csv.DictReader, StringIO]:
    text = Path(path).read_text(encoding="utf-8")
    buf = StringIO(text)
    reader = csv.DictReader(buf)
    header = reader.fieldnames or []
    for col in required:
        if col not in header:
            raise MissingColumn(f"{path}: missing required column {col!r}")
    return reader, buf


def load_nodes(graph: Graph, path: str | Path) -> LoadResult:
    """Load node.csv rows; returns distinct accepted nodes and row issues."""
    reader, _ = _open_reader(path, NODE_CSV_HEADER)
    accepted: set[str] = set()
    issues: list[RowIssue] = []
    for row_num, row in enumerate(reader, start=1):
        kind_raw = (row.get("kind") or "").strip()
        try:
            kind = NodeKind(kind_raw)
        except ValueError:
            issues.append(RowIssue(row_num, "BadEnum", f"unknown node kind {kind_raw!r}"))
            continue
        props = {}
        props_raw = (row.get("props_json") or "").strip()
        if props_raw:
            try:
                props = {str(k): str(v) for k, v in json.loads(props_raw).items()}
            except (json.JSONDecodeError, AttributeError):
                issues.append(RowIssue(row_num, "InvalidRow", "unparseable props_json"))
                continue
        name = (row.get("name") or "").strip()
        if name:
            props.setdefault("name", name)
        crit_raw = (row.get("criticality") or "").strip()
        zone = (row.get("zone") or "").strip() or None
        try:
            node = Node(
                id=(row.get("id") or "").strip(),
                kind=kind,
                props=props,
                criticality=int(crit_raw) if crit_raw else 0,
                zone=zone,
            )
            graph.upsert_node(node)
        except (GraphError, ValueError) as exc:
            issues.append(RowIssue(row_num, "InvalidRow", str(exc)))
            continue
        accepted.add(node.id)
    return LoadResult(len(accepted), issues)


def load_relations(graph: Graph, path: str | Path) -> LoadResult:
    """Load relation.csv rows; dangling references are reported with their
    row number and skipped."""
    reader, _ = _open_reader(path, RELATION_CSV_HEADER)
    accepted: set[tuple[str, str, str]] = set()
    issues: list[RowIssue] = []
    for row_num, row in enumerate(reader, start=1):
        kind_raw = (row.get("kind") or "").strip()
        try:
            kind = EdgeKind(kind_raw)
        except ValueError:
            issues.append(RowIssue(row_num, "BadEnum", f"unknown edge kind {kind_raw!r}"))
            continue
        src = (row.get("src") or "").strip()
        dst = (row.get("dst") or "").strip()
        if not graph.has_node(src) or not graph.has_node(dst):
            missing = src if not graph.has_node(src) else dst
            issues.append(RowIssue(row_num, "DanglingReference",
                                   f"relation references unknown node {missing!r}"))
            continue
        props = {}
        props_raw = (row.get("props_json") or "").strip()
        if props_raw:
            try:
                props = {str(k): str(v) for k, v in json.loads(props_raw).items()}
            except (json.JSONDecodeError, AttributeError):
                issues.append(RowIssue(row_num, "InvalidRow", "unparseable props_json"))
                continue
        try:
            edge = Edge(src, dst, kind, props=props)
            graph.upsert_edge(edge)
        except GraphError as exc:
            issues.append(RowIssue(row_num, "InvalidRow", str(exc)))
            continue
        accepted.add(edge.key)
    return LoadResult(len(accepted), issues)


def load_edge_csv(graph: Graph, path: str | Path) -> LoadResult:
    """Re-ingest the edge-CSV export format (round-trip of view exports)."""
    reader, _ = _open_reader(path, EDGE_CSV_HEADER)
    accepted: set[tuple[str, str, str]] = set()
    issues: list[RowIssue] = []
    for row_num, row in enumerate(reader, start=1):
        kind_raw = (row.get("kind") or "").strip()
        try:
            kind = EdgeKind(kind_raw)
        except ValueError:
            issues.append(RowIssue(row_num, "BadEnum", f"unknown edge kind {kind_raw!r}"))
            continue
        src = (row.get("src") or "").strip()
        dst = (row.get("dst") or "").strip()
        if not graph.has_node(src) or not graph.has_node(dst):
            missing = src if not graph.has_node(src) else dst
            issues.append(RowIssue(row_num, "DanglingReference",
                                   f"edge references unknown node {missing!r}"))
            continue
        risk = None
        rw = (row.get("riskWeight") or "").strip()
        if rw:
            risk = RiskAttributes(
                control_strength=float(row.get("controlStrength") or 0.0),
                p_exploit=float(row.get("pExploit") or 0.0),
                attack_cost=float(row.get("attackCost") or 0.0),
                risk_weight=float(rw),
            )
        props = {}
        protocol = (row.get("protocol") or "").strip()
        if protocol:
            props["protocol"] = protocol
        try:
            edge = Edge(src, dst, kind, risk=risk, props=props)
            graph.upsert_edge(edge)
        except GraphError as exc:
            issues.append(RowIssue(row_num, "InvalidRow", str(exc)))
            continue
        accepted.add(edge.key)
    return LoadResult(len(accepted), issues)


def import_predictions(graph: Graph, path: str | Path,
                       min_confidence: float) -> LoadResult:
    """Import externally produced relation predictions above a confidence bar.

    Only the three prediction kinds are admissible; any other kind (or a
    confidence outside [0,1]) violates the file contract and raises BadEnum.
    Rows referencing unknown nodes are reported and skipped.
    """
    reader, _ = _open_reader(path, PREDICTION_CSV_HEADER)
    accepted: set[tuple[str, str, str]] = set()
    issues: list[RowIssue] = []
    for row_num, row in enumerate(reader, start=1):
        kind_raw = (row.get("kind") or "").strip()
        try:
            kind = EdgeKind(kind_raw)
        except ValueError:
            raise BadEnum(f"row {row_num}: unknown prediction kind {kind_raw!r}") from None
        if kind not in PREDICTION_KINDS:
            raise BadEnum(
                f"row {row_num}: {kind.value} is not a prediction kind "
                f"(expected one of {sorted(k.value for k in PREDICTION_KINDS)})")
        confidence = float(row.get("confidence") or 0.0)
        if not 0.0 <= confidence <= 1.0:
            raise BadEnum(f"row {row_num}: confidence {confidence} outside [0,1]")
        if confidence < min_confidence:
            continue
        src = (row.get("srcId") or "").strip()
        dst = (row.get("dstId") or "").strip()
        if not graph.has_node(src) or not graph.has_node(dst):
            missing = src if not graph.has_node(src) else dst
            issues.append(RowIssue(row_num, "DanglingReference",
                                   f"prediction references unknown node {missing!r}"))
            continue
        try:
            edge = Edge(src, dst, kind, props={"confidence": repr(confidence)})
            graph.upsert_edge(edge)
        except GraphError as exc:
            issues.append(RowIssue(row_num, "InvalidRow", str(exc)))
            continue
        accepted.add(edge.key)
    return LoadResult(len(accepted), issues)


# ---------------------------------------------------------------------------
# Full-fidelity graph state (pipeline persistence between CLI stages)
# ---------------------------------------------------------------------------

STATE_NODE_FILE = "nodes.csv"
STATE_EDGE_FILE = "edges.csv"
_STATE_EDGE_HEADER = ["src", "dst", "kind", "riskWeight", "pExploit", "attackCost",
                      "controlStrength", "props_json"]


def write_node_csv(graph: Graph) -> bytes:
    """Serialize every node in the node.csv interchange format, sorted by id."""
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NODE_CSV_HEADER)
    for node in graph.nodes():
        props = {k: v for k, v in node.props.items() if k != "name"}
        writer.writerow([
            node.id,
            node.kind.value,
            node.props.get("name", ""),
            node.zone or "",
            node.criticality if node.kind is NodeKind.PRODUCT else "",
            props_to_json(props),
        ])
    return buf.getvalue().encode("utf-8")


def save_state(graph: Graph, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / STATE_NODE_FILE).write_bytes(write_node_csv(graph))
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_STATE_EDGE_HEADER)
    for e in graph.edges():
        if e.risk is not None:
            risk_cols = [repr(e.risk.risk_weight), repr(e.risk.p_exploit),
                         repr(e.risk.attack_cost), repr(e.risk.control_strength)]
        else:
            risk_cols = ["", "", "", ""]
        writer.writerow([e.src, e.dst, e.kind.value] + risk_cols + [props_to_json(e.props)])
    (directory / STATE_EDGE_FILE).write_text(buf.getvalue(), encoding="utf-8")


def load_state(directory: str | Path) -> Graph:
    directory = Path(directory)
    graph = Graph()
    result = load_nodes(graph, directory / STATE_NODE_FILE)
    if result.issues:
        raise DanglingReference(
            f"corrupt state in {directory}: {result.issues[0].message}")
    reader, _ = _open_reader(directory / STATE_EDGE_FILE, _STATE_EDGE_HEADER)
    for row_num, row in enumerate(reader, start=1):
        kind = EdgeKind((row.get("kind") or "").strip())
        risk = None
        rw = (row.get("riskWeight") or "").strip()
        if rw:
            risk = RiskAttributes(
                control_strength=float(row.get("controlStrength") or 0.0),
                p_exploit=float(row.get("pExploit") or 0.0),
                attack_cost=float(row.get("attackCost") or 0.0),
                risk_weight=float(rw),
            )
        props_raw = (row.get("props_json") or "").strip()
        props = {str(k): str(v) for k, v in json.loads(props_raw).items()} if props_raw else {}
        graph.upsert_edge(Edge(
            src=(row.get("src") or "").strip(),
            dst=(row.get("dst") or "").strip(),
            kind=kind,
            risk=risk,
            props=props,
        ))
    return graph
