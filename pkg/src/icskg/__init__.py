"""icskg - industrial security knowledge graph and attack-propagation toolkit.

Builds a typed property graph out of vulnerability taxonomies (CVE, CWE,
CAPEC, ATT&CK tactics/techniques) and a local testbed description, scores
communication links from operational logs, and simulates multi-stage attack
propagation under three topology configurations (Original / Enriched /
Controlled).
"""

from icskg.graph import (
    Configuration,
    Edge,
    EdgeKind,
    Graph,
    GraphView,
    Node,
    NodeKind,
    RiskAttributes,
)

__version__ = "0.1.0"

__all__ = [
    "Configuration",
    "Edge",
    "EdgeKind",
    "Graph",
    "GraphView",
    "Node",
    "NodeKind",
    "RiskAttributes",
    "__version__",
]
