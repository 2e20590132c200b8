"""Graph algorithms over configuration views.

All algorithms are read-only, deterministic, and tie-broken lexicographically
by external node id.  Views are multigraphs (a pair can carry both an
observed and an inferred link): path finding collapses parallel edges to the
cheapest one under the active weight policy, while centrality and community
projections sum parallel edge weights.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from icskg.errors import EmptyGraph
from icskg.graph import Configuration, Edge, GraphView
from icskg.risk import exposure

_MIN_PROB = 1e-9


class WeightPolicy(Enum):
    HOP = "Hop"                      # unit edge weights
    RISK_COST = "RiskCost"           # riskWeight as traversal cost
    MAX_LIKELIHOOD = "MaxLikelihood"  # -ln(pExploit), maximizes path probability

    def edge_cost(self, edge: Edge) -> float:
        if self is WeightPolicy.HOP:
            return 1.0
        rw = edge.risk.risk_weight if edge.risk is not None else 0.0
        if self is WeightPolicy.RISK_COST:
            return rw
        p = edge.risk.p_exploit if edge.risk is not None else 0.0
        return -math.log(max(p, _MIN_PROB))


@dataclass
class PathResult:
    nodes: list[str]
    path_probability: float
    total_cost: float

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1


# ---------------------------------------------------------------------------
# Pair-collapsed adjacency
# ---------------------------------------------------------------------------

class _PathGraph:
    """Integer-indexed undirected adjacency for one (view, policy) pair.

    Node ids are ranked in sorted order so integer tuple comparisons realize
    lexicographic id tie-breaking; parallel edges collapse to the cheapest
    one under the policy (ties broken by edge kind name).
    """

    def __init__(self, view: GraphView, policy: WeightPolicy) -> None:
        ids = sorted({n for e in view.edges for n in (e.src, e.dst)}
                     | set(view.nodes()))
        self.ids = ids
        self.rank = {u: i for i, u in enumerate(ids)}
        best: dict[tuple[int, int], tuple[float, str, Edge]] = {}
        for e in view.edges:
            cost = policy.edge_cost(e)
            i, j = self.rank[e.src], self.rank[e.dst]
            key = (i, j) if i < j else (j, i)
            cand = (cost, e.kind.value, e)
            if key not in best or (cand[0], cand[1]) < (best[key][0], best[key][1]):
                best[key] = cand
        self.adj: list[list[tuple[int, float]]] = [[] for _ in ids]
        self.edge_for: dict[tuple[int, int], Edge] = {}
        for (i, j), (cost, _, edge) in best.items():
            self.adj[i].append((j, cost))
            self.adj[j].append((i, cost))
            self.edge_for[(i, j)] = edge
            self.edge_for[(j, i)] = edge
        for lst in self.adj:
            lst.sort()

    def names(self, path: tuple[int, ...]) -> list[str]:
        return [self.ids[i] for i in path]

    def edges_along(self, path: tuple[int, ...]) -> list[Edge]:
        return [self.edge_for[(a, b)] for a, b in zip(path, path[1:])]


def _weight_adjacency(view: GraphView, weighted: bool) -> dict[str, dict[str, float]]:
    """Undirected adjacency with parallel edges summed; weight 1 per edge in
    the unweighted projection, riskWeight otherwise."""
    adj: dict[str, dict[str, float]] = {n: {} for n in view.nodes()}
    for e in view.edges:
        w = (e.risk.risk_weight if e.risk is not None else 0.0) if weighted else 1.0
        adj.setdefault(e.src, {})
        adj.setdefault(e.dst, {})
        adj[e.src][e.dst] = adj[e.src].get(e.dst, 0.0) + w
        adj[e.dst][e.src] = adj[e.dst].get(e.src, 0.0) + w
    return adj


def _make_result(pg: _PathGraph, path: tuple[int, ...], cost: float) -> PathResult:
    prob = 1.0
    for e in pg.edges_along(path):
        prob *= e.risk.p_exploit if e.risk is not None else 0.0
    return PathResult(pg.names(path), prob, cost)


# ---------------------------------------------------------------------------
# Shortest paths
# ---------------------------------------------------------------------------

def _dijkstra_raw(pg: _PathGraph, src: int, dst: int,
                  banned_nodes: frozenset[int] = frozenset(),
                  banned_pairs: frozenset[tuple[int, int]] = frozenset(),
                  ) -> Optional[tuple[float, tuple[int, ...]]]:
    """Min-cost path with lexicographic tie-breaking on the node sequence.

    Heap keys are (cost, path) tuples over sorted-id ranks, so among
    equal-cost routes the lexicographically smallest settles first; with
    non-negative costs the first pop of ``dst`` is the canonical minimum.
    """
    if src in banned_nodes or dst in banned_nodes:
        return None
    adj = pg.adj
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]
    visited: set[int] = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node == dst:
            return cost, path
        if node in visited:
            continue
        visited.add(node)
        for nbr, w in adj[node]:
            if nbr in visited or nbr in banned_nodes:
                continue
            if (node, nbr) in banned_pairs or (nbr, node) in banned_pairs:
                continue
            heapq.heappush(heap, (cost + w, path + (nbr,)))
    return None


def dijkstra(view: GraphView, src: str, dst: str,
             policy: WeightPolicy = WeightPolicy.RISK_COST) -> Optional[PathResult]:
    """Cheapest path under the policy, or None when dst is unreachable."""
    view.graph.node(src)
    view.graph.node(dst)
    pg = _PathGraph(view, policy)
    found = _dijkstra_raw(pg, pg.rank[src], pg.rank[dst])
    if found is None:
        return None
    cost, path = found
    return _make_result(pg, path, cost)


def yen_k_shortest(view: GraphView, src: str, dst: str, k: int,
                   policy: WeightPolicy = WeightPolicy.RISK_COST
                   ) -> list[PathResult]:
    """Up to k cheapest loopless paths, sorted by (cost, node sequence).

    Returns an empty list when no route exists.  Spur exploration starts at
    each accepted path's deviation index (Lawler's reduction), which keeps
    the candidate set complete while skipping already-covered prefixes.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if src == dst:
        raise ValueError("source and target must differ")
    view.graph.node(src)
    view.graph.node(dst)
    pg = _PathGraph(view, policy)
    s, t = pg.rank[src], pg.rank[dst]
    first = _dijkstra_raw(pg, s, t)
    if first is None:
        return []
    cost_of: dict[tuple[int, int], float] = {}
    for i, lst in enumerate(pg.adj):
        for j, w in lst:
            cost_of[(i, j)] = w

    accepted: list[tuple[float, tuple[int, ...]]] = [first]
    deviation: dict[tuple[int, ...], int] = {first[1]: 0}
    candidates: list[tuple[float, tuple[int, ...]]] = []
    seen: set[tuple[int, ...]] = {first[1]}

    while len(accepted) < k:
        prev_cost, prev_nodes = accepted[-1]
        prefix = 0.0
        for i in range(len(prev_nodes) - 1):
            if i >= deviation[prev_nodes]:
                spur = prev_nodes[i]
                root = prev_nodes[:i + 1]
                banned_pairs = set()
                for _, nodes in accepted:
                    if nodes[:i + 1] == root and len(nodes) > i + 1:
                        banned_pairs.add((nodes[i], nodes[i + 1]))
                banned_nodes = frozenset(root[:-1])
                spur_found = _dijkstra_raw(pg, spur, t,
                                           banned_nodes=banned_nodes,
                                           banned_pairs=frozenset(banned_pairs))
                if spur_found is not None:
                    spur_cost, spur_nodes = spur_found
                    total_nodes = root[:-1] + spur_nodes
                    if len(set(total_nodes)) == len(total_nodes) \
                            and total_nodes not in seen:
                        heapq.heappush(candidates, (prefix + spur_cost, total_nodes))
                        deviation[total_nodes] = i
                        seen.add(total_nodes)
            prefix += cost_of[(prev_nodes[i], prev_nodes[i + 1])]
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))
    results = [_make_result(pg, nodes, cost) for cost, nodes in accepted]
    results.sort(key=lambda r: (r.total_cost, r.nodes))
    return results


# ---------------------------------------------------------------------------
# Centralities
# ---------------------------------------------------------------------------

def pagerank(view: GraphView, damping: float = 0.85, tol: float = 1e-8,
             weighted: bool = False, max_iter: int = 1000) -> dict[str, float]:
    """Power iteration with uniform teleportation over all view nodes.

    Nodes with no (or zero-weight) attachments contribute their rank mass
    uniformly, the standard dangling-node treatment; scores sum to 1.
    """
    nodes = view.nodes()
    if not nodes:
        raise EmptyGraph("pagerank requires a non-empty view")
    adj = _weight_adjacency(view, weighted)
    n = len(nodes)
    out_weight = {u: sum(adj.get(u, {}).values()) for u in nodes}
    rank = {u: 1.0 / n for u in nodes}
    for _ in range(max_iter):
        dangling = sum(rank[u] for u in nodes if out_weight[u] == 0.0)
        nxt = {}
        for v in nodes:
            incoming = 0.0
            for u, w in adj.get(v, {}).items():
                if out_weight[u] > 0.0:
                    incoming += rank[u] * w / out_weight[u]
            nxt[v] = (1.0 - damping) / n + damping * (incoming + dangling / n)
        delta = sum(abs(nxt[u] - rank[u]) for u in nodes)
        rank = nxt
        if delta < tol:
            break
    return {u: rank[u] for u in nodes}


def betweenness(view: GraphView, weighted: bool = False) -> dict[str, float]:
    """Exact betweenness via Brandes accumulation (unnormalized pair counts,
    each unordered pair counted once)."""
    nodes = view.nodes()
    if not nodes:
        raise EmptyGraph("betweenness requires a non-empty view")
    adj = _weight_adjacency(view, weighted=False)
    cost: dict[tuple[str, str], float] = {}
    if weighted:
        best: dict[frozenset[str], float] = {}
        for e in view.edges:
            w = e.risk.risk_weight if e.risk is not None else 0.0
            pair = e.pair
            if pair not in best or w < best[pair]:
                best[pair] = w
        for pair, w in best.items():
            u, v = sorted(pair)
            cost[(u, v)] = w
            cost[(v, u)] = w
    score = {u: 0.0 for u in nodes}
    for s in nodes:
        sigma = {u: 0.0 for u in nodes}
        dist = {u: math.inf for u in nodes}
        preds: dict[str, list[str]] = {u: [] for u in nodes}
        sigma[s] = 1.0
        dist[s] = 0.0
        order: list[str] = []
        if not weighted:
            queue = [s]
            while queue:
                u = queue.pop(0)
                order.append(u)
                for v in sorted(adj.get(u, {})):
                    if dist[v] == math.inf:
                        dist[v] = dist[u] + 1
                        queue.append(v)
                    if dist[v] == dist[u] + 1:
                        sigma[v] += sigma[u]
                        preds[v].append(u)
        else:
            heap = [(0.0, s)]
            done = set()
            while heap:
                d, u = heapq.heappop(heap)
                if u in done:
                    continue
                done.add(u)
                order.append(u)
                for v in sorted(adj.get(u, {})):
                    nd = d + cost[(u, v)]
                    if nd < dist[v]:
                        dist[v] = nd
                        sigma[v] = sigma[u]
                        preds[v] = [u]
                        heapq.heappush(heap, (nd, v))
                    elif nd == dist[v] and v not in done:
                        sigma[v] += sigma[u]
                        preds[v].append(u)
        delta = {u: 0.0 for u in nodes}
        for u in reversed(order):
            for p in preds[u]:
                delta[p] += sigma[p] / sigma[u] * (1.0 + delta[u])
            if u != s:
                score[u] += delta[u]
    return {u: score[u] / 2.0 for u in nodes}


# ---------------------------------------------------------------------------
# Louvain community detection
# ---------------------------------------------------------------------------

@dataclass
class Community:
    id: str
    size: int
    members: list[str]
    risk: float
    cascade: bool


@dataclass
class CommunityReport:
    communities: list[Community]
    modularity: float
    modularity_trace: list[float]

    def partition(self) -> dict[str, str]:
        return {m: c.id for c in self.communities for m in c.members}


def _modularity(partition: dict[str, int], adj: dict[str, dict[str, float]],
                two_m: float) -> float:
    if two_m == 0.0:
        return 0.0
    degree = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
    q = 0.0
    for u, nbrs in adj.items():
        for v, w in nbrs.items():
            if partition[u] == partition[v]:
                q += w - degree[u] * degree[v] / two_m
    return q / two_m


def louvain(view: GraphView, weighted: bool = False, seed: int = 0
            ) -> CommunityReport:
    """Greedy modularity maximization; deterministic under a fixed seed.

    The per-pass modularity trace is monotone non-decreasing.  A community
    is cascade-flagged when it contains an active edge with pExploit > 0.5
    whose endpoints sit in different zones.
    """
    nodes = view.nodes()
    if not nodes:
        raise EmptyGraph("louvain requires a non-empty view")
    base_adj = _weight_adjacency(view, weighted)
    two_m = sum(sum(nbrs.values()) for nbrs in base_adj.values())

    # Current aggregation level: community of each original node, plus the
    # super-graph adjacency between communities.
    node_comm = {u: u for u in nodes}
    level_adj: dict[str, dict[str, float]] = {
        u: dict(nbrs) for u, nbrs in base_adj.items()}
    self_loops = {u: 0.0 for u in nodes}
    trace: list[float] = []
    rng = random.Random(seed)

    while True:
        members = sorted(level_adj)
        comm = {u: u for u in members}
        degree = {u: sum(level_adj[u].values()) + 2.0 * self_loops[u] for u in members}
        comm_total = dict(degree)
        improved = False
        if two_m > 0.0:
            moving = True
            while moving:
                moving = False
                order = list(members)
                rng.shuffle(order)
                for u in order:
                    current = comm[u]
                    links: dict[str, float] = {}
                    for v, w in level_adj[u].items():
                        if v != u:
                            links[comm[v]] = links.get(comm[v], 0.0) + w
                    comm_total[current] -= degree[u]
                    base_gain = links.get(current, 0.0) - comm_total[current] * degree[u] / two_m
                    # Only strictly improving moves are taken, so modularity
                    # rises monotonically; ties go to the smallest community id.
                    best_comm, best_gain = current, base_gain
                    for target in sorted(links):
                        if target == current:
                            continue
                        gain = links[target] - comm_total[target] * degree[u] / two_m
                        if gain > best_gain + 1e-12:
                            best_comm, best_gain = target, gain
                    comm_total[best_comm] += degree[u]
                    if best_comm != current:
                        comm[u] = best_comm
                        moving = True
                        improved = True
        partition = {orig: comm[node_comm[orig]] for orig in nodes}
        comm_index = {c: i for i, c in enumerate(sorted(set(partition.values())))}
        q = _modularity({u: comm_index[partition[u]] for u in nodes}, base_adj, two_m)
        if trace and q <= trace[-1] + 1e-12:
            # The pass brought no real gain; keep the previous partition.
            break
        trace.append(q)
        if not improved:
            break
        # Aggregate communities into super-nodes for the next pass.
        node_comm = partition
        groups: dict[str, list[str]] = {}
        for u in members:
            groups.setdefault(comm[u], []).append(u)
        new_adj: dict[str, dict[str, float]] = {c: {} for c in groups}
        new_loops = {c: 0.0 for c in groups}
        for c, group in groups.items():
            for u in group:
                new_loops[c] += self_loops[u]
                for v, w in level_adj[u].items():
                    cv = comm[v]
                    if cv == c:
                        if u < v:
                            new_loops[c] += w
                    else:
                        new_adj[c][cv] = new_adj[c].get(cv, 0.0) + w
        level_adj = new_adj
        self_loops = new_loops

    final_partition = {u: node_comm[u] for u in nodes}
    groups2: dict[str, list[str]] = {}
    for u in nodes:
        groups2.setdefault(final_partition[u], []).append(u)
    zone_of = {u: view.graph.node(u).zone for u in nodes}
    member_sets = {c: set(ms) for c, ms in groups2.items()}
    cascade: dict[str, bool] = {c: False for c in groups2}
    for e in view.edges:
        if e.risk is None or e.risk.p_exploit <= 0.5:
            continue
        if zone_of.get(e.src) == zone_of.get(e.dst):
            continue
        for c, ms in member_sets.items():
            if e.src in ms and e.dst in ms:
                cascade[c] = True
                break
    ordered = sorted(groups2.items(), key=lambda kv: (-len(kv[1]), min(kv[1])))
    communities = []
    for i, (c, ms) in enumerate(ordered):
        members_sorted = sorted(ms)
        risk = sum(exposure(view, m) for m in members_sorted)
        communities.append(Community(
            id=f"C{i}", size=len(ms), members=members_sorted,
            risk=risk, cascade=cascade[c]))
    return CommunityReport(communities=communities, modularity=trace[-1],
                           modularity_trace=trace)


# ---------------------------------------------------------------------------
# Ranking reports
# ---------------------------------------------------------------------------

def rank_interproduct_risk(view: GraphView, top_n: int) -> list[dict]:
    """Top communication links by riskWeight (ties: attackCost desc, then
    lexicographic source/target)."""
    rows = []
    for e in view.edges:
        if e.risk is None:
            continue
        rows.append({
            "source": e.src,
            "target": e.dst,
            "risk": e.risk.risk_weight,
            "exploitProb": e.risk.p_exploit,
            "attackCost": e.risk.attack_cost,
        })
    rows.sort(key=lambda r: (-r["risk"], -r["attackCost"], r["source"], r["target"]))
    return rows[:top_n]


def residual_risk_report(views: dict[Configuration, GraphView]) -> list[dict]:
    """Per-product exposure across the three configurations.

    delta = after - raw; reductionPct = round(100 * after / raw), with
    zero raw exposure reported as 100.  Rows are sorted by raw exposure
    descending, then by product id.
    """
    original = views[Configuration.ORIGINAL]
    enriched = views[Configuration.ENRICHED]
    controlled = views[Configuration.CONTROLLED]
    rows = []
    for product in original.nodes():
        raw = exposure(original, product)
        enr = exposure(enriched, product)
        after = exposure(controlled, product)
        reduction = round(100.0 * after / raw) if raw > 0.0 else 100
        rows.append({
            "product": product,
            "zone": original.graph.node(product).zone or "",
            "raw": raw,
            "enriched": enr,
            "after": after,
            "delta": after - raw,
            "reductionPct": int(reduction),
        })
    rows.sort(key=lambda r: (-r["raw"], r["product"]))
    return rows
