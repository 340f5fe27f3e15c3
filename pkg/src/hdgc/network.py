"""Spillover networks: MedRV, all-pairs Granger tests, and Girvan-Newman
communities on the undirected skeleton of the resulting graph."""

from __future__ import annotations

import json
import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from .pdslm import GCTestSpec, gc_test
from .tuning import TuningRule
from .varsim import TimeSeriesPanel

__all__ = [
    "MEDRV_CONST",
    "medrv",
    "medrv_days",
    "Edge",
    "SpilloverNetwork",
    "CommunityPartition",
    "spillover_network",
    "edge_betweenness",
    "modularity",
    "girvan_newman",
]

MEDRV_CONST = math.pi / (6.0 - 4.0 * math.sqrt(3.0) + math.pi)


def medrv(returns) -> float:
    """Median realized variance of one day of ``M >= 3`` intraday returns."""
    a = np.abs(np.asarray(returns, dtype=float))
    if a.ndim != 1 or a.size < 3:
        raise ValueError("MedRV needs at least 3 intraday returns")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite intraday return")
    M = a.size
    med = np.median(np.vstack([a[:-2], a[1:-1], a[2:]]), axis=0)
    return float(MEDRV_CONST * (M / (M - 2)) * np.sum(med ** 2))


def medrv_days(intraday: np.ndarray) -> np.ndarray:
    """MedRV for each row of a (days x M) return matrix."""
    return np.array([medrv(day) for day in np.atleast_2d(intraday)])


# ---------------------------------------------------------------- network

@dataclass
class Edge:
    source: str
    target: str
    p_value: float | None
    statistic: float | None
    S_star: int | None = None
    error: str | None = None


@dataclass
class SpilloverNetwork:
    nodes: tuple
    tests: list  # every directed pair, significant or not
    alpha: float
    design_kind: str

    @property
    def edges(self) -> list[Edge]:
        return [e for e in self.tests
                if e.error is None and e.p_value is not None and e.p_value < self.alpha]

    @property
    def errors(self) -> list[Edge]:
        return [e for e in self.tests if e.error is not None]

    def digraph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for e in self.edges:
            g.add_edge(e.source, e.target, p_value=e.p_value, statistic=e.statistic)
        return g

    def skeleton(self) -> nx.Graph:
        """Undirected graph with an edge wherever either direction is significant."""
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((e.source, e.target) for e in self.edges)
        return g

    def to_dot(self, name: str = "spillover") -> str:
        lines = [f'digraph "{name}" {{']
        lines += [f'  "{n}";' for n in self.nodes]
        for e in self.edges:
            lines.append(f'  "{e.source}" -> "{e.target}" [p_value={e.p_value:.6g}, '
                         f'label="{e.p_value:.3g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        adjacency = {n: [] for n in self.nodes}
        for e in self.edges:
            adjacency[e.source].append({"target": e.target, "p_value": e.p_value,
                                        "statistic": e.statistic})
        return {
            "nodes": list(self.nodes),
            "alpha": self.alpha,
            "design": self.design_kind,
            "n_edges": len(self.edges),
            "adjacency": adjacency,
            "errors": [{"source": e.source, "target": e.target, "error": e.error}
                       for e in self.errors],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _pair_test(args):
    panel, spec = args
    try:
        res = gc_test(panel, spec)
        return res.p_value, res.statistic, res.S_star, None
    except Exception as exc:  # recorded per edge, never fatal for the network
        return None, None, None, f"{type(exc).__name__}: {exc}"


def spillover_network(
    panel: TimeSeriesPanel,
    design: str = "vhar",
    tuning: TuningRule | None = None,
    alpha: float = 0.01,
    statistic: str | None = None,
    lags: int = 1,
    baseline: str | None = None,
    workers: int = 1,
) -> SpilloverNetwork:
    """Test every ordered pair ``k -> i`` and keep edges with ``p < alpha``.

    The default statistic is the heteroskedasticity-robust LM for VHAR
    designs and the F-form LM otherwise. With ``baseline='bivariate'`` each
    pair is tested in the two-series system only (no selection), which is
    the omitted-variable-prone comparison graph. No multiple-testing
    correction is applied.
    """
    if panel.K < 2:
        raise ValueError("a network needs at least two series")
    if baseline not in (None, "bivariate"):
        raise ValueError(f"unknown baseline {baseline!r}")
    tuning = tuning or TuningRule(kind="bic")
    statistic = statistic or ("lm_het" if design == "vhar" else "lm_f")
    jobs, pairs = [], []
    for k in range(panel.K):
        for i in range(panel.K):
            if i == k:
                continue
            spec = GCTestSpec(target=i, cause=k, lags=lags, design=design, tuning=tuning,
                              statistic=statistic, alpha=alpha)
            if baseline == "bivariate":
                jobs.append((panel.subset([i, k]), replace(spec, target=0, cause=1,
                                                           selection="full")))
            else:
                jobs.append((panel, spec))
            pairs.append((panel.names[k], panel.names[i]))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_pair_test, jobs, chunksize=8))
    else:
        outcomes = [_pair_test(j) for j in jobs]
    tests = [Edge(src, dst, p, s, ss, err) for (src, dst), (p, s, ss, err) in zip(pairs, outcomes)]
    return SpilloverNetwork(panel.names, tests, alpha, design if design == "vhar" else f"var({lags})")


# ---------------------------------------------------------------- communities

def _edge_key(u, v, pos):
    return (u, v) if pos[u] <= pos[v] else (v, u)


def edge_betweenness(graph: nx.Graph) -> dict:
    """Unnormalized edge betweenness over unordered node pairs (Brandes accumulation).

    Keys are ``(u, v)`` with ``u`` before ``v`` in ``graph.nodes`` order.
    Pairs in different components contribute nothing.
    """
    nodes = list(graph.nodes)
    pos = {n: i for i, n in enumerate(nodes)}
    adj = {n: list(graph.neighbors(n)) for n in nodes}
    score = {_edge_key(u, v, pos): 0.0 for u, v in graph.edges if u != v}
    for s in nodes:
        sigma = {s: 1.0}
        dist = {s: 0}
        preds: dict = {s: []}
        order = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    sigma[w] = 0.0
                    preds[w] = []
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(order, 0.0)
        for w in reversed(order):
            for v in preds[w]:
                c = sigma[v] / sigma[w] * (1.0 + delta[w])
                score[_edge_key(v, w, pos)] += c
                delta[v] += c
    # every unordered pair was counted from both endpoints
    return {e: b / 2.0 for e, b in score.items()}


def modularity(graph: nx.Graph, communities) -> float:
    """Newman modularity; 0 for an edgeless graph."""
    m = graph.number_of_edges()
    if m == 0:
        return 0.0
    deg = dict(graph.degree())
    q = 0.0
    for comm in communities:
        comm = set(comm)
        inner = sum(1 for u, v in graph.edges if u in comm and v in comm)
        dsum = sum(deg[n] for n in comm)
        q += inner / m - (dsum / (2.0 * m)) ** 2
    return q


@dataclass
class CommunityPartition:
    assignment: dict
    modularity: float
    removal_sequence: list = field(default_factory=list)

    @property
    def communities(self) -> list[list]:
        groups: dict = {}
        for node, cid in self.assignment.items():
            groups.setdefault(cid, []).append(node)
        return [groups[c] for c in sorted(groups)]

    def to_csv(self) -> str:
        rows = ["node,community"] + [f"{n},{c}" for n, c in self.assignment.items()]
        return "\n".join(rows) + "\n"


def _components(graph: nx.Graph, nodes: list) -> list[list]:
    pos = {n: i for i, n in enumerate(nodes)}
    comps = [sorted(c, key=pos.__getitem__) for c in nx.connected_components(graph)]
    return sorted(comps, key=lambda c: pos[c[0]])


def girvan_newman(graph: nx.Graph) -> CommunityPartition:
    """Remove the highest-betweenness edge until no edges remain; keep the best-modularity split.

    Betweenness is recomputed after each removal. Ties between edges are
    broken by the smallest ``(u, v)`` position pair; ties in modularity
    favour the earlier (coarser) partition.
    """
    g = nx.Graph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from((u, v) for u, v in graph.edges if u != v)
    nodes = list(g.nodes)
    if not nodes:
        raise ValueError("empty graph")
    pos = {n: i for i, n in enumerate(nodes)}
    work = g.copy()
    best = _components(work, nodes)
    best_q = modularity(g, best)
    n_comp = len(best)
    removed = []
    while work.number_of_edges():
        scores = edge_betweenness(work)
        top = max(scores.values())
        cands = [e for e, b in scores.items() if b >= top - 1e-9 * max(1.0, top)]
        u, v = min(cands, key=lambda e: (pos[e[0]], pos[e[1]]))
        work.remove_edge(u, v)
        removed.append((u, v, scores[(u, v)]))
        comps = _components(work, nodes)
        if len(comps) != n_comp:
            n_comp = len(comps)
            q = modularity(g, comps)
            if q > best_q + 1e-12:
                best, best_q = comps, q
    assignment = {}
    for cid, comp in enumerate(best):
        for node in comp:
            assignment[node] = cid
    assignment = {n: assignment[n] for n in nodes}
    return CommunityPartition(assignment, best_q, removed)
