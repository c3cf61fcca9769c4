"""Co-clustering network over universities and Girvan-Newman communities.

Nodes are universities; an edge's weight counts the estimation runs in
which both endpoints were ranked in the same group. Weights only matter
for thresholding and for modularity; betweenness treats every edge as
length one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .estimator import RunTrace

TIE_TOLERANCE = 1e-9


@dataclass
class CoClusterGraph:
    nodes: tuple
    # (i, j) with i < j, indices into nodes
    weights: dict[tuple[int, int], int] = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in self.nodes]
        for i, j in self.weights:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def edges_by_id(self) -> list[tuple]:
        return [(self.nodes[i], self.nodes[j], w) for (i, j), w in sorted(self.weights.items())]


@dataclass
class Community:
    members: list
    mean_estimated_rank: float | None = None
    mean_true_rank: float | None = None


@dataclass
class CommunitySet:
    communities: list[Community]
    modularity: float
    removed_edges: int = 0

    def partition(self) -> list[list]:
        return [c.members for c in self.communities]


def _run_groups(run) -> list[list]:
    if isinstance(run, RunTrace):
        # the seed group is given, not clustered
        return run.groups[1:]
    return list(run)


def build_cocluster_graph(runs: Iterable, nodes: Sequence) -> CoClusterGraph:
    """Count, over runs, how often each pair of nodes shares a group.

    ``runs`` holds :class:`RunTrace` objects (their rank groups after the
    seed group are used) or plain lists of groups of node indices.
    """
    nodes = tuple(nodes)
    n = len(nodes)
    weights: dict[tuple[int, int], int] = {}
    for run in runs:
        seen: set[int] = set()
        for group in _run_groups(run):
            group = sorted(group)
            if any(not 0 <= g < n for g in group):
                raise ValueError("group refers to a node outside the graph")
            if seen.intersection(group):
                raise ValueError("groups within one run overlap")
            seen.update(group)
            for pair in combinations(group, 2):
                weights[pair] = weights.get(pair, 0) + 1
    return CoClusterGraph(nodes, weights)


def threshold_edges(graph: CoClusterGraph, min_weight: int) -> CoClusterGraph:
    if min_weight < 1:
        raise ValueError("min_weight must be >= 1")
    kept = {e: w for e, w in graph.weights.items() if w >= min_weight}
    return CoClusterGraph(graph.nodes, kept)


def _brandes(adj: list[set[int]], sources: Iterable[int], scores: dict):
    for s in sources:
        order = []
        preds: dict[int, list[int]] = {s: []}
        sigma = {s: 1.0}
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(adj[v]):
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
                credit = sigma[v] / sigma[w] * (1.0 + delta[w])
                key = (v, w) if v < w else (w, v)
                scores[key] += credit
                delta[v] += credit


def _betweenness(adj: list[set[int]], edges: Iterable[tuple[int, int]], sources: Iterable[int]) -> dict:
    scores = dict.fromkeys(edges, 0.0)
    _brandes(adj, sources, scores)
    # each unordered pair was counted from both ends
    return {e: v / 2.0 for e, v in scores.items()}


def edge_betweenness(graph: CoClusterGraph) -> dict[tuple[int, int], float]:
    """Shortest-path edge betweenness; each unordered node pair counts once."""
    return _betweenness(graph.adjacency(), graph.weights, range(len(graph.nodes)))


def _component(adj: list[set[int]], start: int) -> set[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def connected_components(adj: list[set[int]]) -> list[list[int]]:
    seen: set[int] = set()
    parts = []
    for v in range(len(adj)):
        if v not in seen:
            comp = _component(adj, v)
            seen |= comp
            parts.append(sorted(comp))
    return parts


def modularity(graph: CoClusterGraph, parts: Sequence[Sequence[int]]) -> float:
    """Weighted Newman modularity of a partition given as node indices."""
    total = float(sum(graph.weights.values()))
    if total == 0.0:
        return 0.0
    label = {}
    for c, part in enumerate(parts):
        for v in part:
            label[v] = c
    inside = [0.0] * len(parts)
    degree = [0.0] * len(parts)
    for (i, j), w in graph.weights.items():
        degree[label[i]] += w
        degree[label[j]] += w
        if label[i] == label[j]:
            inside[label[i]] += w
    return sum(inside[c] / total - (degree[c] / (2.0 * total)) ** 2 for c in range(len(parts)))


def _pick_edge(scores: dict, weights: dict) -> tuple[int, int]:
    top = max(scores.values())
    tied = [e for e, v in scores.items() if v >= top - TIE_TOLERANCE * max(1.0, abs(top))]
    return min(tied, key=lambda e: (weights[e], e))


def _summarize(graph, parts, estimated, truth) -> list[Community]:
    out = []
    for part in parts:
        ids = [graph.nodes[v] for v in part]
        est = [estimated[i] for i in ids] if estimated else None
        tru = [truth[i] for i in ids if i in truth] if truth else None
        out.append(
            Community(
                ids,
                sum(est) / len(est) if est else None,
                sum(tru) / len(tru) if tru else None,
            )
        )
    return out


def girvan_newman(
    graph: CoClusterGraph,
    target: int | str = "modularity",
    estimated: dict | None = None,
    truth: dict | None = None,
) -> CommunitySet:
    """Divisive community detection by repeated removal of the busiest edge.

    ``target`` is either a community count, returned as soon as the graph
    falls into at least that many components, or ``"modularity"`` for the
    partition of highest weighted modularity seen while dismantling the
    graph completely. Among edges of equal betweenness the lightest goes
    first, then the lexicographically smallest index pair.
    """
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    by_count = not isinstance(target, str)
    if not by_count and target != "modularity":
        raise ValueError(f"unknown target {target!r}")

    adj = graph.adjacency()
    weights = dict(graph.weights)
    parts = connected_components(adj)
    best_parts, best_q = parts, modularity(graph, parts)
    scores = _betweenness(adj, weights, range(len(adj)))
    removed = 0

    while weights:
        if by_count and len(parts) >= target:
            break
        u, v = _pick_edge(scores, weights)
        del weights[(u, v)]
        del scores[(u, v)]
        adj[u].discard(v)
        adj[v].discard(u)
        removed += 1
        # only edges inside the touched component(s) change betweenness
        touched = _component(adj, u) | _component(adj, v)
        local = [e for e in weights if e[0] in touched]
        scores.update(_betweenness(adj, local, sorted(touched)))
        if v not in _component(adj, u):
            parts = connected_components(adj)
            q = modularity(graph, parts)
            if not by_count and q > best_q + TIE_TOLERANCE:
                best_parts, best_q = parts, q

    if by_count:
        best_parts, best_q = parts, modularity(graph, parts)
    return CommunitySet(_summarize(graph, best_parts, estimated, truth), best_q, removed)
