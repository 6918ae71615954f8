"""Influence network formation at the trigger step.

When imitation switches on, the ten richest agents become leaders and seed
up to three communities, one per attitude class represented among them.
Community sizes are apportioned to the leader groups' wealth (largest
remainder), remaining agents are assigned uniformly at random, and each
community grows a directed scale-free graph: leaders first (mutually
unlinked), then followers in descending wealth order, each wiring to a few
existing nodes chosen preferentially by degree. Wiring to a leader yields a
single leader->follower edge, so leaders are heard but never listen
(in-degree stays 0); wiring to a follower yields edges both ways.

A robustness variant then swaps endpoint pairs across communities until a
requested fraction of edges is cross-community, preserving every node's
in- and out-degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AgentClass, classify_many

# Community labels are 1 + class code (1 prudent-led, 2 ordinary-led,
# 3 audacious-led); 0 marks an agent with no community, which cannot occur
# once the graph is built but keeps the dtype honest pre-trigger.
N_COMMUNITIES = 3


@dataclass(frozen=True)
class CommunitySpec:
    community: int
    leader_ids: np.ndarray
    follower_count: int

    @property
    def size(self) -> int:
        return len(self.leader_ids) + self.follower_count


@dataclass
class InteractionGraph:
    """Directed influence graph over all n agents."""

    n: int
    edges: np.ndarray  # (E, 2) int64 rows (src, dst): src influences dst
    community: np.ndarray  # (n,) int64, labels in {1..3}
    is_leader: np.ndarray  # (n,) bool

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.n)

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.n)

    def cross_community_edge_count(self) -> int:
        src_comm = self.community[self.edges[:, 0]]
        dst_comm = self.community[self.edges[:, 1]]
        return int((src_comm != dst_comm).sum())


def select_leaders(wealths: np.ndarray, count: int) -> np.ndarray:
    """Ids of the `count` richest agents; equal wealth resolves to lower id."""
    wealths = np.asarray(wealths, dtype=np.float64)
    if not 0 < count <= len(wealths):
        raise ValueError("leader count must lie in [1, n]")
    order = np.argsort(-wealths, kind="stable")
    return np.sort(order[:count])


def group_leaders_by_class(
    leader_ids: np.ndarray, alphas: np.ndarray, bounds
) -> dict[AgentClass, np.ndarray]:
    """Leaders keyed by their current attitude class; absent classes omitted."""
    codes = classify_many(np.asarray(alphas)[leader_ids], bounds)
    groups = {}
    for cls in AgentClass:
        ids = leader_ids[codes == int(cls)]
        if len(ids):
            groups[cls] = ids
    return groups


def partition_followers(
    leader_groups: dict[AgentClass, np.ndarray],
    wealths: np.ndarray,
    n: int,
) -> list[CommunitySpec]:
    """Split the non-leaders into communities sized by leader wealth.

    Largest-remainder apportionment: quotas proportional to each leader
    group's total wealth, floors assigned first, leftover seats to the
    largest fractional remainders (community number breaking ties).
    """
    if not leader_groups:
        raise ValueError("cannot partition followers without leaders")
    wealths = np.asarray(wealths, dtype=np.float64)
    total_leaders = sum(len(ids) for ids in leader_groups.values())
    followers_total = n - total_leaders
    if followers_total < 0:
        raise ValueError("more leaders than agents")

    classes = sorted(leader_groups)
    weights = np.array([wealths[leader_groups[c]].sum() for c in classes])
    if not weights.sum() > 0.0:
        raise ValueError("leader wealth must be positive to size communities")

    quotas = followers_total * weights / weights.sum()
    base = np.floor(quotas).astype(np.int64)
    remainder = quotas - base
    leftover = followers_total - int(base.sum())
    # Give leftover seats to the largest remainders; ties favour the lower
    # community number for determinism.
    order = sorted(range(len(classes)), key=lambda i: (-remainder[i], i))
    for i in order[:leftover]:
        base[i] += 1

    return [
        CommunitySpec(
            community=int(cls) + 1,
            leader_ids=np.asarray(leader_groups[cls], dtype=np.int64),
            follower_count=int(base[i]),
        )
        for i, cls in enumerate(classes)
    ]


def build_community_edges(
    leader_ids: np.ndarray,
    follower_ids: np.ndarray,
    wealths: np.ndarray,
    edges_per_node: int,
    rng: np.random.Generator,
) -> list[tuple[int, int]]:
    """Grow one community's scale-free wiring.

    Preferential attachment over attachment degree + 1: the +1 keeps the
    mutually unlinked leader seeds reachable before they earn any degree
    (standard initial-attractiveness variant). Every node joins the pool
    once on arrival and once per edge endpoint, so pool multiplicity is
    exactly degree + 1; sampling the pool uniformly is sampling nodes
    preferentially.
    """
    if edges_per_node < 1:
        raise ValueError("edges_per_node must be at least 1")
    edges: list[tuple[int, int]] = []
    pool: list[int] = [int(v) for v in leader_ids]
    existing = set(pool)
    leaders = set(pool)

    # Richer followers join earlier and end up better connected; equal
    # wealth resolves to lower id.
    insertion = sorted((int(f) for f in follower_ids), key=lambda f: (-wealths[f], f))
    for f in insertion:
        want = min(edges_per_node, len(existing))
        targets: list[int] = []
        while len(targets) < want:
            t = pool[int(rng.integers(len(pool)))]
            if t not in targets:
                targets.append(t)
        for t in targets:
            if t in leaders:
                edges.append((t, f))
            else:
                edges.append((t, f))
                edges.append((f, t))
        pool.extend(targets)
        pool.extend([f] * (1 + len(targets)))
        existing.add(f)
    return edges


def build_interaction_graph(
    wealths: np.ndarray,
    alphas: np.ndarray,
    *,
    leader_count: int,
    edges_per_node: int,
    bounds,
    seed: int,
) -> InteractionGraph:
    """Form leaders, communities and wiring from the current wealth snapshot."""
    from .rng import keyed_generator  # local import avoids cycle at module load

    wealths = np.asarray(wealths, dtype=np.float64)
    n = len(wealths)
    leader_ids = select_leaders(wealths, leader_count)
    groups = group_leaders_by_class(leader_ids, alphas, bounds)
    specs = partition_followers(groups, wealths, n)

    is_leader = np.zeros(n, dtype=bool)
    is_leader[leader_ids] = True
    community = np.zeros(n, dtype=np.int64)
    for spec in specs:
        community[spec.leader_ids] = spec.community

    follower_ids = np.flatnonzero(~is_leader)
    assign_rng = keyed_generator(seed, "followers")
    shuffled = follower_ids[assign_rng.permutation(len(follower_ids))]
    edges: list[tuple[int, int]] = []
    offset = 0
    for spec in specs:
        members = shuffled[offset : offset + spec.follower_count]
        offset += spec.follower_count
        community[members] = spec.community
        ba_rng = keyed_generator(seed, "attach", spec.community)
        edges.extend(
            build_community_edges(
                spec.leader_ids, members, wealths, edges_per_node, ba_rng
            )
        )

    edge_arr = (
        np.array(edges, dtype=np.int64) if edges else np.empty((0, 2), dtype=np.int64)
    )
    return InteractionGraph(
        n=n, edges=edge_arr, community=community, is_leader=is_leader
    )


def rewire_cross_community(
    graph: InteractionGraph,
    fraction: float,
    rng: np.random.Generator,
    *,
    max_attempts_per_swap: int = 10_000,
) -> InteractionGraph:
    """Degree-preserving endpoint swaps until `fraction` of edges cross communities.

    Each swap takes two within-community edges from different communities,
    (u1 -> v1) and (u2 -> v2), and replaces them with (u1 -> v2) and
    (u2 -> v1). Every node keeps its exact in- and out-degree, so leaders
    keep in-degree 0 by construction. Swaps that would duplicate an
    existing edge are rejected and retried.
    """
    if not 0.0 <= fraction <= 0.05:
        raise ValueError("rewire fraction must lie in [0, 0.05]")
    edges = graph.edges.copy()
    result = InteractionGraph(
        n=graph.n,
        edges=edges,
        community=graph.community.copy(),
        is_leader=graph.is_leader.copy(),
    )
    n_edges = len(edges)
    target = math.ceil(fraction * n_edges)
    if target == 0 or n_edges == 0:
        return result

    comm = result.community
    edge_set = {(int(s), int(d)) for s, d in edges}
    within = [
        i for i in range(n_edges) if comm[edges[i, 0]] == comm[edges[i, 1]]
    ]
    cross = n_edges - len(within)

    while cross < target:
        communities_left = {int(comm[edges[i, 0]]) for i in within}
        if len(communities_left) < 2:
            raise ValueError(
                "not enough within-community edges in distinct communities "
                f"to reach the requested cross fraction {fraction}"
            )
        for _ in range(max_attempts_per_swap):
            i1, i2 = (int(v) for v in rng.integers(len(within), size=2))
            e1, e2 = within[i1], within[i2]
            u1, v1 = (int(x) for x in edges[e1])
            u2, v2 = (int(x) for x in edges[e2])
            if comm[u1] == comm[u2]:
                continue
            if (u1, v2) in edge_set or (u2, v1) in edge_set:
                continue
            break
        else:
            raise ValueError("rewiring stalled; graph too constrained")
        edge_set.discard((u1, v1))
        edge_set.discard((u2, v2))
        edge_set.add((u1, v2))
        edge_set.add((u2, v1))
        edges[e1, 1] = v2
        edges[e2, 1] = v1
        for i in sorted((i1, i2), reverse=True):
            within.pop(i)
        cross += 2
    return result
