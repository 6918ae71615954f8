"""Experiment orchestration: replicates, twins, Monte Carlo aggregation.

A replicate is one full market history: endowed agents trade for `steps`
sessions under one tax scheme, and in the focal scenario an influence
graph forms at the trigger step and herding reshapes attitudes from then
on. The reference scenario is the same history without the graph.

Per-step order inside a replicate: availability reset -> trading session
-> taxation -> (focal, k >= trigger) attitude update, with the graph built
exactly once at the trigger step from post-tax wealth.

Everything random hangs off a per-replicate seed derived from the master
seed and replicate index, so replicates can run in any order or in
parallel and reproduce bit-identically; a twin pair shares the replicate
seed, which aligns trading order and win/loss outcomes across scenarios.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
from dataclasses import dataclass, replace

import numpy as np

from .config import ScenarioConfig
from .core import ALPHA_MAX, ALPHA_MIN, classify_many, multiplier_table
from .engine import MarketState, run_session
from .herding import update_attitudes
from .metrics import (
    CommunityRow,
    class_fractions,
    class_wealth_totals,
    community_stats,
    community_wealth_means,
    gini,
    mean_ci,
)
from .network import (
    N_COMMUNITIES,
    InteractionGraph,
    build_interaction_graph,
    rewire_cross_community,
    select_leaders,
)
from .rng import BernoulliStream, keyed_generator, replicate_seed


@dataclass(frozen=True)
class StepMetrics:
    """State statistics at the end of one step."""

    step: int
    gini: float
    volume: float
    mean_wealth: float
    class_fractions: tuple[float, float, float]
    class_wealth: tuple[float, float, float]
    community_mean: tuple[float, float, float] | None


@dataclass
class GraphDiagnostics:
    edge_count: int
    leader_max_in_degree: int
    follower_links_bidirectional: bool
    cross_edges_before: int
    cross_edges_after: int
    degrees_preserved: bool


@dataclass
class GraphExport:
    """Raw snapshot of one replicate's graph for the bundle files."""

    edges: np.ndarray
    community: np.ndarray
    is_leader: np.ndarray
    class_at_trigger: np.ndarray
    class_final: np.ndarray
    wealth_final: np.ndarray


@dataclass
class Trajectory:
    """Everything one replicate produced."""

    replicate: int
    seed: int
    gini: np.ndarray
    volume: np.ndarray
    mean_wealth: np.ndarray
    fractions: np.ndarray  # (steps, 3) percent
    class_wealth: np.ndarray  # (steps, 3)
    community_mean: np.ndarray  # (steps, 3), NaN where no community exists
    state_digests: list[bytes]  # digest of (wealth, alpha) at k = 0..steps
    final_wealth: np.ndarray
    final_alpha: np.ndarray
    alpha0: np.ndarray
    alpha_min: float
    alpha_max: float
    leaders: np.ndarray | None = None
    leader_classes: np.ndarray | None = None
    community: np.ndarray | None = None
    community_rows: list[CommunityRow] | None = None
    graph_diag: GraphDiagnostics | None = None
    graph_export: GraphExport | None = None

    def step(self, k: int) -> StepMetrics:
        i = k - 1
        comm = None
        if not np.isnan(self.community_mean[i]).all():
            comm = tuple(self.community_mean[i])
        return StepMetrics(
            step=k,
            gini=float(self.gini[i]),
            volume=float(self.volume[i]),
            mean_wealth=float(self.mean_wealth[i]),
            class_fractions=tuple(self.fractions[i]),
            class_wealth=tuple(self.class_wealth[i]),
            community_mean=comm,
        )

    def steady_gini(self, window: int = 100) -> float:
        return float(self.gini[-min(window, len(self.gini)):].mean())

    def steady_volume(self, window: int = 100) -> float:
        return float(self.volume[-min(window, len(self.volume)):].mean())


def _state_digest(wealth: np.ndarray, alpha: np.ndarray) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(wealth.tobytes())
    h.update(alpha.tobytes())
    return h.digest()


def run_replicate(
    config: ScenarioConfig,
    replicate: int,
    *,
    capture_graph: bool = False,
    track_communities: bool | None = None,
) -> Trajectory:
    """Simulate one replicate and collect its per-step metrics.

    track_communities makes a reference run record the community structure
    its focal twin would form (identical by construction, since formation
    only reads shared pre-trigger state and shared keyed draws) without
    letting it affect dynamics; run_twin uses that for side-by-side tables.
    """
    market = config.market
    herd = config.herding
    n = market.n
    steps = config.steps
    focal = config.scenario == "focal"
    if track_communities is None:
        track_communities = focal

    seed = replicate_seed(config.seed, replicate)
    stream = BernoulliStream(seed)
    alpha0 = keyed_generator(seed, "alpha0").uniform(ALPHA_MIN, ALPHA_MAX, n)
    state = MarketState(
        wealth=np.full(n, market.x0),
        alpha=alpha0.copy(),
        alpha0=alpha0,
        initial_wealth=np.full(n, market.x0),
    )
    gmat = multiplier_table(state.alpha, market)

    gini_ts = np.empty(steps)
    volume_ts = np.empty(steps)
    mean_ts = np.empty(steps)
    fractions_ts = np.empty((steps, 3))
    class_wealth_ts = np.empty((steps, 3))
    community_mean_ts = np.full((steps, N_COMMUNITIES), np.nan)
    digests = [_state_digest(state.wealth, state.alpha)]
    alpha_lo = float(state.alpha.min()) if n else ALPHA_MIN
    alpha_hi = float(state.alpha.max()) if n else ALPHA_MAX

    graph: InteractionGraph | None = None
    community: np.ndarray | None = None
    leaders = leader_classes = None
    diag: GraphDiagnostics | None = None
    class_at_trigger: np.ndarray | None = None

    for k in range(1, steps + 1):
        record = run_session(
            state, k, stream, market, config.tax,
            tobin_denominator=config.tobin_denominator, gmat=gmat,
        )

        if k == herd.trigger_step and (focal or track_communities):
            built = build_interaction_graph(
                state.wealth, state.alpha,
                leader_count=config.leader_count,
                edges_per_node=config.edges_per_node,
                bounds=market.class_bounds,
                seed=seed,
            )
            leaders = np.flatnonzero(built.is_leader)
            leader_classes = classify_many(state.alpha[leaders], market.class_bounds)
            community = built.community
            class_at_trigger = classify_many(state.alpha, market.class_bounds)
            if focal:
                graph, diag = _diagnose_and_rewire(built, config, seed)

        if focal and graph is not None:
            state.alpha = update_attitudes(state.alpha, state.alpha0, graph, herd.w)
            gmat = multiplier_table(state.alpha, market)
            alpha_lo = min(alpha_lo, float(state.alpha.min()))
            alpha_hi = max(alpha_hi, float(state.alpha.max()))

        gini_ts[k - 1] = gini(state.wealth)
        volume_ts[k - 1] = record.volume
        mean_ts[k - 1] = state.wealth.mean()
        fractions_ts[k - 1] = class_fractions(state.alpha, market.class_bounds)
        class_wealth_ts[k - 1] = class_wealth_totals(
            state.alpha, state.wealth, market.class_bounds
        )
        if community is not None:
            community_mean_ts[k - 1] = community_wealth_means(state.wealth, community)
        digests.append(_state_digest(state.wealth, state.alpha))

    rows = None
    if community is not None:
        rows = community_stats(
            state.wealth, state.alpha, community,
            np.isin(np.arange(n), leaders), market.class_bounds, market.x0,
        )

    export = None
    if capture_graph and graph is not None:
        export = GraphExport(
            edges=graph.edges.copy(),
            community=graph.community.copy(),
            is_leader=graph.is_leader.copy(),
            class_at_trigger=class_at_trigger.copy(),
            class_final=classify_many(state.alpha, market.class_bounds),
            wealth_final=state.wealth.copy(),
        )

    return Trajectory(
        replicate=replicate,
        seed=seed,
        gini=gini_ts,
        volume=volume_ts,
        mean_wealth=mean_ts,
        fractions=fractions_ts,
        class_wealth=class_wealth_ts,
        community_mean=community_mean_ts,
        state_digests=digests,
        final_wealth=state.wealth.copy(),
        final_alpha=state.alpha.copy(),
        alpha0=alpha0,
        alpha_min=alpha_lo,
        alpha_max=alpha_hi,
        leaders=leaders,
        leader_classes=leader_classes,
        community=community,
        community_rows=rows,
        graph_diag=diag,
        graph_export=export,
    )


def _diagnose_and_rewire(
    built: InteractionGraph, config: ScenarioConfig, seed: int
) -> tuple[InteractionGraph, GraphDiagnostics]:
    indeg_before = built.in_degrees()
    outdeg_before = built.out_degrees()
    leader_max_in = int(indeg_before[built.is_leader].max()) if built.is_leader.any() else 0
    cross_before = built.cross_community_edge_count()

    edge_set = {(int(s), int(d)) for s, d in built.edges}
    bidirectional = all(
        (d, s) in edge_set
        for s, d in edge_set
        if not built.is_leader[s] and not built.is_leader[d]
    )

    graph = built
    if config.rewire_fraction > 0.0:
        graph = rewire_cross_community(
            built, config.rewire_fraction, keyed_generator(seed, "rewire")
        )
    diag = GraphDiagnostics(
        edge_count=len(graph.edges),
        leader_max_in_degree=leader_max_in,
        follower_links_bidirectional=bidirectional,
        cross_edges_before=cross_before,
        cross_edges_after=graph.cross_community_edge_count(),
        degrees_preserved=bool(
            (graph.in_degrees() == indeg_before).all()
            and (graph.out_degrees() == outdeg_before).all()
        ),
    )
    return graph, diag


# ---------------------------------------------------------------------------
# Monte Carlo aggregation


@dataclass
class RunAggregate:
    config: ScenarioConfig
    trajectories: list[Trajectory]

    @property
    def steps(self) -> int:
        return self.config.steps

    def stack(self, attr: str) -> np.ndarray:
        return np.stack([getattr(t, attr) for t in self.trajectories])

    def steady_ginis(self, window: int = 100) -> np.ndarray:
        return np.array([t.steady_gini(window) for t in self.trajectories])

    def steady_volumes(self, window: int = 100) -> np.ndarray:
        return np.array([t.steady_volume(window) for t in self.trajectories])


def _job(args):
    config, r, capture_graph, track_communities = args
    return run_replicate(
        config, r, capture_graph=capture_graph, track_communities=track_communities
    )


def monte_carlo(
    config: ScenarioConfig,
    *,
    capture_graph_replicate: int | None = None,
    track_communities: bool | None = None,
    replicate_indices: list[int] | None = None,
) -> RunAggregate:
    """Run all replicates and collect them sorted by replicate index.

    `replicate_indices` overrides the default range(replicates); passing a
    repeated index is allowed (used to exercise aggregation on identical
    replicates) and parallel scheduling never changes the result because
    every replicate is keyed by its own derived seed.
    """
    indices = (
        list(replicate_indices)
        if replicate_indices is not None
        else list(range(config.replicates))
    )
    jobs = [
        (config, r, r == capture_graph_replicate, track_communities) for r in indices
    ]
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            trajectories = list(pool.map(_job, jobs))
    else:
        trajectories = [_job(j) for j in jobs]
    order = np.argsort(np.array(indices), kind="stable")
    return RunAggregate(config=config, trajectories=[trajectories[i] for i in order])


@dataclass
class TwinResult:
    reference: Trajectory
    focal: Trajectory
    identical_before_trigger: bool
    first_divergence_step: int | None


def run_twin(config: ScenarioConfig, replicate: int, *, capture_graph: bool = False) -> TwinResult:
    """Reference and focal runs of the same replicate seed, compared step by step."""
    ref = run_replicate(
        replace(config, scenario="reference"), replicate, track_communities=True
    )
    foc = run_replicate(
        replace(config, scenario="focal"), replicate, capture_graph=capture_graph
    )
    trigger = config.herding.trigger_step
    first_div = None
    for k, (a, b) in enumerate(zip(ref.state_digests, foc.state_digests)):
        if a != b:
            first_div = k
            break
    identical = first_div is None or first_div >= trigger
    return TwinResult(
        reference=ref,
        focal=foc,
        identical_before_trigger=identical,
        first_divergence_step=first_div,
    )


@dataclass
class TwinAggregate:
    config: ScenarioConfig
    reference: RunAggregate
    focal: RunAggregate
    twins: list[TwinResult]


def twin_monte_carlo(config: ScenarioConfig, *, capture_graph_replicate: int | None = 0) -> TwinAggregate:
    twins = [
        run_twin(config, r, capture_graph=(r == capture_graph_replicate))
        for r in range(config.replicates)
    ]
    return TwinAggregate(
        config=config,
        reference=RunAggregate(
            config=replace(config, scenario="reference"),
            trajectories=[t.reference for t in twins],
        ),
        focal=RunAggregate(
            config=replace(config, scenario="focal"),
            trajectories=[t.focal for t in twins],
        ),
        twins=twins,
    )


# ---------------------------------------------------------------------------
# Trigger-step sweep and rewiring robustness


@dataclass
class SweepRow:
    trigger_step: int
    leader_count_mean: tuple[float, float, float]
    leader_count_lo: tuple[float, float, float]
    leader_count_hi: tuple[float, float, float]


def sweep_trigger_step(config: ScenarioConfig, trigger_steps: list[int]) -> list[SweepRow]:
    """Mean leader count per class for each candidate trigger step.

    Leadership at the trigger is a pure function of pre-trigger dynamics,
    which the graph cannot influence, so one pass to max(trigger_steps)
    per replicate yields every sweep point.
    """
    if not trigger_steps or any(t < 1 for t in trigger_steps):
        raise ValueError("trigger steps must be positive")
    kts = sorted(set(int(t) for t in trigger_steps))
    market = config.market
    counts = {kt: [] for kt in kts}

    for r in range(config.replicates):
        seed = replicate_seed(config.seed, r)
        stream = BernoulliStream(seed)
        alpha0 = keyed_generator(seed, "alpha0").uniform(ALPHA_MIN, ALPHA_MAX, market.n)
        state = MarketState(
            wealth=np.full(market.n, market.x0),
            alpha=alpha0.copy(),
            alpha0=alpha0,
            initial_wealth=np.full(market.n, market.x0),
        )
        gmat = multiplier_table(state.alpha, market)
        for k in range(1, kts[-1] + 1):
            run_session(
                state, k, stream, market, config.tax,
                tobin_denominator=config.tobin_denominator, gmat=gmat,
            )
            if k in counts:
                lead = select_leaders(state.wealth, config.leader_count)
                codes = classify_many(alpha0[lead], market.class_bounds)
                counts[k].append(np.bincount(codes, minlength=3)[:3])

    rows = []
    for kt in kts:
        per_class = np.stack(counts[kt])  # (R, 3)
        cells = [mean_ci(per_class[:, c]) for c in range(3)]
        rows.append(
            SweepRow(
                trigger_step=kt,
                leader_count_mean=tuple(c[0] for c in cells),
                leader_count_lo=tuple(c[1] for c in cells),
                leader_count_hi=tuple(c[2] for c in cells),
            )
        )
    return rows


@dataclass
class RobustnessResult:
    baseline: RunAggregate
    rewired: RunAggregate


def robustness_rewire(config: ScenarioConfig, fraction: float) -> RobustnessResult:
    """Focal runs with and without cross-community rewiring, same seeds."""
    base_cfg = replace(config, scenario="focal", rewire_fraction=0.0)
    rew_cfg = replace(config, scenario="focal", rewire_fraction=fraction)
    return RobustnessResult(
        baseline=monte_carlo(base_cfg, capture_graph_replicate=0),
        rewired=monte_carlo(rew_cfg, capture_graph_replicate=0),
    )
