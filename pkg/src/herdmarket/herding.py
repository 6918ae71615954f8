"""Attitude imitation over the influence graph.

Once the graph exists, every agent's risk attitude relaxes each step
toward the mean of its in-neighbours' previous attitudes, anchored to its
own innate value:

    alpha_j(k) = (1 - w) * alpha_j(0) + w * mean_{h in N_j} alpha_h(k - 1)

The update is synchronous (everyone reads the k-1 snapshot) and agents
without in-neighbours, leaders above all, never move. Since the new value
is a convex combination of values in [0.5, 1], attitudes stay in range
with no clipping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ALPHA_MAX, ALPHA_MIN
from .network import InteractionGraph


@dataclass(frozen=True)
class HerdingParams:
    w: float = 0.5  # imitation weight: 0 keeps innate attitudes, 1 is pure imitation
    trigger_step: int = 50  # first step with an active graph

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must lie in [0, 1]")
        if self.trigger_step < 1:
            raise ValueError("trigger_step must be at least 1")


def update_attitudes(
    alphas: np.ndarray,
    alpha0s: np.ndarray,
    graph: InteractionGraph,
    w: float,
) -> np.ndarray:
    """One synchronous imitation step; returns the new attitude vector."""
    alphas = np.asarray(alphas, dtype=np.float64)
    alpha0s = np.asarray(alpha0s, dtype=np.float64)
    if alphas.shape != alpha0s.shape or len(alphas) != graph.n:
        raise ValueError("attitude vectors must match the graph size")
    if not 0.0 <= w <= 1.0:
        raise ValueError("w must lie in [0, 1]")
    if len(graph.edges) == 0:
        return alphas.copy()
    src = graph.edges[:, 0]
    dst = graph.edges[:, 1]
    indeg = np.bincount(dst, minlength=graph.n)
    sums = np.bincount(dst, weights=alphas[src], minlength=graph.n)
    mean = np.divide(sums, indeg, out=np.zeros_like(sums), where=indeg > 0)
    updated = (1.0 - w) * alpha0s + w * mean
    new = np.where(indeg > 0, updated, alphas)
    # Convex combination of in-range values; anything else is a real bug.
    if new.size and (new.min() < ALPHA_MIN or new.max() > ALPHA_MAX):
        raise AssertionError("attitude left [0.5, 1]; update is broken")
    return new
