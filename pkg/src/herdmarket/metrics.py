"""Inequality, activity and population statistics computed from raw state."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .core import classify_many
from .network import N_COMMUNITIES


def gini(wealths) -> float:
    """Sample Gini coefficient of a wealth vector.

    Ascending sort, 1-based ranks j:
        G = 1 - (2 / (n - 1)) * (n - sum(j * x_j) / sum(x_j))
    which equals the mean absolute pairwise difference normalised by
    2 * n * (n - 1) * mean. Zero for a uniform vector, 1 when a single
    agent holds everything.
    """
    x = np.sort(np.asarray(wealths, dtype=np.float64))
    n = len(x)
    if n < 2:
        raise ValueError("gini needs at least two agents")
    if x[0] < 0.0:
        raise ValueError("gini undefined for negative wealth")
    total = x.sum()
    if total <= 0.0:
        raise ValueError("gini undefined for zero total wealth")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    g = 1.0 - (2.0 / (n - 1)) * (n - (ranks * x).sum() / total)
    # round-off can land a hair below zero on near-uniform vectors
    return float(max(0.0, g))


def trading_volume(stakes: np.ndarray) -> float:
    """Total currency staked on real assets in one session."""
    return float(np.asarray(stakes, dtype=np.float64).sum())


def class_fractions(alphas: np.ndarray, bounds) -> np.ndarray:
    """Percentage of agents per class, summing to 100."""
    codes = classify_many(alphas, bounds)
    counts = np.bincount(codes, minlength=3)[:3]
    return 100.0 * counts / len(alphas)


def class_wealth_totals(alphas: np.ndarray, wealths: np.ndarray, bounds) -> np.ndarray:
    codes = classify_many(alphas, bounds)
    return np.bincount(codes, weights=np.asarray(wealths, float), minlength=3)[:3]


def class_counts(alphas: np.ndarray, bounds) -> np.ndarray:
    codes = classify_many(alphas, bounds)
    return np.bincount(codes, minlength=3)[:3]


def mean_ci(samples, significance: float = 0.05) -> tuple[float, float, float]:
    """Sample mean with a two-sided Student-t confidence interval.

    Returns (mean, lo, hi). A single sample or zero variance collapses the
    interval onto the mean.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("mean_ci needs at least one sample")
    m = float(x.mean())
    if x.size == 1:
        return m, m, m
    s = float(x.std(ddof=1))
    if s == 0.0:
        return m, m, m
    half = float(stats.t.ppf(1.0 - significance / 2.0, x.size - 1)) * s / np.sqrt(x.size)
    return m, m - half, m + half


def moving_average(series: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average, same length; early entries average what exists."""
    if window < 1:
        raise ValueError("window must be at least 1")
    x = np.asarray(series, dtype=np.float64)
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def community_wealth_means(wealths: np.ndarray, community: np.ndarray) -> np.ndarray:
    """Mean member wealth per community label 1..3; empty communities give 0."""
    wealths = np.asarray(wealths, dtype=np.float64)
    counts = np.bincount(community, minlength=N_COMMUNITIES + 1)[1 : N_COMMUNITIES + 1]
    sums = np.bincount(community, weights=wealths, minlength=N_COMMUNITIES + 1)[
        1 : N_COMMUNITIES + 1
    ]
    return np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)


@dataclass(frozen=True)
class CommunityRow:
    """Final-state statistics of one community in one replicate."""

    community: int
    member_count: int
    wealth_ratio: float  # mean member wealth over the population mean endowment
    fractions: tuple[float, float, float]  # class percentages among members
    leader_count: int
    leader_wealth_ratio: float


def community_stats(
    wealths: np.ndarray,
    alphas: np.ndarray,
    community: np.ndarray,
    is_leader: np.ndarray,
    bounds,
    baseline_wealth: float,
) -> list[CommunityRow]:
    """Per-community member and leader statistics, one row per label 1..3.

    Ratios are against `baseline_wealth` (the endowment mean). Empty
    communities report zeros, matching the published convention for a
    community that never formed.
    """
    wealths = np.asarray(wealths, dtype=np.float64)
    rows = []
    for c in range(1, N_COMMUNITIES + 1):
        members = community == c
        count = int(members.sum())
        if count == 0:
            rows.append(CommunityRow(c, 0, 0.0, (0.0, 0.0, 0.0), 0, 0.0))
            continue
        mean_wealth = float(wealths[members].mean())
        codes = classify_many(alphas[members], bounds)
        fr = tuple(100.0 * np.bincount(codes, minlength=3)[:3] / count)
        lead = members & is_leader
        lcount = int(lead.sum())
        lratio = float(wealths[lead].mean() / baseline_wealth) if lcount else 0.0
        rows.append(
            CommunityRow(
                community=c,
                member_count=count,
                wealth_ratio=mean_wealth / baseline_wealth,
                fractions=fr,
                leader_count=lcount,
                leader_wealth_ratio=lratio,
            )
        )
    return rows
