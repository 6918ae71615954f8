"""Agent domain model: risk attitudes, the asset menu, and the trading decision.

Each trading session an agent can stake the fraction delta of its wealth x
on one asset. Asset i pays back a_i times the stake with probability 1/2
and b_i times the stake otherwise, so the expected power-law utility of
the bet is

    EU(x, alpha, i) = 0.5 * ((a_i * delta * x)**alpha + (b_i * delta * x)**alpha)

with alpha in [0.5, 1] grading risk propensity. Because the positive factor
(delta * x)**alpha multiplies every asset identically, the preference order
depends only on the per-asset multiplier

    g_i(alpha) = 0.5 * (a_i**alpha + b_i**alpha)

and the selection code compares multipliers instead of raw utilities: same
ranking, no overflow for arbitrarily rich agents. The menu always ends with
a virtual asset (a = b = 1, multiplier exactly 1) that represents staying
out of the market; ties against it resolve to not investing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

ALPHA_MIN = 0.5
ALPHA_MAX = 1.0

# Attitude intervals [0.5, 0.67), [0.67, 0.83), [0.83, 1.0]; a value sitting
# exactly on a boundary belongs to the upper class.
DEFAULT_CLASS_BOUNDS = (0.67, 0.83)


class AgentClass(enum.IntEnum):
    PRUDENT = 0
    ORDINARY = 1
    AUDACIOUS = 2


@dataclass(frozen=True)
class AssetSpec:
    """One row of the asset menu.

    win_rate (a) multiplies the stake on a win, loss_rate (b) is the kept
    fraction of the stake on a loss. The virtual asset returns the stake
    unchanged either way.
    """

    index: int
    win_rate: float
    loss_rate: float
    virtual: bool = False

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("asset index is 1-based")
        if self.virtual:
            if self.win_rate != 1.0 or self.loss_rate != 1.0:
                raise ValueError("virtual asset must have unit win and loss rates")
        else:
            if not self.win_rate > 1.0:
                raise ValueError(f"asset {self.index}: win_rate must exceed 1")
            if not 0.0 < self.loss_rate < 1.0:
                raise ValueError(f"asset {self.index}: loss_rate must lie in (0, 1)")


def default_assets() -> tuple[AssetSpec, ...]:
    """Three speculative assets plus the virtual no-investment option."""
    return (
        AssetSpec(1, 1.53, 0.60),
        AssetSpec(2, 1.60, 0.50),
        AssetSpec(3, 1.67, 0.40),
        AssetSpec(4, 1.0, 1.0, virtual=True),
    )


@dataclass(frozen=True)
class MarketParams:
    """Static market configuration shared by every agent."""

    n: int = 1000
    delta: float = 0.2
    x0: float = 100.0
    assets: tuple[AssetSpec, ...] = field(default_factory=default_assets)
    # Per-session capacity of each real asset, as a fraction of current
    # total wealth.
    availability_fraction: float = 1.0 / 15.0
    class_bounds: tuple[float, float] = DEFAULT_CLASS_BOUNDS

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not self.x0 > 0.0:
            raise ValueError("x0 must be positive")
        if self.availability_fraction <= 0.0:
            raise ValueError("availability_fraction must be positive")
        if len(self.assets) < 2 or not self.assets[-1].virtual:
            raise ValueError("asset menu must end with the virtual asset")
        if any(a.virtual for a in self.assets[:-1]):
            raise ValueError("only the last asset may be virtual")
        if [a.index for a in self.assets] != list(range(1, len(self.assets) + 1)):
            raise ValueError("asset indices must run 1..m in order")
        lo, hi = self.class_bounds
        if not ALPHA_MIN < lo < hi < ALPHA_MAX:
            raise ValueError("class bounds must satisfy 0.5 < lo < hi < 1")

    @property
    def real_assets(self) -> tuple[AssetSpec, ...]:
        return self.assets[:-1]

    @property
    def virtual_asset(self) -> AssetSpec:
        return self.assets[-1]


@dataclass
class AgentState:
    """A single trader: identity, wealth, and risk attitude."""

    id: int
    wealth: float
    alpha: float
    alpha0: float

    @property
    def agent_class(self) -> AgentClass:
        return classify(self.alpha)


def validate_alpha(alpha: float) -> float:
    if not (ALPHA_MIN <= alpha <= ALPHA_MAX) or math.isnan(alpha):
        raise ValueError(f"alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {alpha!r}")
    return alpha


def classify(alpha: float, bounds: tuple[float, float] = DEFAULT_CLASS_BOUNDS) -> AgentClass:
    """Class of a single attitude value; boundary values go to the upper class."""
    validate_alpha(alpha)
    lo, hi = bounds
    if alpha < lo:
        return AgentClass.PRUDENT
    if alpha < hi:
        return AgentClass.ORDINARY
    return AgentClass.AUDACIOUS


def classify_many(
    alphas: np.ndarray, bounds: tuple[float, float] = DEFAULT_CLASS_BOUNDS
) -> np.ndarray:
    """Vectorized classify; returns int codes matching AgentClass values."""
    alphas = np.asarray(alphas, dtype=np.float64)
    if alphas.size and (
        np.isnan(alphas).any() or alphas.min() < ALPHA_MIN or alphas.max() > ALPHA_MAX
    ):
        raise ValueError("attitudes out of [0.5, 1]")
    return np.searchsorted(np.asarray(bounds), alphas, side="right").astype(np.int64)


def utility_multiplier(alpha: float, asset: AssetSpec) -> float:
    """g_i(alpha) = 0.5 * (a_i**alpha + b_i**alpha); exactly 1 for the virtual asset."""
    return 0.5 * (asset.win_rate**alpha + asset.loss_rate**alpha)


def multiplier_table(alphas: np.ndarray, params: MarketParams) -> np.ndarray:
    """Multipliers of every real asset for every agent, shape (n, m_real).

    Agrees with utility_multiplier to within one ulp (numpy's vectorized
    pow may round the last bit differently than scalar libm pow). The
    trading engine only ever reads this table, never the scalar form, so
    in-session comparisons are always consistent.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    a = np.array([s.win_rate for s in params.real_assets])
    b = np.array([s.loss_rate for s in params.real_assets])
    return 0.5 * (np.power(a, alphas[:, None]) + np.power(b, alphas[:, None]))


def expected_utility(wealth: float, alpha: float, delta: float, asset: AssetSpec) -> float:
    """Expected utility of staking delta*wealth on one asset."""
    if not wealth > 0.0:
        raise ValueError("expected utility needs positive wealth")
    validate_alpha(alpha)
    stake = delta * wealth
    return 0.5 * ((asset.win_rate * stake) ** alpha + (asset.loss_rate * stake) ** alpha)


def choose_asset(
    agent: AgentState,
    availability,
    params: MarketParams,
) -> int:
    """Pick the asset a trader stakes on this session; returns a 1-based index.

    `availability` holds the remaining capacity of each real asset, aligned
    with params.real_assets. A real asset is feasible when its remaining
    capacity covers the agent's stake. Among feasible real assets the
    highest multiplier wins, lower index breaking exact ties; the virtual
    asset (multiplier 1) wins whenever no feasible real asset strictly
    beats it, so an indifferent agent stays out of the market.
    """
    stake = params.delta * agent.wealth
    virtual_index = params.virtual_asset.index
    if stake <= 0.0:
        return virtual_index
    best_index = virtual_index
    best_g = 1.0
    for pos, asset in enumerate(params.real_assets):
        if availability[pos] >= stake:
            g = utility_multiplier(agent.alpha, asset)
            if g > best_g:
                best_g = g
                best_index = asset.index
    return best_index
