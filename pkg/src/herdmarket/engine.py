"""One trading session: availability reset, ordered trades, settlement, tax.

Session mechanics, in order:

1. Each real asset's capacity is reset to a fixed fraction of *current*
   total wealth; capacity does not carry over between sessions.
2. Agents trade sequentially in a fresh uniform random permutation. Each
   picks the feasible asset with the best utility multiplier (or stays
   out), immediately deducting its stake from the asset's remaining
   capacity, so late agents can find their preferred asset sold out.
3. A trade settles on a fair coin beta: the stake comes back multiplied by
   the asset's win rate or loss rate. Betas are keyed by (step, agent), so
   paired runs settle identical trades identically.
4. After all agents traded, the tax scheme maps pre-tax to post-tax wealth.

The sequential loop exists twice: a plain Python reference here and the
compiled twin in _kernel (used by default); tests hold them bitwise equal.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .core import MarketParams, multiplier_table
from .rng import BernoulliStream, keyed_generator
from .taxation import TaxInputs, TaxScheme, apply_tax


@dataclass
class AssetPool:
    """Per-session capacity of the real assets (the virtual one is unlimited)."""

    capacity: np.ndarray
    remaining: np.ndarray

    def consumed(self) -> np.ndarray:
        return self.capacity - self.remaining


def reset_availability(total_wealth: float, params: MarketParams) -> AssetPool:
    """Fresh pool for one session, sized from current total wealth."""
    if total_wealth < 0.0:
        raise ValueError("total wealth cannot be negative")
    if total_wealth == 0.0:
        warnings.warn("total wealth is zero; asset capacities degenerate to 0")
    cap = np.full(len(params.real_assets), total_wealth * params.availability_fraction)
    return AssetPool(capacity=cap, remaining=cap.copy())


@dataclass
class MarketState:
    """Mutable per-replicate simulation state."""

    wealth: np.ndarray
    alpha: np.ndarray
    alpha0: np.ndarray
    initial_wealth: np.ndarray

    @property
    def n(self) -> int:
        return self.wealth.shape[0]


@dataclass
class SessionRecord:
    """Everything one session produced."""

    step: int
    permutation: np.ndarray
    choices: np.ndarray  # 0-based real asset position, m_real means virtual
    stakes: np.ndarray
    betas: np.ndarray
    pretax: np.ndarray
    posttax: np.ndarray
    volume: float
    pool: AssetPool


def settle_trade(prev_wealth: float, asset, beta: int, delta: float) -> float:
    """Post-trade wealth of one agent staking delta*prev_wealth on `asset`.

    On a win the stake turns into win_rate*stake, on a loss into
    loss_rate*stake; the virtual asset hands the stake back unchanged.
    """
    if beta not in (0, 1):
        raise ValueError("beta must be 0 or 1")
    stake = delta * prev_wealth
    if beta == 1:
        return prev_wealth + stake * (asset.win_rate - 1.0)
    return prev_wealth - stake * (1.0 - asset.loss_rate)


def _session_python(perm, wealth, gmat, delta, remaining, win_rates, loss_rates,
                    betas, choices, stakes, pretax):
    # Reference implementation of _kernel.session_pass; same expressions,
    # same order, kept in plain Python so the logic stays reviewable.
    m_real = remaining.shape[0]
    volume = 0.0
    for idx in range(perm.shape[0]):
        j = perm[idx]
        w = wealth[j]
        stake = delta * w
        best = -1
        best_g = 1.0
        if stake > 0.0:
            for i in range(m_real):
                if remaining[i] >= stake and gmat[j, i] > best_g:
                    best_g = gmat[j, i]
                    best = i
        if best >= 0:
            remaining[best] -= stake
            volume += stake
            if betas[j] == 1:
                pretax[j] = w + stake * (win_rates[best] - 1.0)
            else:
                pretax[j] = w - stake * (1.0 - loss_rates[best])
            choices[j] = best
            stakes[j] = stake
        else:
            pretax[j] = w
            choices[j] = m_real
            stakes[j] = 0.0
    return volume


def run_session(
    state: MarketState,
    step: int,
    stream: BernoulliStream,
    params: MarketParams,
    tax: TaxScheme,
    *,
    tobin_denominator: str = "winners",
    gmat: np.ndarray | None = None,
    use_kernel: bool = True,
) -> SessionRecord:
    """Execute one full session and advance state.wealth to post-tax values.

    `gmat` lets the caller reuse the multiplier table while attitudes are
    unchanged; it must equal multiplier_table(state.alpha, params).
    """
    n = state.n
    pool = reset_availability(float(state.wealth.sum()), params)
    perm = keyed_generator(stream.seed, "perm", step).permutation(n).astype(np.int64)
    betas = stream.row(step, n)
    if gmat is None:
        gmat = multiplier_table(state.alpha, params)

    win_rates = np.array([a.win_rate for a in params.real_assets])
    loss_rates = np.array([a.loss_rate for a in params.real_assets])
    choices = np.empty(n, dtype=np.int64)
    stakes = np.empty(n, dtype=np.float64)
    pretax = np.empty(n, dtype=np.float64)

    session_fn = (
        _kernel.session_pass if (use_kernel and _kernel.HAVE_NUMBA) else _session_python
    )
    volume = session_fn(
        perm, state.wealth, gmat, params.delta, pool.remaining,
        win_rates, loss_rates, betas, choices, stakes, pretax,
    )

    posttax = apply_tax(
        tax,
        TaxInputs(pretax=pretax, prev=state.wealth, initial=state.initial_wealth),
        tobin_denominator,
    )
    state.wealth = posttax
    return SessionRecord(
        step=step,
        permutation=perm,
        choices=choices,
        stakes=stakes,
        betas=betas,
        pretax=pretax,
        posttax=posttax,
        volume=float(volume),
        pool=pool,
    )
