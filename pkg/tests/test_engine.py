import numpy as np
import pytest

from herdmarket import _kernel
from herdmarket.core import MarketParams, default_assets, multiplier_table
from herdmarket.engine import (
    MarketState,
    _session_python,
    reset_availability,
    run_session,
    settle_trade,
)
from herdmarket.rng import BernoulliStream, replicate_seed
from herdmarket.taxation import TaxScheme

ASSETS = default_assets()


def make_state(wealth, alphas):
    wealth = np.asarray(wealth, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.float64)
    return MarketState(
        wealth=wealth.copy(),
        alpha=alphas.copy(),
        alpha0=alphas.copy(),
        initial_wealth=np.full_like(wealth, 100.0),
    )


def test_settle_trade_frozen_values():
    assert settle_trade(100.0, ASSETS[0], 1, 0.2) == pytest.approx(110.6)
    assert settle_trade(100.0, ASSETS[0], 0, 0.2) == pytest.approx(92.0)
    assert settle_trade(100.0, ASSETS[1], 0, 0.2) == pytest.approx(90.0)
    assert settle_trade(50.0, ASSETS[0], 1, 0.2) == pytest.approx(55.3)
    assert settle_trade(50.0, ASSETS[0], 0, 0.2) == pytest.approx(46.0)
    # the virtual asset returns the stake untouched either way
    assert settle_trade(100.0, ASSETS[3], 1, 0.2) == 100.0
    assert settle_trade(100.0, ASSETS[3], 0, 0.2) == 100.0


def test_settle_trade_rejects_bad_beta():
    with pytest.raises(ValueError):
        settle_trade(100.0, ASSETS[0], 2, 0.2)


def test_reset_availability_sizes_from_total_wealth():
    pool = reset_availability(450.0, MarketParams())
    assert pool.capacity == pytest.approx([30.0, 30.0, 30.0])
    assert pool.remaining == pytest.approx(pool.capacity)
    assert pool.consumed() == pytest.approx([0.0, 0.0, 0.0])


def test_reset_availability_warns_on_zero_wealth():
    with pytest.warns(UserWarning):
        pool = reset_availability(0.0, MarketParams())
    assert pool.capacity == pytest.approx([0.0, 0.0, 0.0])


def _run_python_session(wealth, alphas, perm, betas, remaining, delta=0.2):
    params = MarketParams()
    n = len(wealth)
    gmat = multiplier_table(np.asarray(alphas, dtype=np.float64), params)
    win = np.array([a.win_rate for a in params.real_assets])
    loss = np.array([a.loss_rate for a in params.real_assets])
    choices = np.empty(n, dtype=np.int64)
    stakes = np.empty(n, dtype=np.float64)
    pretax = np.empty(n, dtype=np.float64)
    volume = _session_python(
        np.asarray(perm, dtype=np.int64), np.asarray(wealth, dtype=np.float64),
        gmat, delta, np.asarray(remaining, dtype=np.float64), win, loss,
        np.asarray(betas, dtype=np.uint8), choices, stakes, pretax,
    )
    return volume, choices, stakes, pretax


def test_session_hand_example():
    """Four agents, capacity 30 per asset, worked through by hand.

    In permutation order: agent 2 wants 40 which no pool covers, so it sits
    out. Agent 0 takes the first asset and wins. Agent 1's stake equals the
    10 left in the first pool exactly, drains it, and loses. Agent 3 finds
    the first pool empty; at alpha 0.86 the second asset multiplies better
    than the third, and the trade loses.
    """
    wealth = [100.0, 50.0, 200.0, 100.0]
    alphas = [0.95, 0.55, 0.70, 0.86]
    remaining = np.full(3, 30.0)
    volume, choices, stakes, pretax = _run_python_session(
        wealth, alphas, perm=[2, 0, 1, 3], betas=[1, 0, 1, 0], remaining=remaining
    )
    assert choices.tolist() == [0, 0, 3, 1]
    assert stakes == pytest.approx([20.0, 10.0, 0.0, 20.0])
    assert pretax == pytest.approx([110.6, 46.0, 200.0, 90.0])
    assert volume == pytest.approx(50.0)
    assert remaining == pytest.approx([0.0, 10.0, 30.0])


def test_session_exact_fit_is_feasible():
    """remaining == stake must still admit the trade (>= not >)."""
    wealth = [100.0]
    volume, choices, _, _ = _run_python_session(
        wealth, [0.9], perm=[0], betas=[1], remaining=[20.0, 0.0, 0.0]
    )
    assert choices.tolist() == [0]
    assert volume == pytest.approx(20.0)
    volume, choices, _, _ = _run_python_session(
        wealth, [0.9], perm=[0], betas=[1],
        remaining=[np.nextafter(20.0, 0.0), 0.0, 0.0],
    )
    assert choices.tolist() == [3]
    assert volume == 0.0


@pytest.mark.skipif(not _kernel.HAVE_NUMBA, reason="numba unavailable")
def test_kernel_bitwise_matches_python_reference():
    params = MarketParams()
    rng = np.random.default_rng(99)
    win = np.array([a.win_rate for a in params.real_assets])
    loss = np.array([a.loss_rate for a in params.real_assets])
    for trial in range(25):
        n = int(rng.integers(2, 300))
        wealth = rng.uniform(0.0, 400.0, n)
        alphas = rng.uniform(0.5, 1.0, n)
        gmat = multiplier_table(alphas, params)
        perm = rng.permutation(n).astype(np.int64)
        betas = rng.integers(0, 2, n).astype(np.uint8)
        remaining = rng.uniform(0.0, wealth.sum() / 10.0, 3)

        args_py = [perm, wealth, gmat, 0.2, remaining.copy(), win, loss, betas]
        args_nb = [perm, wealth, gmat, 0.2, remaining.copy(), win, loss, betas]
        outs = []
        for fn, args in ((_session_python, args_py), (_kernel.session_pass, args_nb)):
            choices = np.empty(n, dtype=np.int64)
            stakes = np.empty(n, dtype=np.float64)
            pretax = np.empty(n, dtype=np.float64)
            volume = fn(*args, choices, stakes, pretax)
            outs.append((volume, choices, stakes, pretax, args[4]))
        v_py, c_py, s_py, x_py, r_py = outs[0]
        v_nb, c_nb, s_nb, x_nb, r_nb = outs[1]
        assert v_py == v_nb
        assert (c_py == c_nb).all()
        assert (s_py == s_nb).all()
        assert (x_py == x_nb).all()
        assert (r_py == r_nb).all()


def test_run_session_kernel_toggle_is_invisible():
    alphas = np.random.default_rng(1).uniform(0.5, 1.0, 120)
    results = []
    for use_kernel in (True, False):
        state = make_state(np.full(120, 100.0), alphas)
        rec = run_session(state, 1, BernoulliStream(replicate_seed(5, 0)),
                          MarketParams(), TaxScheme.TOBIN, use_kernel=use_kernel)
        results.append((rec.posttax, rec.volume, rec.choices))
    assert (results[0][0] == results[1][0]).all()
    assert results[0][1] == results[1][1]
    assert (results[0][2] == results[1][2]).all()


def test_run_session_is_deterministic_and_advances_state():
    alphas = np.random.default_rng(2).uniform(0.5, 1.0, 80)
    state_a = make_state(np.full(80, 100.0), alphas)
    state_b = make_state(np.full(80, 100.0), alphas)
    stream = BernoulliStream(replicate_seed(7, 3))
    rec_a = run_session(state_a, 1, stream, MarketParams(), TaxScheme.TOBIN)
    rec_b = run_session(state_b, 1, stream, MarketParams(), TaxScheme.TOBIN)
    assert (rec_a.posttax == rec_b.posttax).all()
    assert (state_a.wealth == rec_a.posttax).all()
    assert rec_a.volume == pytest.approx(rec_a.stakes.sum())
    # consumed capacity is exactly the stakes grouped by chosen asset
    for i in range(3):
        want = rec_a.stakes[rec_a.choices == i].sum()
        assert rec_a.pool.consumed()[i] == pytest.approx(want)


def test_run_session_flat_restores_mean_every_step():
    alphas = np.random.default_rng(3).uniform(0.5, 1.0, 100)
    state = make_state(np.full(100, 100.0), alphas)
    stream = BernoulliStream(replicate_seed(11, 0))
    for k in range(1, 30):
        run_session(state, k, stream, MarketParams(), TaxScheme.FLAT)
        assert state.wealth.mean() == pytest.approx(100.0, rel=1e-12)


def test_run_session_tobin_never_exceeds_endowment():
    alphas = np.random.default_rng(4).uniform(0.5, 1.0, 100)
    state = make_state(np.full(100, 100.0), alphas)
    stream = BernoulliStream(replicate_seed(13, 0))
    gained = restored = 0
    for k in range(1, 60):
        rec = run_session(state, k, stream, MarketParams(), TaxScheme.TOBIN)
        total = state.wealth.sum()
        assert total <= 100.0 * 100 * (1.0 + 1e-12)
        if rec.pretax.sum() > 100.0 * 100:
            gained += 1
            assert total == pytest.approx(100.0 * 100, rel=1e-12)
            restored += 1
    assert gained > 0 and restored == gained


def test_session_outcomes_use_shared_bits():
    """The same (step, agent) coin decides the outcome in any scenario."""
    alphas = np.random.default_rng(6).uniform(0.5, 1.0, 50)
    stream = BernoulliStream(replicate_seed(21, 0))
    state = make_state(np.full(50, 100.0), alphas)
    rec = run_session(state, 5, stream, MarketParams(), TaxScheme.TOBIN)
    assert (rec.betas == stream.row(5, 50)).all()
    # everyone starts at 100, so a trader sits above it iff its coin came up 1
    traded = rec.choices < 3
    assert traded.any()
    assert (rec.betas[traded].astype(bool) == (rec.pretax[traded] > 100.0)).all()
