"""Compiled inner loop of a trading session.

The session is inherently sequential: each trade drains a shared
availability pool before the next agent picks, and near exhaustion an
agent's fallback cascades to its next-best asset, so the loop cannot be
vectorized without changing results. This kernel is the numba translation
of engine._session_python and must stay bitwise identical to it; the
arithmetic is written with the exact same expression shapes on purpose.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco


@njit(cache=True)
def session_pass(
    perm,  # int64 (n,) trading order
    wealth,  # float64 (n,) wealth before the session
    gmat,  # float64 (n, m_real) utility multipliers per agent and real asset
    delta,  # float scalar stake fraction
    remaining,  # float64 (m_real,) availability pool, drained in place
    win_rates,  # float64 (m_real,)
    loss_rates,  # float64 (m_real,)
    betas,  # uint8 (n,) win/lose outcome per agent
    choices,  # int64 (n,) out: 0-based real asset, m_real for virtual
    stakes,  # float64 (n,) out: stake actually placed (0 for virtual)
    pretax,  # float64 (n,) out: wealth after trades, before tax
):
    m_real = remaining.shape[0]
    volume = 0.0
    for idx in range(perm.shape[0]):
        j = perm[idx]
        w = wealth[j]
        stake = delta * w
        best = -1
        best_g = 1.0  # virtual multiplier; a real asset must strictly beat it
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
