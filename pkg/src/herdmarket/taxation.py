"""Post-session taxation schemes.

Both schemes exist to hold aggregate wealth at its initial level. The
transaction levy ("tobin") skims the session's aggregate gain from that
session's winners only, so agents who lost or stayed out are never
charged. The flat scheme rescales everybody proportionally, traders and
bystanders alike. Taxation runs once per session, after all agents traded.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class TaxScheme(str, enum.Enum):
    TOBIN = "tobin"
    FLAT = "flat"


# How the transaction levy is normalised: "winners" divides the aggregate
# gain by the winners' gains only (conserves total wealth exactly);
# "all" divides by the algebraic sum of all wealth variations, which
# over-collects whenever losers exist and lets mean wealth drift down.
TOBIN_DENOMINATORS = ("winners", "all")


@dataclass(frozen=True)
class TaxInputs:
    """Wealth vectors a tax decision needs.

    pretax:  wealth after this session's trades, before tax
    prev:    wealth at the end of the previous session
    initial: endowments x0 (the level taxation defends)
    """

    pretax: np.ndarray
    prev: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        pretax = np.asarray(self.pretax, dtype=np.float64)
        prev = np.asarray(self.prev, dtype=np.float64)
        initial = np.asarray(self.initial, dtype=np.float64)
        if not (pretax.shape == prev.shape == initial.shape) or pretax.ndim != 1:
            raise ValueError("tax inputs must be 1-d arrays of equal length")
        object.__setattr__(self, "pretax", pretax)
        object.__setattr__(self, "prev", prev)
        object.__setattr__(self, "initial", initial)


def tobin_tax(inputs: TaxInputs, denominator: str = "winners") -> np.ndarray:
    """Levy this session's aggregate gain from this session's winners.

    With s_j the wealth variation of agent j and p the excess of total
    wealth over total endowment, each winner pays u * s_j where
    u = p / sum of winners' gains. When the system did not gain (p <= 0)
    nobody pays. Losers and non-traders are never charged.
    """
    if denominator not in TOBIN_DENOMINATORS:
        raise ValueError(f"tobin denominator must be one of {TOBIN_DENOMINATORS}")
    s = inputs.pretax - inputs.prev
    p = inputs.pretax.sum() - inputs.initial.sum()
    if p <= 0.0:
        return inputs.pretax.copy()
    gains = np.where(s > 0.0, s, 0.0)
    denom = gains.sum() if denominator == "winners" else s.sum()
    if denom <= 0.0:
        # p > 0 with no winner gains means prev already exceeded the
        # endowment total, which the scheme itself rules out.
        raise ValueError("aggregate gain without winner gains; inconsistent inputs")
    u = p / denom
    return inputs.pretax - gains * u


def flat_tax(inputs: TaxInputs) -> np.ndarray:
    """Rescale everyone so total wealth returns exactly to the endowment total."""
    total = inputs.pretax.sum()
    if total <= 0.0:
        raise ValueError("flat tax undefined for non-positive total wealth")
    v = inputs.initial.sum() / total
    return v * inputs.pretax


def apply_tax(
    scheme: TaxScheme, inputs: TaxInputs, tobin_denominator: str = "winners"
) -> np.ndarray:
    if scheme == TaxScheme.TOBIN:
        return tobin_tax(inputs, tobin_denominator)
    if scheme == TaxScheme.FLAT:
        return flat_tax(inputs)
    raise ValueError(f"unknown tax scheme: {scheme!r}")
