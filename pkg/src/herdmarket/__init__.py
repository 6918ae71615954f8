"""Agent-based market simulator: taxation, herding, and wealth dynamics.

Heterogeneous utility-maximizing traders repeatedly stake a fixed share
of their wealth on risky assets drawn from a shared limited pool. A
transaction tax (Tobin-style on gains, or a flat wealth levy) is applied
every session, and in the focal scenario a leader-centred interaction
network forms mid-run and herding pulls follower attitudes toward their
neighbours'. Everything is keyed off one master seed and reproduces bit
for bit across runs, process counts, and replicate orderings.
"""

__version__ = "0.1.0"

from .config import (
    ConfigError,
    ScenarioConfig,
    load_config_file,
    parse_config,
    serialize_config,
)
from .core import (
    AgentClass,
    AssetSpec,
    MarketParams,
    choose_asset,
    classify,
    default_assets,
    expected_utility,
    utility_multiplier,
)
from .herding import HerdingParams, update_attitudes
from .metrics import gini, mean_ci, trading_volume
from .network import InteractionGraph, build_interaction_graph, rewire_cross_community
from .output import report_bundle, write_run_bundle, write_twin_bundle
from .rng import derive_key, keyed_generator, replicate_seed
from .runner import (
    monte_carlo,
    robustness_rewire,
    run_replicate,
    run_twin,
    sweep_trigger_step,
    twin_monte_carlo,
)
from .taxation import TaxScheme, apply_tax, flat_tax, tobin_tax

__all__ = [
    "__version__",
    "AgentClass",
    "AssetSpec",
    "ConfigError",
    "HerdingParams",
    "InteractionGraph",
    "MarketParams",
    "ScenarioConfig",
    "TaxScheme",
    "apply_tax",
    "build_interaction_graph",
    "choose_asset",
    "classify",
    "default_assets",
    "derive_key",
    "expected_utility",
    "flat_tax",
    "gini",
    "keyed_generator",
    "load_config_file",
    "mean_ci",
    "monte_carlo",
    "parse_config",
    "replicate_seed",
    "report_bundle",
    "rewire_cross_community",
    "robustness_rewire",
    "run_replicate",
    "run_twin",
    "serialize_config",
    "sweep_trigger_step",
    "tobin_tax",
    "trading_volume",
    "twin_monte_carlo",
    "update_attitudes",
    "utility_multiplier",
    "write_run_bundle",
    "write_twin_bundle",
]
