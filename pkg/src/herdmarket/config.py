"""Run configuration: parsing, validation, canonical serialization.

Configs are INI-style text with sections [market], [tax], [herding],
[network] and [run]. Every key has a default (an empty file is a valid
config), unknown sections or keys are errors, and range violations are
reported with the offending section.key. serialize_config emits the fully
resolved config in a canonical form that parses back to an identical
ScenarioConfig; that text is what run manifests contain, so a manifest is
itself a config that reproduces its run.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

from .core import DEFAULT_CLASS_BOUNDS, AssetSpec, MarketParams
from .herding import HerdingParams
from .taxation import TOBIN_DENOMINATORS, TaxScheme

SCENARIOS = ("reference", "focal")

# --preset names mapping to (steps, replicates): "full" is the full-scale
# Monte Carlo, "desk" finishes in minutes on one core.
PRESETS = {
    "full": (1000, 1000),
    "desk": (500, 100),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "reference"
    tax: TaxScheme = TaxScheme.TOBIN
    tobin_denominator: str = "winners"
    market: MarketParams = field(default_factory=MarketParams)
    herding: HerdingParams = field(default_factory=HerdingParams)
    leader_count: int = 10
    edges_per_node: int = 2
    rewire_fraction: float = 0.0
    steps: int = 1000
    replicates: int = 1000
    seed: int = 42
    workers: int = 1
    volume_ma_window: int = 25

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"[run] scenario: must be one of {SCENARIOS}")
        if self.tobin_denominator not in TOBIN_DENOMINATORS:
            raise ConfigError(
                f"[tax] tobin_denominator: must be one of {TOBIN_DENOMINATORS}"
            )
        if self.leader_count < 1:
            raise ConfigError("[network] leaders: must be at least 1")
        if self.leader_count > self.market.n:
            raise ConfigError("[network] leaders: cannot exceed [market] n")
        if self.edges_per_node < 1:
            raise ConfigError("[network] edges_per_node: must be at least 1")
        if not 0.0 <= self.rewire_fraction <= 0.05:
            raise ConfigError("[network] rewire_fraction: must lie in [0, 0.05]")
        if self.steps < 0:
            raise ConfigError("[run] steps: must be non-negative")
        if self.replicates < 1:
            raise ConfigError("[run] replicates: must be at least 1")
        if self.workers < 1:
            raise ConfigError("[run] workers: must be at least 1")
        if self.volume_ma_window < 1:
            raise ConfigError("[run] volume_ma_window: must be at least 1")
        if abs(self.seed) >= 2**255:
            raise ConfigError("[run] seed: magnitude too large")


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None


def _parse_float_list(section: str, key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_parse_float(section, key, p) for p in parts)


_KNOWN_KEYS = {
    "market": ("n", "delta", "x0", "availability_fraction", "win_rates",
               "loss_rates", "class_bounds"),
    "tax": ("scheme", "tobin_denominator"),
    "herding": ("w", "k_t"),
    "network": ("leaders", "edges_per_node", "rewire_fraction"),
    "run": ("scenario", "steps", "replicates", "seed", "workers",
            "volume_ma_window"),
}


def parse_config(
    text: str, overrides: dict[tuple[str, str], str] | None = None
) -> ScenarioConfig:
    """Parse config text into a validated ScenarioConfig.

    `overrides` maps (section, key) to raw string values and is applied on
    top of the file content (how CLI flags beat config keys).
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    raw: dict[tuple[str, str], str] = {}
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
            raw[(section, key)] = value
    for (section, key), value in (overrides or {}).items():
        if section not in _KNOWN_KEYS or key not in _KNOWN_KEYS[section]:
            raise ConfigError(f"unknown key [{section}] {key}")
        raw[(section, key)] = str(value)

    def get(section: str, key: str) -> str | None:
        return raw.get((section, key))

    # [market]
    n = _parse_int("market", "n", get("market", "n") or "1000")
    if n < 2:
        raise ConfigError("[market] n: must be at least 2")
    delta = _parse_float("market", "delta", get("market", "delta") or "0.2")
    if not 0.0 < delta < 1.0:
        raise ConfigError("[market] delta: must lie in (0, 1)")
    x0 = _parse_float("market", "x0", get("market", "x0") or "100.0")
    if not x0 > 0.0:
        raise ConfigError("[market] x0: must be positive")
    avail = _parse_float(
        "market",
        "availability_fraction",
        get("market", "availability_fraction") or repr(1.0 / 15.0),
    )
    if not avail > 0.0:
        raise ConfigError("[market] availability_fraction: must be positive")
    win_raw = get("market", "win_rates")
    loss_raw = get("market", "loss_rates")
    win = _parse_float_list("market", "win_rates", win_raw) if win_raw else (1.53, 1.60, 1.67)
    loss = _parse_float_list("market", "loss_rates", loss_raw) if loss_raw else (0.60, 0.50, 0.40)
    if len(win) != len(loss):
        raise ConfigError("[market] win_rates, loss_rates: lengths differ")
    if any(not r > 1.0 for r in win):
        raise ConfigError("[market] win_rates: every rate must exceed 1")
    if any(not 0.0 < r < 1.0 for r in loss):
        raise ConfigError("[market] loss_rates: every rate must lie in (0, 1)")
    bounds_raw = get("market", "class_bounds")
    bounds = (
        _parse_float_list("market", "class_bounds", bounds_raw)
        if bounds_raw
        else DEFAULT_CLASS_BOUNDS
    )
    if len(bounds) != 2 or not 0.5 < bounds[0] < bounds[1] < 1.0:
        raise ConfigError("[market] class_bounds: need lo, hi with 0.5 < lo < hi < 1")

    assets = tuple(
        AssetSpec(i + 1, win[i], loss[i]) for i in range(len(win))
    ) + (AssetSpec(len(win) + 1, 1.0, 1.0, virtual=True),)
    try:
        market = MarketParams(
            n=n, delta=delta, x0=x0, assets=assets,
            availability_fraction=avail, class_bounds=(bounds[0], bounds[1]),
        )
    except ValueError as exc:
        raise ConfigError(f"[market] {exc}") from None

    # [tax]
    scheme_raw = get("tax", "scheme") or "tobin"
    try:
        tax = TaxScheme(scheme_raw)
    except ValueError:
        raise ConfigError(
            f"[tax] scheme: must be one of {[s.value for s in TaxScheme]}"
        ) from None
    denom = get("tax", "tobin_denominator") or "winners"

    # [herding]
    w = _parse_float("herding", "w", get("herding", "w") or "0.5")
    if not 0.0 <= w <= 1.0:
        raise ConfigError("[herding] w: must lie in [0, 1]")
    k_t = _parse_int("herding", "k_t", get("herding", "k_t") or "50")
    if k_t < 1:
        raise ConfigError("[herding] k_t: must be at least 1")

    return ScenarioConfig(
        scenario=get("run", "scenario") or "reference",
        tax=tax,
        tobin_denominator=denom,
        market=market,
        herding=HerdingParams(w=w, trigger_step=k_t),
        leader_count=_parse_int("network", "leaders", get("network", "leaders") or "10"),
        edges_per_node=_parse_int(
            "network", "edges_per_node", get("network", "edges_per_node") or "2"
        ),
        rewire_fraction=_parse_float(
            "network", "rewire_fraction", get("network", "rewire_fraction") or "0.0"
        ),
        steps=_parse_int("run", "steps", get("run", "steps") or "1000"),
        replicates=_parse_int("run", "replicates", get("run", "replicates") or "1000"),
        seed=_parse_int("run", "seed", get("run", "seed") or "42"),
        workers=_parse_int("run", "workers", get("run", "workers") or "1"),
        volume_ma_window=_parse_int(
            "run", "volume_ma_window", get("run", "volume_ma_window") or "25"
        ),
    )


def serialize_config(config: ScenarioConfig, version: str | None = None) -> str:
    """Canonical resolved-config text; parse_config round-trips it exactly."""
    m = config.market
    win = ", ".join(repr(a.win_rate) for a in m.real_assets)
    loss = ", ".join(repr(a.loss_rate) for a in m.real_assets)
    lines = []
    if version is not None:
        lines.append(f"# herdmarket {version}")
    lines += [
        "[market]",
        f"n = {m.n}",
        f"delta = {m.delta!r}",
        f"x0 = {m.x0!r}",
        f"availability_fraction = {m.availability_fraction!r}",
        f"win_rates = {win}",
        f"loss_rates = {loss}",
        f"class_bounds = {m.class_bounds[0]!r}, {m.class_bounds[1]!r}",
        "",
        "[tax]",
        f"scheme = {config.tax.value}",
        f"tobin_denominator = {config.tobin_denominator}",
        "",
        "[herding]",
        f"w = {config.herding.w!r}",
        f"k_t = {config.herding.trigger_step}",
        "",
        "[network]",
        f"leaders = {config.leader_count}",
        f"edges_per_node = {config.edges_per_node}",
        f"rewire_fraction = {config.rewire_fraction!r}",
        "",
        "[run]",
        f"scenario = {config.scenario}",
        f"steps = {config.steps}",
        f"replicates = {config.replicates}",
        f"seed = {config.seed}",
        f"workers = {config.workers}",
        f"volume_ma_window = {config.volume_ma_window}",
        "",
    ]
    return "\n".join(lines)


def with_scenario(config: ScenarioConfig, scenario: str) -> ScenarioConfig:
    return replace(config, scenario=scenario)


def load_config_file(path, overrides=None) -> ScenarioConfig:
    with io.open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
