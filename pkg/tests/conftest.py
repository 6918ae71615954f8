import numpy as np
import pytest

from herdmarket.config import parse_config

_CRITERIA: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    """Collect one acceptance-criterion verdict for the end-of-run summary."""
    _CRITERIA.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        verdict = "PASS" if passed else "FAIL"
        tr.write_line(f"[{verdict}] {name}: {detail}")
    failed = sum(1 for _, ok, _ in _CRITERIA if not ok)
    tr.write_line(f"{len(_CRITERIA) - failed}/{len(_CRITERIA)} criteria satisfied")


def make_config(**overrides) -> "object":
    """Config built from string overrides, section__key=value style."""
    raw = {tuple(k.split("__", 1)): str(v) for k, v in overrides.items()}
    return parse_config("", raw)


@pytest.fixture
def tiny_config():
    """A config small enough for per-test simulation."""
    return make_config(
        market__n=60, run__steps=12, run__replicates=2, run__seed=11,
        herding__k_t=4, network__leaders=6,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
