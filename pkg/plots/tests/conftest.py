import pytest

from herdmarket.cli import main as herdmarket_main

_CRITERIA: list[tuple[str, bool, str]] = []


def record_secondary(name: str, passed: bool, detail: str) -> None:
    """Collect one secondary-criterion verdict for the end-of-run summary."""
    _CRITERIA.append((name, bool(passed), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("secondary criteria")
    for name, passed, detail in _CRITERIA:
        verdict = "PASS" if passed else "FAIL"
        tr.write_line(f"[{verdict}] {name}: {detail}")


def _generate(root, args):
    rc = herdmarket_main(args)
    assert rc == 0, f"bundle generation failed: {args}"
    return str(root)


TINY_FLAGS = [
    "--set", "market.n=60", "--set", "network.leaders=6",
    "--set", "herding.k_t=4", "--steps", "12", "--replicates", "2",
    "--seed", "11",
]


@pytest.fixture(scope="session")
def tiny_bundles(tmp_path_factory):
    """Five small bundles, one of each flavor the figures consume."""
    root = tmp_path_factory.mktemp("tiny-bundles")
    out = {}
    for name, extra in (
        ("ref-tt", ["run", "--tax", "tobin"]),
        ("ref-ft", ["run", "--tax", "flat"]),
        ("twin-tt", ["twin", "--tax", "tobin"]),
        ("sweep-tt", ["sweep-kt", "--tax", "tobin", "--kt", "2,5"]),
        ("sweep-ft", ["sweep-kt", "--tax", "flat", "--kt", "2,5"]),
    ):
        path = root / name
        _generate(path, extra[:1] + ["-o", str(path)] + TINY_FLAGS + extra[1:])
        out[name] = str(path)
    return out


@pytest.fixture(scope="session")
def desk_bundles(tmp_path_factory):
    """Desk-scale bundles (n=1000, T=500, R=100) for the criterion tests."""
    root = tmp_path_factory.mktemp("desk-bundles")
    out = {}
    for name, extra in (
        ("ref-tt", ["run", "--preset", "desk", "--tax", "tobin"]),
        ("ref-ft", ["run", "--preset", "desk", "--tax", "flat"]),
        ("twin-tt", ["twin", "--preset", "desk", "--tax", "tobin"]),
        ("sweep-tt", ["sweep-kt", "--preset", "desk", "--tax", "tobin",
                      "--kt", "50,150,300"]),
        ("sweep-ft", ["sweep-kt", "--preset", "desk", "--tax", "flat",
                      "--kt", "50,150,300"]),
    ):
        path = root / name
        _generate(path, extra[:1] + ["-o", str(path)] + extra[1:])
        out[name] = str(path)
    return out
