import numpy as np
import pytest

from pedscan import GrayImage


def random_image(rng, width, height, lo=0, hi=255):
    return GrayImage.from_array(rng.integers(lo, hi + 1, size=(height, width), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in name or rep.when != "call" \
                    and outcome == "passed":
                continue
            label = name.split("::test_criterion_")[1]
            lines.append((label, "PASS" if outcome == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict in sorted(set(lines)):
        num, _, title = label.partition("_")
        terminalreporter.write_line(f"criterion {int(num):2d} {verdict}  {title.replace('_', ' ')}")
