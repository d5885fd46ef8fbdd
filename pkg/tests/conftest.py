"""Collect acceptance outcomes and print one line per criterion."""
from collections import defaultdict

import pytest

CRITERIA = {
    1: "disk Steklov oracle within 2%, runtime <= 30 s",
    2: "constants: S 1 = 0 and S_t 1 = 1 without potential",
    3: "kernel laws: symmetry, Chapman-Kolmogorov, semigroup law, trace",
    4: "Perron structure on square and annulus",
    5: "Robin-DtN link with beta = -lambda1",
    6: "weighted L_p bound M exp(-lambda1 t)",
    7: "negative-potential regimes",
    8: "disconnected domain fails strict positivity",
    9: "conormal two-route discrepancy decreases under refinement",
}

_outcomes = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[marker.args[0]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} - {CRITERIA[n]}"
                                    f" ({len(results or [])} tests)")
