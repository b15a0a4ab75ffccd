"""Acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary."""

import pytest

RESULTS = pytest.StashKey[dict]()
DETAILS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[RESULTS] = {}
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion test")


@pytest.fixture
def report(request):
    """Append a human-readable detail line to this criterion's summary entry."""
    lines = []
    request.node.stash[DETAILS] = lines
    return lines.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        details = item.stash.get(DETAILS, [])
        item.config.stash[RESULTS][marker.args[0]] = (marker.args[1], status, list(details))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(RESULTS, {})
    if not results:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number in sorted(results):
        title, status, details = results[number]
        tr.write_line(f"[{status}] criterion {number}: {title}")
        for line in details:
            tr.write_line(f"         {line}")
