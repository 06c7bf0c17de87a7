import time

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    prev = _CRITERIA.get(n, (title, "passed", ""))
    if rep.failed and prev[1] != "failed":
        msg = str(rep.longrepr.reprcrash.message).splitlines()[0] if hasattr(rep.longrepr, "reprcrash") else ""
        _CRITERIA[n] = (title, "failed", msg)
    elif rep.skipped and rep.when == "setup":
        _CRITERIA[n] = (title, "skipped", "")
    elif n not in _CRITERIA and rep.when == "call":
        _CRITERIA[n] = (title, "passed", "")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, msg = _CRITERIA[n]
        line = f"criterion {n:2d} {status.upper():7s} {title}"
        tr.write_line(line + (f"  ({msg})" if msg else ""))


@pytest.fixture(scope="session")
def desk_study():
    """The desk-scale convergence study with the DVM cross-check, run once per session."""
    from gradmoments.study import PRESETS, convergence_study
    from dataclasses import replace

    t0 = time.perf_counter()
    res = convergence_study(replace(PRESETS["paper-desk"], dvm=True))
    res.timings["total"] = time.perf_counter() - t0
    return res
