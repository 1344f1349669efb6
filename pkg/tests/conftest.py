import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

import pytest

# criterion number -> list of (test id, passed, seconds)
_CRITERIA: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    runs = _CRITERIA.setdefault(marker.args[0], [])
    if report.when == "setup":
        # fixture time (e.g. the shared training run) is charged to the criterion
        runs.append(("(setup)", report.passed, report.duration))
    elif report.when == "call":
        runs.append((item.name, report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        runs = _CRITERIA[n]
        ok = all(p for _, p, _ in runs)
        secs = sum(d for _, _, d in runs)
        names = ", ".join(name for name, _, _ in runs if name != "(setup)")
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({secs:.1f} s; {names})")
