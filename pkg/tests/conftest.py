import pytest

_CRITERIA: dict[str, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion this test gates")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        key = f"{mark.args[0]}: {mark.args[1]}"
        _CRITERIA.setdefault(key, []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: k.split(":")[0]):
        results = _CRITERIA[key]
        ok = all(o == "passed" for _, o in results)
        failed = [n for n, o in results if o != "passed"]
        tail = "" if ok else f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}{tail}")
