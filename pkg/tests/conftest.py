import pytest

# criterion id -> (passed, detail); filled in by the acceptance tests
ACCEPTANCE: dict[str, tuple[bool, str]] = {}
CRITERIA = {
    "C1": "target-following oracle equivalence",
    "C2": "utility maximisation single-link oracle",
    "C3": "proximity mode selection gains",
    "C4": "range extension mode selection gains",
    "C5": "omega sweep monotonicity and gain over fixed power",
    "C6": "allocation constraint suite",
    "C7": "determinism across worker counts",
}


@pytest.fixture
def report():
    def record(key: str, checks: dict[str, bool], detail: str = "") -> bool:
        failed = [name for name, ok in checks.items() if not ok]
        text = detail + (f"; failed: {', '.join(failed)}" if failed else "")
        ACCEPTANCE[key] = (not failed, text)
        return not failed
    return record


def pytest_terminal_summary(terminalreporter):
    ran = [k for k in CRITERIA if k in ACCEPTANCE]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for key, title in CRITERIA.items():
        if key not in ACCEPTANCE:
            terminalreporter.write_line(f"{key} NOT RUN  {title}")
            continue
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker and rep.when == "call" and rep.failed and marker.args[0] not in ACCEPTANCE:
        ACCEPTANCE[marker.args[0]] = (False, f"error: {call.excinfo.typename}")
