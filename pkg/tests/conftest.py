from __future__ import annotations

import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): a numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        if rep.failed and call.excinfo is not None:
            detail = f"{detail} | {call.excinfo.typename}: {str(call.excinfo.value).splitlines()[0][:160]}"
        _ACCEPTANCE[marker.args[0]] = (rep.passed, detail.strip(" |"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, (ok, detail) in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
