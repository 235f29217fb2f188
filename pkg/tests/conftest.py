import re

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance gate criteria")


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"::test_c(\d+)_", report.nodeid)
    if not m:
        return
    if report.when != "call" and not report.failed:
        return
    entry = _RESULTS.setdefault(int(m.group(1)), {"ok": True, "props": []})
    entry["ok"] &= report.passed or report.skipped
    entry["props"].extend(report.user_properties)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    from test_acceptance import CRITERIA

    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k not in _RESULTS:
            tr.write_line(f"criterion {k:2d} NOT RUN  {CRITERIA[k]}")
            continue
        entry = _RESULTS[k]
        detail = ", ".join(f"{name}={value}" for name, value in entry["props"])
        status = "PASS" if entry["ok"] else "FAIL"
        tr.write_line(f"criterion {k:2d} {status}  {CRITERIA[k]}" + (f"  [{detail}]" if detail else ""))
