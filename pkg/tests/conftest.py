import pytest

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "notes": []})
        entry["ok"] &= rep.passed
        detail = dict(item.user_properties).get("measured")
        if detail:
            entry["notes"].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        tr.write_line(f"criterion {number:2d} {'PASS' if e['ok'] else 'FAIL'}  {e['title']}")
        for note in e["notes"]:
            tr.write_line(f"             {note}")
    passed = sum(e["ok"] for e in _CRITERIA.values())
    tr.write_line(f"{passed}/{len(_CRITERIA)} criteria pass")
