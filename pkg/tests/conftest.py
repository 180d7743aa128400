import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

GOLDEN = Path(__file__).parent / "golden"
ACCEPTANCE: dict[str, dict] = {}


def pytest_addoption(parser):
    parser.addoption("--regen-golden", action="store_true", default=False,
                     help="rewrite golden fixture files instead of comparing against them")


@pytest.fixture
def golden(request):
    """Compare text against tests/golden/<name>, or rewrite it with --regen-golden."""
    regen = request.config.getoption("--regen-golden")

    def check(name: str, text: str):
        path = GOLDEN / name
        if regen:
            path.write_text(text, encoding="utf-8")
            return
        if not path.exists():
            pytest.fail(f"golden file {name} is missing; run pytest --regen-golden")
        assert text == path.read_text(encoding="utf-8"), f"output differs from golden/{name}"

    return check


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(code, title): one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    code, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        entry = ACCEPTANCE.setdefault(code, {"title": title, "cases": [], "seconds": 0.0})
        entry["cases"].append("passed" if rep.passed else rep.outcome)
        entry["seconds"] += rep.duration


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(ACCEPTANCE):
        e = ACCEPTANCE[code]
        ok = sum(c == "passed" for c in e["cases"])
        status = "PASS" if ok == len(e["cases"]) else "FAIL"
        terminalreporter.write_line(
            f"{code} {status}  {e['title']}  [{ok}/{len(e['cases'])} cases, {e['seconds']:.1f}s]")
