import pytest
from hypothesis import settings

settings.register_profile("latscatter", deadline=None, max_examples=40)
settings.load_profile("latscatter")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.fixture
def detail(request):
    """Free-text summary a criterion test attaches to its report line."""
    notes: list[str] = []
    request.node._criterion_notes = notes
    return notes


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    notes = "; ".join(getattr(item, "_criterion_notes", []))
    _CRITERIA[mark.args[0]] = ("PASS" if rep.passed else "FAIL", notes)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, notes = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {notes}")
