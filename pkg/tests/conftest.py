import pytest

_LINES = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_LINES] = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance line; a test that raises before recording is reported as FAIL."""
    lines = request.config.stash[_LINES]
    number = request.node.get_closest_marker("criterion").args[0]
    title = request.node.get_closest_marker("criterion").args[1]
    state = {}

    def record(ok: bool, detail: str):
        state["ok"] = bool(ok)
        lines[number] = f"acceptance {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"

    yield record
    if "ok" not in state:
        lines[number] = f"acceptance {number:>2} FAIL  {title}: raised before completion"


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash[_LINES]
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
