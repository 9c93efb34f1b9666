import pytest

_RESULTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS] = []


@pytest.fixture
def criterion(request):
    """``criterion(k, ok, detail)`` records a PASS/FAIL line and fails the test when ``ok`` is false."""
    results = request.config.stash[_RESULTS]

    def record(k, ok, detail):
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        results.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
