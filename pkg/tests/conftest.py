import pytest

_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_KEY] = []


@pytest.fixture
def verdict(request):
    """Record a one-line acceptance verdict, echoed in the terminal summary."""
    lines = request.config.stash[_KEY]

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
