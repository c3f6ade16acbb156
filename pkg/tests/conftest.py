"""Collects the acceptance-criterion verdicts and prints them after the run."""

import pytest

_VERDICTS = {}


class Recorder:
    def __call__(self, number: int, title: str, passed: bool, detail: str = "", extra=()):
        _VERDICTS[number] = (title, bool(passed), detail, list(extra))
        return passed


@pytest.fixture(scope="session")
def record():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        title, passed, detail, extra = _VERDICTS[number]
        tag = "PASS" if passed else "FAIL"
        tr.write_line(f"[{tag}] criterion {number:>2}: {title}" + (f" | {detail}" if detail else ""))
        for line in extra:
            tr.write_line(f"        {line}")
