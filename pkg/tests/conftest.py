"""Shared test configuration: the acceptance-summary hook.

Acceptance tests register one line per criterion through
:func:`record_criterion`; the hook prints all of them in a dedicated
terminal section so every run ends with a compact pass/fail scoreboard.
"""

from __future__ import annotations

_CRITERIA: list[tuple[str, bool, str]] = []


def record_criterion(label: str, ok: bool, detail: str) -> None:
    _CRITERIA.append((label, ok, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in _CRITERIA:
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {label}: {detail}")
