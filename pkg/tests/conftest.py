"""Shared test plumbing: one visible pass/fail line per acceptance criterion."""

from __future__ import annotations

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("skipped", "SKIPPED")):
        for report in terminalreporter.stats.get(outcome, []):
            if ACCEPTANCE_FILE not in report.nodeid:
                continue
            if outcome != "skipped" and report.when != "call":
                continue
            name = report.nodeid.split("::")[-1].removeprefix("test_")
            reason = ""
            if outcome == "skipped":
                reason = f" ({report.longrepr[2].removeprefix('Skipped: ')})"
            lines.append(f"acceptance: {name}: {label}{reason}")
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
