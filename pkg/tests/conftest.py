"""Shared pytest hooks: the acceptance suite's one-line verdicts are echoed
in the terminal summary so they are visible without `-s`."""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
