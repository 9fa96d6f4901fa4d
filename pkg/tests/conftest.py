"""Suite plumbing: print the release-gate scoreboard after the run."""

from tests import helpers


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE_VERDICTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in helpers.ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
