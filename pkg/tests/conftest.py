"""Shared pytest hooks for this test tree.

The acceptance module records one verdict line per numbered criterion in
VERDICTS; echoing them in the terminal summary makes the full scorecard
visible in a plain `pytest -v` run, where stdout of passing tests is
otherwise captured and hidden.
"""

VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
