def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if not LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(LINES):
        terminalreporter.write_line(LINES[number])
