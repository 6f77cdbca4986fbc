"""Shared pytest plumbing: collect acceptance verdicts and echo them last."""

ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(
            "%s %2d  %-38s %s" % ("PASS" if ok else "FAIL", num, name, detail)
        )
