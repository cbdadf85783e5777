import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(s.split("[", 1)[1].split("]", 1)[0])):
        terminalreporter.write_line(line)
    passed = sum(line.startswith("PASS") for line in lines)
    terminalreporter.write_line(f"{passed}/{len(lines)} criteria passed")
