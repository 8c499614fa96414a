def pytest_terminal_summary(terminalreporter):
    """Print one line per acceptance criterion that ran in this session."""
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key, _ in mod.CRITERIA:
        if key in mod.RESULTS:
            passed, detail = mod.RESULTS[key]
            terminalreporter.write_line(mod.format_line(key, passed, detail))
