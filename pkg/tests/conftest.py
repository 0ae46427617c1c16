def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    results = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and status == "passed":
                continue
            name = nodeid.split("::", 1)[1]
            ok = status == "passed"
            results[name] = results.get(name, True) and ok
    if results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, ok in results.items():
            terminalreporter.write_line(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}")
