import helpers


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(helpers.ACCEPTANCE):
        title, parts = helpers.ACCEPTANCE[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name}: {'ok' if good else 'MISS'} ({info})" for name, good, info in parts)
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} | {detail}")
