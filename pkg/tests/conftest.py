# one line per acceptance criterion, printed after the run
CRITERIA: dict[str, list[str]] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    CRITERIA.setdefault(f"{n:02d}", []).append(f"{'pass' if ok else 'FAIL'}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        lines = CRITERIA[key]
        status = "PASS" if all(s.startswith("pass") for s in lines) else "FAIL"
        terminalreporter.write_line(f"criterion {int(key):2d} {status} | " + "; ".join(lines))
