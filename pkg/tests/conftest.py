import pytest

from biphoton import make_scenario

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, title, checks):
    """Store one summary line per acceptance criterion and return overall status.

    ``checks`` is a list of ``(label, ok, detail)``.
    """
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{label}: {det} [{'ok' if good else 'FAIL'}]" for label, good, det in checks)
    ACCEPTANCE_LINES.append(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def parallel():
    return make_scenario(geometry="custom", np_eff=-0.1436)


@pytest.fixture(scope="session")
def perp(parallel):
    return parallel.with_np_eff(0.0)
