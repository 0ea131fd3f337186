import time

import pytest

ACCEPTANCE = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE[number] = (title, ok, detail)
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
    print(line + (f" ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}"
                                    + (f" -- {detail}" if detail else ""))


@pytest.fixture(scope="session")
def grid_dataset():
    """The full detector grid at three runs per cell, built once per session."""
    from kubeyoyo.detector.dataset import DatasetGrid, build_dataset
    started = time.perf_counter()
    data = build_dataset(DatasetGrid(), runs_per_cell=3, seed=0)
    return data, time.perf_counter() - started
