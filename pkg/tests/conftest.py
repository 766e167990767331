from pathlib import Path

import numpy as np
import pytest

from wtgf.channels import ParallelSourcesChannel, bsc, make_perfect_feedback

DATA = Path(__file__).parent / "data"


def parallel_instance(pz: float, ps: float = 0.2) -> ParallelSourcesChannel:
    """Noiseless Bob link, Eve's link BSC(pz); uniform source with Ys = Yhats and Zs = BSC(ps)(Ys)."""
    main = np.zeros((2, 2, 2))
    src = np.zeros((2, 2, 2))
    for x in range(2):
        main[x, x, :] = bsc(pz)[x]
        src[x, x, :] = 0.5 * bsc(ps)[x]
    return ParallelSourcesChannel.from_tables(main, src, *([(0, 1)] * 6))


def perfect_feedback(pz: float):
    yz = np.eye(2)[:, :, None] * bsc(pz)[:, None, :]
    return make_perfect_feedback(yz, (0, 1), (0, 1), (0, 1))


@pytest.fixture
def data_dir() -> Path:
    return DATA


# one summary line per acceptance criterion, printed after the test run
ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
