from __future__ import annotations

import functools
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from qfourier import zeros as Z  # noqa: E402
from qfourier.qcore import QContext  # noqa: E402

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@functools.lru_cache(maxsize=None)
def ctx_for(q: float) -> QContext:
    return QContext.for_q(q)


@functools.lru_cache(maxsize=None)
def sine_table(q: float, n: int = 40) -> Z.ZeroTable:
    return Z.find_sine_zeros(n, ctx_for(q))


@functools.lru_cache(maxsize=None)
def cosine_table(q: float, n: int = 40) -> Z.ZeroTable:
    return Z.find_cosine_zeros(n, ctx_for(q))


@pytest.fixture(scope="session")
def ctx05():
    return ctx_for(0.5)


@pytest.fixture(scope="session")
def ctx025():
    return ctx_for(0.25)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("QFOURIER_CACHE_DIR", str(tmp_path / "cache"))


# acceptance report: one line per criterion check, printed after the run

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def record(label: str, residual: float, tol: float) -> bool:
        ok = bool(residual <= tol)
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {label}: {residual:.3e} (tol {tol:.0e})")
        print(_ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
