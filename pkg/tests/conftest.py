from __future__ import annotations

import asyncio
import selectors
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


class _SkippingSelector(selectors.BaseSelector):
    """Never blocks: when nothing is ready, jump the loop's clock by the timeout."""

    def __init__(self, loop_ref: list) -> None:
        self._real = selectors.DefaultSelector()
        self._loop_ref = loop_ref

    def register(self, fileobj, events, data=None):
        return self._real.register(fileobj, events, data)

    def unregister(self, fileobj):
        return self._real.unregister(fileobj)

    def modify(self, fileobj, events, data=None):
        return self._real.modify(fileobj, events, data)

    def get_map(self):
        return self._real.get_map()

    def close(self):
        self._real.close()

    def select(self, timeout=None):
        ready = self._real.select(0)
        if not ready:
            if timeout is None:
                raise RuntimeError("virtual-time loop would block forever")
            self._loop_ref[0].advance(timeout)
        return ready


class VirtualTimeLoop(asyncio.SelectorEventLoop):
    def __init__(self) -> None:
        ref: list = [None]
        self._now = 0.0
        super().__init__(_SkippingSelector(ref))
        ref[0] = self

    def time(self) -> float:
        return self._now

    def advance(self, dt: float) -> None:
        self._now += max(0.0, dt)


@pytest.fixture
def vloop():
    loop = VirtualTimeLoop()
    try:
        yield loop
    finally:
        loop.close()


def run(coro):
    return asyncio.run(coro)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


BENCH_CONFIG = FIXTURES / "benchmark" / "config.yaml"


@pytest.fixture
def make_config(tmp_path):
    """Load the fixture benchmark config with run and cache dirs under tmp_path."""
    from deeplit.harness import load_config

    def make(run="run", cache="cache", **overrides):
        return load_config(BENCH_CONFIG, {"run_dir": str(tmp_path / run), "cache_dir": str(tmp_path / cache),
                                          **overrides})
    return make


# -- acceptance summary -----------------------------------------------------------------

ACCEPTANCE: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name, verdict in ACCEPTANCE.items():
            terminalreporter.write_line(f"{verdict}  {name}")
