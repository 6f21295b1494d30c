import time
from dataclasses import replace

import pytest

from bric.config import PRESETS, build
from bric.sim import compute_metrics, run_closed_loop

# (criterion, passed, detail) rows printed at the end of the session
ACCEPTANCE = []


class Run:
    def __init__(self, cfg):
        plant, ctrl = build(cfg)
        start = time.perf_counter()
        self.traj = run_closed_loop(plant, ctrl, cfg.sim, cfg.x0, cfg.z0)
        self.seconds = time.perf_counter() - start
        self.metrics = compute_metrics(self.traj, cfg.envelope)
        self.cfg = cfg


@pytest.fixture(scope="session")
def runs():
    """Lazily simulated presets, shared by every test in the session.

    ``runs("fig1_bric", h=5e-4)`` overrides simulation settings.
    """
    cache = {}

    def get(name, **sim):
        key = (name, tuple(sorted(sim.items())))
        if key not in cache:
            cfg = PRESETS[name]
            if sim:
                cfg = replace(cfg, sim=replace(cfg.sim, **sim))
            cache[key] = Run(cfg)
        return cache[key]

    return get


@pytest.fixture
def report():
    def add(criterion, passed, detail):
        ACCEPTANCE.append((criterion, bool(passed), detail))
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
