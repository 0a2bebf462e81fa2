"""Verification battery executor and the quick checks."""

import os
import time

import pytest

from strip_spectrum.spectral.executor import CHECKS, BatteryExecutor
from strip_spectrum.spectral.models import CheckStatus


def _passing(full, seed):
    return True, f"seed={seed}"


def _failing(full, seed):
    return False, "inequality violated"


def _raising(full, seed):
    raise RuntimeError("solver diverged")


def _sleeping(full, seed):
    time.sleep(5.0)
    return True, "late"


def _exiting(full, seed):
    os._exit(3)


def _make_executor(**checks) -> BatteryExecutor:
    return BatteryExecutor(checks=checks)


class TestBatteryExecutor:
    def test_statuses(self):
        executor = _make_executor(ok=_passing, bad=_failing, boom=_raising)
        ok, bad, boom = executor.run(seed=7)
        assert ok.status == CheckStatus.PASSED and ok.detail == "seed=7"
        assert bad.status == CheckStatus.FAILED and not bad.passed
        assert boom.status == CheckStatus.ERROR
        assert "RuntimeError: solver diverged" in boom.detail
        assert all(e.execution_time is not None for e in (ok, bad, boom))

    def test_timeout(self):
        executor = _make_executor(slow=_sleeping)
        executor.max_check_time = 0.05
        start = time.time()
        (slow,) = executor.run()
        assert time.time() - start < 3.0
        assert slow.status == CheckStatus.TIMEOUT
        assert not slow.passed
        assert slow.execution_time < 3.0

    def test_crashed_check_is_an_error(self):
        (crashed,) = _make_executor(crashed=_exiting).run()
        assert crashed.status == CheckStatus.ERROR
        assert "exited with code 3" in crashed.detail

    def test_subset_keeps_requested_order(self):
        executor = _make_executor(first=_passing, second=_failing, third=_passing)
        results = executor.run(names=["third", "first"])
        assert [e.name for e in results] == ["third", "first"]

    def test_unknown_check(self):
        with pytest.raises(ValueError, match="Unknown check"):
            _make_executor(ok=_passing).run(names=["missing"])

    def test_default_registry(self):
        assert BatteryExecutor().checks.keys() == CHECKS.keys()
        assert len(CHECKS) == 12


class TestQuickChecks:
    @pytest.mark.parametrize("name", [
        "cross_section_closed_forms",
        "testfunction_energies",
        "orlicz_chain",
        "amemiya_bruteforce",
        "inertia_dense",
        "projection_split",
        "lebesgue_chain",
        "robin_fd_oracle",
    ])
    def test_passes(self, name):
        passed, detail = CHECKS[name](False, 0)
        assert passed, detail


@pytest.mark.slow
class TestFullBattery:
    def test_all_checks_pass(self):
        executor = BatteryExecutor()
        executor.max_check_time = 3600.0
        failures = [(e.name, e.detail) for e in executor.run(full=True, seed=0) if not e.passed]
        assert failures == []
