"""Run an instance's verification commands inside a workspace.

Two command groups: ones that already passed before the change (they must
keep passing) and ones the change must newly make pass. A command passes
when it exits 0 within the timeout; timeouts and missing executables are
failures, not crashes.
"""

from __future__ import annotations

import logging
import subprocess
from dataclasses import dataclass

from ..gitops import Workspace
from ..model import TestSpec

log = logging.getLogger(__name__)

_STDERR_TAIL = 2000


@dataclass(frozen=True)
class CommandResult:
    command: str
    exit_code: int | None  # None when the command timed out
    timed_out: bool
    stderr_tail: str

    @property
    def passed(self) -> bool:
        return self.exit_code == 0


@dataclass(frozen=True)
class TestRunResult:
    __test__ = False  # not a pytest class, despite the name

    t_old_passed: bool
    t_new_passed: bool
    records: tuple[CommandResult, ...]


def _run_command(command: str, cwd, timeout_seconds: int) -> CommandResult:
    try:
        proc = subprocess.run(command, shell=True, cwd=str(cwd),
                              capture_output=True, text=True,
                              timeout=timeout_seconds)
    except subprocess.TimeoutExpired as exc:
        stderr = exc.stderr or b""
        if isinstance(stderr, bytes):
            stderr = stderr.decode("utf-8", errors="replace")
        return CommandResult(command, None, True, stderr[-_STDERR_TAIL:])
    return CommandResult(command, proc.returncode, False,
                         proc.stderr[-_STDERR_TAIL:])


def run_tests(workspace: Workspace, test_spec: TestSpec) -> TestRunResult:
    """Execute both command groups in the workspace root. Every command
    runs even after a failure, so the records show the full picture."""
    records: list[CommandResult] = []
    old_ok = True
    for cmd in test_spec.pass_to_pass:
        result = _run_command(cmd, workspace.path, test_spec.timeout_seconds)
        records.append(result)
        old_ok = old_ok and result.passed
        if not result.passed:
            log.info("pass_to_pass failed (%s): %s", cmd, result.stderr_tail[-200:])
    new_ok = True
    for cmd in test_spec.fail_to_pass:
        result = _run_command(cmd, workspace.path, test_spec.timeout_seconds)
        records.append(result)
        new_ok = new_ok and result.passed
        if not result.passed:
            log.info("fail_to_pass failed (%s): %s", cmd, result.stderr_tail[-200:])
    return TestRunResult(t_old_passed=old_ok, t_new_passed=new_ok,
                         records=tuple(records))
