"""Shared fixtures; collects the acceptance verdicts for the terminal summary."""

from __future__ import annotations

import pytest

_VERDICTS: dict[int, list[tuple[str, bool, str]]] = {}


class CriterionRecorder:
    """Stores one named check of a numbered acceptance criterion."""

    def __call__(self, number: int, check: str, passed: bool, detail: str) -> bool:
        _VERDICTS.setdefault(number, []).append((check, bool(passed), detail))
        print(f"criterion {number} [{check}] {'PASS' if passed else 'FAIL'}: {detail}")
        return bool(passed)


@pytest.fixture
def criterion() -> CriterionRecorder:
    return CriterionRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        checks = _VERDICTS[number]
        ok = all(passed for _, passed, _ in checks)
        failed = [f"{name}: {detail}" for name, passed, detail in checks if not passed]
        summary = "; ".join(failed) if failed else "; ".join(f"{name}: {detail}" for name, _, detail in checks)
        terminalreporter.write_line(f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {summary}")
