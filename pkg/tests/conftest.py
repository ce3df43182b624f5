from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from helpers_report import RESULTS  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, status, secs in sorted(RESULTS):
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title} ({secs:.1f}s)")
