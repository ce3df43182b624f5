from __future__ import annotations

import functools
import time

RESULTS = []


def criterion(n: int, title: str):
    """Record a PASS/FAIL line for the wrapped test and print it."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            status = "FAIL"
            try:
                fn(*args, **kwargs)
                status = "PASS"
            finally:
                secs = time.perf_counter() - t0
                RESULTS.append((n, title, status, secs))
                print(f"criterion {n:2d}: {status}  {title} ({secs:.1f}s)")
        return run

    return wrap
