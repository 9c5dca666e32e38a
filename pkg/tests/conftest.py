"""Session-wide timing used by the runtime acceptance check."""

import time

SESSION_T0 = time.monotonic()

SUITE_BUDGET_S = 300.0


def session_elapsed():
    return time.monotonic() - SESSION_T0


def pytest_sessionfinish(session, exitstatus):
    # enforce the end-to-end budget, not just the point-in-time check
    elapsed = session_elapsed()
    if elapsed > SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1
        print(f"\nsuite exceeded its {SUITE_BUDGET_S:.0f} s budget: {elapsed:.1f} s")
