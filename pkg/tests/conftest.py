import time

_SESSION_START = time.monotonic()


def session_elapsed() -> float:
    return time.monotonic() - _SESSION_START


def pytest_sessionfinish(session, exitstatus):
    total = session_elapsed()
    print(f"\nTOTAL SUITE WALL TIME: {total:.1f} s (budget 120 s)")
