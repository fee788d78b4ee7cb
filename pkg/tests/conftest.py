import os

# must precede the first numba import so the thread pool can grow to 8
os.environ["NUMBA_NUM_THREADS"] = "8"
os.environ.pop("STGAPS_CACHE_DIR", None)

from hypothesis import settings  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
