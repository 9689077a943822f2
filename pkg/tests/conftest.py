import numpy as np
import pytest

from wrinklemap.regions import load_region_mask


@pytest.fixture(scope="session")
def regions():
    return load_region_mask()


def furrow_image(size=256, row=128.0, depth=80.0, width=1.5, background=200.0):
    """Bright image with one horizontal Gaussian-profile dark furrow."""
    y = np.arange(size, dtype=float)[:, None]
    profile = depth * np.exp(-0.5 * ((y - row) / width) ** 2)
    return np.broadcast_to(background - profile, (size, size)).copy()


def cross_image(size=96, depth=80.0, width=1.5, background=200.0):
    y, x = np.mgrid[0:size, 0:size].astype(float)
    c = size / 2
    arm_h = depth * np.exp(-0.5 * ((y - c) / width) ** 2) * (np.abs(x - c) < size * 0.35)
    arm_v = depth * np.exp(-0.5 * ((x - c) / width) ** 2) * (np.abs(y - c) < size * 0.35)
    return background - np.maximum(arm_h, arm_v)


# -- acceptance reporting -------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


class Criterion:
    """Collects named checks for one acceptance criterion."""

    def __init__(self, number, title, lines):
        self.number, self.title, self.lines = number, title, lines
        self.failed = []
        self.start = None
        self.extra = 0.0

    def check(self, name, ok, detail=""):
        if not ok:
            self.failed.append(f"{name} ({detail})" if detail else name)
        return ok

    def __enter__(self):
        import time
        self.start = time.perf_counter()
        return self

    def add_time(self, seconds):
        # work done in a fixture on this criterion's behalf
        self.extra += seconds

    def elapsed(self):
        import time
        return time.perf_counter() - self.start + self.extra

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.failed.append(f"{exc_type.__name__}: {exc}")
        status = "FAIL" if self.failed else "PASS"
        line = f"criterion {self.number} {status}: {self.title} [{self.elapsed():.2f} s]"
        if self.failed:
            line += " -- " + "; ".join(self.failed)
        self.lines.append(line)
        print(line)
        if exc_type is None:
            assert not self.failed, line
        return False


@pytest.fixture
def criterion(request):
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])
    return lambda number, title: Criterion(number, title, lines)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
