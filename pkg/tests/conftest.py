import pytest

from prlives.boxes import Colour, colour_of, pr_constraint
import time

from prlives.harness import TrialRecord, run_protocol, side_input
from prlives.rng import RandomStream

ACCEPTANCE_LINES = []


class FixedStream:
    """Stand-in stream that replays given bits and uniforms."""

    def __init__(self, bits=(), uniforms=()):
        self._bits = list(bits)
        self._uniforms = list(uniforms)

    def bit(self):
        return self._bits.pop(0)

    def bits(self, k):
        out = 0
        for i in range(k):
            out |= self.bit() << i
        return out

    def uniform(self):
        return self._uniforms.pop(0)


@pytest.fixture
def fixed_stream():
    return FixedStream


@pytest.fixture(scope="session")
def signalling_records():
    """Planted violation: Bob's colour copies Alice's input."""
    out = []
    for i in range(100_000):
        x = side_input(11, i, "alice")
        y = side_input(11, i, "bob")
        a = Colour(RandomStream(11, (i, "alice", "colour")).bit())
        b = colour_of(x)
        out.append(TrialRecord(i, 0, "signalling", x, a, y, b, pr_constraint(x, y, a, b)))
    return out


@pytest.fixture
def acceptance():
    def report(number, title, passed, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}  {detail}".rstrip())
        print(ACCEPTANCE_LINES[-1])
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pl_run():
    """One 10^5-trial parallel-lives run shared by every test that needs it."""
    t0 = time.perf_counter()
    report, records = run_protocol("pl", 100_000, 7)
    return report, records, time.perf_counter() - t0
