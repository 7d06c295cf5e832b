"""Nonlocal (PR) boxes: colours, the correlation rule, and box samplers.

Inputs are plain ints 0/1. Colours are presentation only; every XOR is
done on bits, with green <-> 0 and red <-> 1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "Colour",
    "OutcomePair",
    "NoisyBoxSpec",
    "check_bit",
    "colour_of",
    "bit_of",
    "pr_constraint",
    "ideal_pr_sample",
    "noisy_pr_sample",
    "quantum_bound_p",
]


class Colour(enum.Enum):
    GREEN = 0
    RED = 1

    def __str__(self) -> str:
        return self.name.lower()

    @property
    def complement(self) -> "Colour":
        return Colour(1 - self.value)

    @classmethod
    def parse(cls, text: str) -> "Colour":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown colour {text!r}") from None


_BY_BIT = (Colour.GREEN, Colour.RED)


class OutcomePair(NamedTuple):
    alice: Colour
    bob: Colour


@dataclass(frozen=True)
class NoisyBoxSpec:
    """A box pair that obeys the correlation table with probability ``p``."""

    p: float

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"working probability must lie in [0, 1], got {self.p}")


def check_bit(value, name: str = "input") -> int:
    if value.__class__ is not int or value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value!r}")
    return value


def colour_of(bit: int) -> Colour:
    return _BY_BIT[check_bit(bit, "bit")]


def bit_of(colour: Colour) -> int:
    return colour.value


def pr_constraint(x: int, y: int, a: Colour, b: Colour) -> bool:
    """True iff the outcome pair obeys the box table: a XOR b == x AND y."""
    return (a.value ^ b.value) == (x & y)


def _forced_bob(x: int, y: int, a: Colour) -> Colour:
    return _BY_BIT[a.value ^ (x & y)]


def ideal_pr_sample(x: int, y: int, rng) -> OutcomePair:
    """Sample a perfect box pair.

    Reads both inputs, so this is the nonlocal reference oracle used by
    tests and the harness; the parallel-lives world never calls it.
    ``rng`` is anything with a ``bit()`` method.
    """
    x = check_bit(x, "x")
    y = check_bit(y, "y")
    a = _BY_BIT[rng.bit()]
    return OutcomePair(a, _forced_bob(x, y, a))


def noisy_pr_sample(spec: NoisyBoxSpec, x: int, y: int, rng) -> OutcomePair:
    # Alice's colour is drawn first and never touched again, so both
    # marginals stay exactly uniform; only Bob's colour carries the noise.
    x = check_bit(x, "x")
    y = check_bit(y, "y")
    a = _BY_BIT[rng.bit()]
    flip = 0 if rng.uniform() < spec.p else 1
    return OutcomePair(a, _BY_BIT[a.value ^ (x & y) ^ flip])


def quantum_bound_p() -> float:
    """Best working probability a quantum box pair can reach, (2 + sqrt 2) / 4."""
    return (2.0 + math.sqrt(2.0)) / 4.0
