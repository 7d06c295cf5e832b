"""Local hidden variable models of the box pair.

A local model gives each box a fixed answer per input, chosen from shared
randomness. Every such model is a mixture of the 16 deterministic
strategies below, so exhaustive enumeration settles the classical bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, NamedTuple, Tuple

from .boxes import Colour, OutcomePair, check_bit, colour_of, pr_constraint

INPUT_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


class DeterministicStrategy(NamedTuple):
    """Hidden bits: Alice answers ``a0``/``a1``, Bob answers ``b0``/``b1``."""

    a0: int
    a1: int
    b0: int
    b1: int

    def alice(self, x: int) -> int:
        return self.a1 if x else self.a0

    def bob(self, y: int) -> int:
        return self.b1 if y else self.b0

    def complement_alice(self) -> "DeterministicStrategy":
        return self._replace(a0=1 - self.a0, a1=1 - self.a1)


@dataclass(frozen=True)
class StrategyScore:
    strategy: DeterministicStrategy
    satisfied: FrozenSet[Tuple[int, int]]
    success: Fraction

    @property
    def failed(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(INPUT_PAIRS) - self.satisfied


class BellBound(NamedTuple):
    value: Fraction
    witness: DeterministicStrategy


class SharedRandomness(NamedTuple):
    """Three shared bits: which input pair to give up on, and a global flip.

    ``drop_x``/``drop_y`` name the input pair the pre-agreed strategy
    fails on; ``flip`` complements both outputs.
    """

    drop_x: int
    drop_y: int
    flip: int

    @classmethod
    def from_bits(cls, bits: int) -> "SharedRandomness":
        return cls((bits >> 2) & 1, (bits >> 1) & 1, bits & 1)

    @classmethod
    def draw(cls, rng) -> "SharedRandomness":
        return cls.from_bits(rng.bits(3))


class EprPrediction(NamedTuple):
    on_input_0: Colour
    on_input_1: Colour


def enumerate_strategies() -> List[DeterministicStrategy]:
    """All 16 strategies, lexicographic on (a0, a1, b0, b1)."""
    return [DeterministicStrategy(*bits) for bits in itertools.product((0, 1), repeat=4)]


def score_strategy(s: DeterministicStrategy) -> StrategyScore:
    satisfied = frozenset(
        (x, y) for x, y in INPUT_PAIRS if s.alice(x) ^ s.bob(y) == x & y
    )
    return StrategyScore(s, satisfied, Fraction(len(satisfied), 4))


def bell_bound() -> BellBound:
    """Best success of any local model, with the first strategy reaching it."""
    best = max(
        (score_strategy(s) for s in enumerate_strategies()),
        key=lambda sc: sc.success,
    )
    return BellBound(best.success, best.strategy)


# One strategy per abandoned input pair; each satisfies the other three
# equations. Checked against score_strategy in the test suite.
STRATEGY_FAILING = {
    (0, 0): DeterministicStrategy(0, 1, 1, 0),
    (0, 1): DeterministicStrategy(0, 0, 0, 1),
    (1, 0): DeterministicStrategy(0, 1, 0, 0),
    (1, 1): DeterministicStrategy(0, 0, 0, 0),
}


def optimal_lhv_sample(shared: SharedRandomness, x: int, y: int) -> OutcomePair:
    x = check_bit(x, "x")
    y = check_bit(y, "y")
    s = STRATEGY_FAILING[(shared.drop_x, shared.drop_y)]
    return OutcomePair(
        colour_of(s.alice(x) ^ shared.flip),
        colour_of(s.bob(y) ^ shared.flip),
    )


def epr_prediction(alice_input: int, alice_colour: Colour) -> EprPrediction:
    """Bob's colour for each of his inputs, forced by Alice's (input, colour)."""
    x = check_bit(alice_input, "alice_input")
    return EprPrediction(
        *(Colour(alice_colour.value ^ (x & y)) for y in (0, 1))
    )


def monte_carlo_success(s: DeterministicStrategy, n: int, rng) -> float:
    """Fraction of ``n`` uniformly drawn input pairs on which ``s`` obeys the table."""
    hits = 0
    for _ in range(n):
        x, y = rng.bit(), rng.bit()
        if pr_constraint(x, y, colour_of(s.alice(x)), colour_of(s.bob(y))):
            hits += 1
    return hits / n
