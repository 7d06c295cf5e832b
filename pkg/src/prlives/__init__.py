"""Popescu-Rohrlich boxes, local hidden variable models, and a local
branching ("parallel lives") world that reproduces the box correlations."""

from .boxes import (
    Colour,
    NoisyBoxSpec,
    OutcomePair,
    bit_of,
    colour_of,
    ideal_pr_sample,
    noisy_pr_sample,
    pr_constraint,
    quantum_bound_p,
)
from .lhv import (
    DeterministicStrategy,
    SharedRandomness,
    bell_bound,
    enumerate_strategies,
    epr_prediction,
    optimal_lhv_sample,
    score_strategy,
)
from .rng import RandomStream

__version__ = "0.1.0"
