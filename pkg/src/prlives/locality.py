"""Remote-input invariance audits for the parallel-lives world.

A scenario is run twice, differing only in what the remote side does.
Until the local agent takes part in a meeting, its branch set must be
byte-for-byte the same in both runs at every tick.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .world import AgentSpec, World, advance, meet, new_world, press

DRAW = "draw"


@dataclass(frozen=True)
class Scenario:
    """Steps are tuples:

    ``("press", agent, box, input)`` with ``input`` 0, 1 or ``"draw"``
    (drawn from the agent's own stream), ``("advance", {agent: d})`` and
    ``("meet", a, b)``.
    """

    name: str
    agents: Tuple[AgentSpec, ...]
    local: str
    steps: Tuple[tuple, ...]
    variant: Tuple[tuple, ...]


@dataclass(frozen=True)
class AuditReport:
    scenario: str
    local: str
    passed: bool
    ticks_compared: int
    first_divergence: Optional[int]
    detail: Optional[str]
    records_differ: bool

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "local": self.local,
            "passed": self.passed,
            "ticks_compared": self.ticks_compared,
            "first_divergence": self.first_divergence,
            "detail": self.detail,
            "records_differ": self.records_differ,
        }


def apply_step(world: World, step: tuple) -> World:
    kind = step[0]
    if kind == "press":
        _, agent, box, x = step
        if x == DRAW:
            x = world.stream(agent, "input", box).bit()
        return press(world, agent, box, x)
    if kind == "advance":
        return advance(world, step[1])
    if kind == "meet":
        world, _ = meet(world, step[1], step[2])
        return world
    raise ValueError(f"unknown scenario step {kind!r}")


def _met(world: World, agent: str) -> bool:
    return any(
        e.kind == "meet" and agent in (e.payload["a"], e.payload["b"]) for e in world.event_log
    )


def run_scenario(seed: int, agents: Sequence[AgentSpec], local: str, steps: Sequence[tuple]):
    """Returns (final world, {tick: local state bytes}) with snapshots taken pre-meeting only."""
    world = new_world(agents, seed=seed)
    snaps: Dict[int, bytes] = {world.clock: world.agent_state_bytes(local)}
    watching = True
    for step in steps:
        world = apply_step(world, step)
        if not watching:
            continue
        if _met(world, local):
            # the state at this tick already includes the meeting
            snaps.pop(world.clock, None)
            watching = False
        else:
            snaps[world.clock] = world.agent_state_bytes(local)
    return world, snaps


def locality_audit(seed: int, scenario: Scenario) -> AuditReport:
    w1, s1 = run_scenario(seed, scenario.agents, scenario.local, scenario.steps)
    w2, s2 = run_scenario(seed, scenario.agents, scenario.local, scenario.variant)
    ticks = sorted(set(s1) & set(s2))
    first = None
    detail = None
    for t in ticks:
        if s1[t] != s2[t]:
            first = t
            detail = f"local state differs at tick {t}: {s1[t]!r} != {s2[t]!r}"
            break
    recs1 = [r.to_dict() for r in w1.interactions]
    recs2 = [r.to_dict() for r in w2.interactions]
    return AuditReport(
        scenario=scenario.name,
        local=scenario.local,
        passed=first is None and bool(ticks),
        ticks_compared=len(ticks),
        first_divergence=first,
        detail=detail,
        records_differ=recs1 != recs2,
    )


def _pair(d: int = 2, boxes=(0,)) -> Tuple[AgentSpec, ...]:
    return (
        AgentSpec("alice", -d, tuple(boxes), "A"),
        AgentSpec("bob", d, tuple(boxes), "B"),
    )


def _walk_together(d: int) -> List[tuple]:
    return [("advance", {"alice": 1, "bob": -1})] * d


def standard_scenarios() -> List[Scenario]:
    """The audit matrix: press/no-press, drawn inputs, travel and couriers."""
    out = []
    out.append(Scenario(
        "bob-input-0-vs-1", _pair(), "alice",
        (("press", "alice", 0, 1), ("press", "bob", 0, 0), *_walk_together(2)),
        (("press", "alice", 0, 1), ("press", "bob", 0, 1), *_walk_together(2)),
    ))
    out.append(Scenario(
        "bob-no-press-vs-press", _pair(), "alice",
        (("press", "alice", 0, 1), ("advance", {}), *_walk_together(2)),
        (("press", "alice", 0, 1), ("advance", {}), ("press", "bob", 0, 1), *_walk_together(2)),
    ))
    out.append(Scenario(
        "alice-view-drawn-inputs", _pair(), "bob",
        (("press", "alice", 0, 0), ("press", "bob", 0, DRAW), *_walk_together(2)),
        (("press", "alice", 0, 1), ("press", "bob", 0, DRAW), *_walk_together(2)),
    ))
    out.append(Scenario(
        "two-boxes-remote-order", _pair(boxes=(0, 1)), "alice",
        (("press", "alice", 0, 0), ("press", "alice", 1, 1),
         ("press", "bob", 0, 1), ("press", "bob", 1, 0), *_walk_together(2)),
        (("press", "alice", 0, 0), ("press", "alice", 1, 1),
         ("press", "bob", 1, 1), ("advance", {}), ("press", "bob", 0, 1), *_walk_together(2)),
    ))
    out.append(Scenario(
        "bob-travels-vs-stays", _pair(d=3), "alice",
        (("press", "alice", 0, 1), ("press", "bob", 0, 1),
         ("advance", {"bob": -1}), ("advance", {"bob": -1}), ("advance", {"bob": -1}),
         ("advance", {"bob": -1}), ("advance", {"bob": -1}), ("advance", {"bob": -1})),
        (("press", "alice", 0, 1), ("press", "bob", 0, 0),
         ("advance", {}), ("advance", {}), ("advance", {}), ("advance", {"bob": -1}),
         ("advance", {"bob": -1}), ("advance", {"bob": -1})),
    ))
    out.append(Scenario(
        "alice-travels-to-unsplit-bob", _pair(), "alice",
        (("press", "alice", 0, 1), ("advance", {"alice": 1}), ("advance", {"alice": 1}),
         ("advance", {"alice": 1}), ("advance", {"alice": 1})),
        (("press", "alice", 0, 1), ("press", "bob", 0, 1), ("advance", {"alice": 1}),
         ("advance", {"alice": 1}), ("advance", {"alice": 1}), ("advance", {"alice": 1})),
    ))
    courier = _pair(d=3) + (AgentSpec("carol", 2),)
    out.append(Scenario(
        "courier-carries-bob-vs-idle", courier, "alice",
        (("press", "alice", 0, 1), ("press", "bob", 0, 1), ("advance", {"carol": 1}),
         *[("advance", {"carol": -1})] * 6),
        (("press", "alice", 0, 1), ("press", "bob", 0, 0), ("advance", {}),
         *[("advance", {"carol": -1})] * 6),
    ))
    return out
