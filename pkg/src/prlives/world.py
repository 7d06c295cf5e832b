"""The parallel-lives world: local splitting on a 1-D lattice.

Agents live on integer cells and move at most one cell per tick, which
makes one cell per tick the speed of light. Pressing a button splits
every copy (branch) of the presser into a green copy and a red copy; no
other agent is touched. Correlations only appear when two agents share a
cell and ``meet``: branches interact only if their combined records obey
the box table, and an agent whose half of a box is still undetermined is
split on the spot into the two programs that table allows.

All world operations are functional: they return a new ``World`` and
leave their argument untouched.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from .boxes import Colour, check_bit, pr_constraint
from .lhv import epr_prediction
from .rng import RandomStream

SIDES = ("A", "B")


class WorldError(ValueError):
    pass


class DoublePressError(WorldError):
    pass


class LightSpeedError(WorldError):
    pass


class NotCoLocatedError(WorldError):
    pass


def other_side(side: str) -> str:
    return "B" if side == "A" else "A"


@dataclass(frozen=True, order=True)
class SpacetimePoint:
    t: int
    x: int

    def spacelike_to(self, other: "SpacetimePoint") -> bool:
        return abs(self.x - other.x) > abs(self.t - other.t)

    def reaches(self, other: "SpacetimePoint") -> bool:
        """True if ``other`` lies in this point's future light cone (inclusive)."""
        dt = other.t - self.t
        return dt >= 0 and abs(other.x - self.x) <= dt


@dataclass(frozen=True)
class AgentSpec:
    """Static description of an agent. ``side`` is None for couriers."""

    id: str
    position: int = 0
    boxes: Tuple[int, ...] = ()
    side: Optional[str] = None


class Observation(NamedTuple):
    input: int
    colour: Colour


class BoxProgram(NamedTuple):
    on_input_0: Colour
    on_input_1: Colour

    def __call__(self, y: int) -> Colour:
        return self.on_input_1 if y else self.on_input_0


Fact = Tuple[int, str]  # (box id, side)


@dataclass(frozen=True)
class Branch:
    """One copy of an agent.

    ``observations`` are this copy's own button presses, ``box_programs``
    fix the answers of its not-yet-pressed boxes, and ``knowledge`` holds
    the remote outcomes it has learned from the copies it interacted with.
    """

    agent: str
    side: Optional[str]
    observations: Mapping[int, Observation] = field(default_factory=dict)
    box_programs: Mapping[int, BoxProgram] = field(default_factory=dict)
    knowledge: Mapping[Fact, Observation] = field(default_factory=dict)
    lineage: Tuple[tuple, ...] = ()

    @cached_property
    def lineage_id(self) -> str:
        raw = json.dumps([self.agent, [list(e) for e in self.lineage]], separators=(",", ":"))
        return hashlib.blake2b(raw.encode("utf-8"), digest_size=8).hexdigest()

    def facts(self) -> Dict[Fact, Observation]:
        out = dict(self.knowledge)
        if self.side is not None:
            for box, obs in self.observations.items():
                out[(box, self.side)] = obs
        return out

    def colour(self, box: int) -> Optional[Colour]:
        obs = self.observations.get(box)
        return obs.colour if obs else None

    def to_dict(self) -> dict:
        return {
            "id": self.lineage_id,
            "agent": self.agent,
            "side": self.side,
            "observations": [[b, o.input, str(o.colour)] for b, o in sorted(self.observations.items())],
            "programs": [[b, str(p.on_input_0), str(p.on_input_1)] for b, p in sorted(self.box_programs.items())],
            "knowledge": [[b, s, o.input, str(o.colour)] for (b, s), o in sorted(self.knowledge.items())],
            "lineage": [list(e) for e in self.lineage],
        }


class JointEntry(NamedTuple):
    box: int
    x: int
    a: Colour
    y: int
    b: Colour


@dataclass(frozen=True)
class InteractionRecord:
    trial: int
    point: SpacetimePoint
    agent_a: str
    agent_b: str
    branch_a: str
    branch_b: str
    joint: Tuple[JointEntry, ...]

    def satisfied(self) -> bool:
        return all(pr_constraint(e.x, e.y, e.a, e.b) for e in self.joint)

    def entry(self, box: int) -> Optional[JointEntry]:
        for e in self.joint:
            if e.box == box:
                return e
        return None

    def to_dict(self) -> dict:
        return {
            "trial": self.trial,
            "tick": self.point.t,
            "x": self.point.x,
            "agent_a": self.agent_a,
            "agent_b": self.agent_b,
            "branch_a": self.branch_a,
            "branch_b": self.branch_b,
            "joint": [[e.box, e.x, str(e.a), e.y, str(e.b)] for e in self.joint],
        }


class Event(NamedTuple):
    point: SpacetimePoint
    kind: str
    payload: dict

    def to_line(self) -> str:
        return json.dumps(
            {"tick": self.point.t, "x": self.point.x, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "Event":
        d = json.loads(line)
        return cls(SpacetimePoint(d["tick"], d["x"]), d["kind"], d["payload"])


@dataclass(frozen=True)
class World:
    agents: Mapping[str, AgentSpec]
    positions: Mapping[str, int]
    branches: Mapping[str, Tuple[Branch, ...]]
    clock: int = 0
    seed: int = 0
    trial: int = 0
    event_log: Tuple[Event, ...] = ()
    interactions: Tuple[InteractionRecord, ...] = ()

    def stream(self, agent: str, *purpose) -> RandomStream:
        """Randomness private to ``agent``: keyed by (trial, agent, purpose...)."""
        return RandomStream(self.seed, (self.trial, agent) + tuple(purpose))

    def point_of(self, agent: str) -> SpacetimePoint:
        return SpacetimePoint(self.clock, self.positions[agent])

    def agent_state(self, agent: str) -> List[dict]:
        return [b.to_dict() for b in self.branches[agent]]

    def agent_state_bytes(self, agent: str) -> bytes:
        return json.dumps(self.agent_state(agent), sort_keys=True, separators=(",", ":")).encode("utf-8")

    def event_lines(self) -> List[str]:
        return [e.to_line() for e in self.event_log]

    def _log(self, agent: str, kind: str, payload: dict) -> Tuple[Event, ...]:
        return self.event_log + (Event(self.point_of(agent), kind, payload),)


def new_world(agents: Sequence[AgentSpec], seed: int = 0, trial: int = 0) -> World:
    """Build a world with one unsplit branch per agent at tick 0.

    Every box id must be held once on side A and once on side B; the two
    halves with the same id form a pair.
    """
    specs: Dict[str, AgentSpec] = {}
    owners: Dict[Tuple[int, str], str] = {}
    side_agents: Dict[str, str] = {}
    for spec in agents:
        if spec.id in specs:
            raise WorldError(f"duplicate agent id {spec.id!r}")
        if spec.side is None:
            if spec.boxes:
                raise WorldError(f"courier {spec.id!r} cannot own boxes")
        elif spec.side not in SIDES:
            raise WorldError(f"side must be 'A', 'B' or None, got {spec.side!r}")
        for box in spec.boxes:
            key = (box, spec.side)
            if key in owners:
                raise WorldError(
                    f"box {box} on side {spec.side} owned by both {owners[key]!r} and {spec.id!r}"
                )
            owners[key] = spec.id
        if spec.side is not None:
            if spec.side in side_agents:
                raise WorldError(
                    f"side {spec.side} already held by {side_agents[spec.side]!r}; only couriers may be added"
                )
            side_agents[spec.side] = spec.id
        specs[spec.id] = replace(spec, boxes=tuple(spec.boxes))
    for box, side in owners:
        if (box, other_side(side)) not in owners:
            raise WorldError(f"box {box} on side {side} has no partner on side {other_side(side)}")
    return World(
        agents=specs,
        positions={a.id: a.position for a in specs.values()},
        branches={a.id: (Branch(a.id, a.side),) for a in specs.values()},
        seed=seed,
        trial=trial,
    )


def _require_agent(world: World, agent: str) -> AgentSpec:
    try:
        return world.agents[agent]
    except KeyError:
        raise WorldError(f"unknown agent {agent!r}") from None


def press(world: World, agent: str, box_id: int, input: int) -> World:
    """Push button ``input`` on ``agent``'s box ``box_id``.

    Unprogrammed branches split into a green and a red copy; branches that
    already carry a program for the box just record its answer.
    """
    spec = _require_agent(world, agent)
    if box_id not in spec.boxes:
        raise WorldError(f"{agent!r} does not own box {box_id}")
    x = check_bit(input, "input")
    out: List[Branch] = []
    for br in world.branches[agent]:
        if box_id in br.observations:
            raise DoublePressError(f"box {box_id} of {agent!r} has already been used")
        prog = br.box_programs.get(box_id)
        if prog is not None:
            programs = dict(br.box_programs)
            del programs[box_id]
            obs = {**br.observations, box_id: Observation(x, prog(x))}
            out.append(replace(br, observations=obs, box_programs=programs))
            continue
        for colour in (Colour.GREEN, Colour.RED):
            out.append(
                replace(
                    br,
                    observations={**br.observations, box_id: Observation(x, colour)},
                    lineage=br.lineage + (("press", box_id, x, str(colour)),),
                )
            )
    payload = {"agent": agent, "box": box_id, "input": x, "branches": len(out)}
    return replace(
        world,
        branches={**world.branches, agent: tuple(out)},
        event_log=world._log(agent, "press", payload),
    )


def advance(world: World, moves: Optional[Mapping[str, int]] = None) -> World:
    """Move agents by at most one cell, tick the clock, then run meetings.

    A meeting fires for every pair of agents that share a cell after the
    move but did not share one before it.
    """
    moves = dict(moves or {})
    for agent, d in moves.items():
        _require_agent(world, agent)
        if isinstance(d, bool) or d not in (-1, 0, 1):
            raise LightSpeedError(f"{agent!r} cannot move {d!r} cells in one tick")
    before = dict(world.positions)
    after = {a: p + moves.get(a, 0) for a, p in before.items()}
    log = list(world.event_log)
    for agent in sorted(moves):
        if moves[agent]:
            log.append(
                Event(SpacetimePoint(world.clock + 1, after[agent]), "move", {"agent": agent, "from": before[agent]})
            )
    world = replace(world, clock=world.clock + 1, positions=after, event_log=tuple(log))
    ids = sorted(world.agents)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if after[a] == after[b] and before[a] != before[b]:
                world, _ = meet(world, a, b)
    return world


def _program_against(fact: Observation) -> BoxProgram:
    # The box-table answer for each local input, given the remote (input, colour).
    return BoxProgram(*epr_prediction(fact.input, fact.colour))


def compatible(bA: Branch, bB: Branch) -> bool:
    """Whether two branches of different agents may interact.

    Holds iff the union of what they know is consistent and obeys the box
    table on every pair whose two halves are determined, by a press or by
    a program. Vacuously true when nothing is shared.
    """
    if bA.agent == bB.agent:
        raise WorldError("compatibility is only defined between different agents")
    merged = bA.facts()
    for key, obs in bB.facts().items():
        if merged.setdefault(key, obs) != obs:
            return False
    for br in (bA, bB):
        if br.side is None:
            continue
        for box, prog in br.box_programs.items():
            own = merged.get((box, br.side))
            if own is not None and prog(own.input) != own.colour:
                return False
            remote = merged.get((box, other_side(br.side)))
            if remote is not None and prog != _program_against(remote):
                return False
    for (box, side), obs in merged.items():
        if side != "A":
            continue
        remote = merged.get((box, "B"))
        if remote is not None and not pr_constraint(obs.input, remote.input, obs.colour, remote.colour):
            return False
    return True


def _lazy_split(branches: Tuple[Branch, ...], spec: AgentSpec, visitors: Sequence[Branch]) -> Tuple[Branch, ...]:
    """Split branches whose box halves are undetermined but known remotely."""
    if spec.side is None or not spec.boxes:
        return branches
    remote_side = other_side(spec.side)
    remote_inputs: Dict[int, set] = {}
    for v in visitors:
        for (box, side), obs in v.facts().items():
            if side == remote_side and box in spec.boxes:
                remote_inputs.setdefault(box, set()).add(obs.input)
    if not remote_inputs:
        return branches
    out: List[Branch] = []
    for br in branches:
        pending = [
            b for b in sorted(remote_inputs)
            if b not in br.observations and b not in br.box_programs
        ]
        copies = [br]
        for box in pending:
            inputs = remote_inputs[box]
            if len(inputs) != 1:
                raise WorldError(f"box {box}: visitors disagree on the remote input")
            (x,) = inputs
            nxt = []
            for c in copies:
                for colour in (Colour.GREEN, Colour.RED):
                    prog = _program_against(Observation(x, colour))
                    nxt.append(
                        replace(
                            c,
                            box_programs={**c.box_programs, box: prog},
                            lineage=c.lineage + (("program", box, str(prog.on_input_0), str(prog.on_input_1)),),
                        )
                    )
            copies = nxt
        out.extend(copies)
    return tuple(out)


def _absorb(br: Branch, partner: Branch) -> Branch:
    knowledge = dict(br.knowledge)
    for (box, side), obs in partner.facts().items():
        if side != br.side:
            knowledge[(box, side)] = obs
    return replace(br, knowledge=knowledge)


def _joint_view(bA: Branch, bB: Branch) -> Tuple[JointEntry, ...]:
    merged = {**bA.facts(), **bB.facts()}
    out = []
    for (box, side), obs in sorted(merged.items()):
        if side == "A" and (box, "B") in merged:
            rem = merged[(box, "B")]
            out.append(JointEntry(box, obs.input, obs.colour, rem.input, rem.colour))
    return tuple(out)


def meet(
    world: World,
    agent_a: str,
    agent_b: str,
    participants: Optional[Mapping[str, Iterable[str]]] = None,
) -> Tuple[World, List[InteractionRecord]]:
    """Bring two co-located agents together.

    ``participants`` optionally restricts, per agent, which branches (by
    lineage id) take part; the rest neither interact nor trigger splits.
    Each branch that ends up compatible with several branches of the other
    agent is copied once per partner.
    """
    spec_a = _require_agent(world, agent_a)
    spec_b = _require_agent(world, agent_b)
    if agent_a == agent_b:
        raise WorldError("an agent cannot meet itself")
    if world.positions[agent_a] != world.positions[agent_b]:
        raise NotCoLocatedError(
            f"{agent_a!r} at {world.positions[agent_a]} and {agent_b!r} at {world.positions[agent_b]} do not share a cell"
        )
    participants = {k: set(v) for k, v in (participants or {}).items()}

    def split_active(agent):
        allowed = participants.get(agent)
        act, idle = [], []
        for br in world.branches[agent]:
            (act if allowed is None or br.lineage_id in allowed else idle).append(br)
        return act, idle

    act_a, idle_a = split_active(agent_a)
    act_b, idle_b = split_active(agent_b)
    new_b = _lazy_split(tuple(act_b), spec_b, act_a)
    new_a = _lazy_split(tuple(act_a), spec_a, new_b)

    edges = [(i, j) for i, ba in enumerate(new_a) for j, bb in enumerate(new_b) if compatible(ba, bb)]
    deg_a = [0] * len(new_a)
    deg_b = [0] * len(new_b)
    for i, j in edges:
        deg_a[i] += 1
        deg_b[j] += 1

    def interacted(br, partner, degree):
        out = _absorb(br, partner)
        if degree > 1:
            out = replace(out, lineage=out.lineage + (("touch", partner.agent, partner.lineage_id),))
        return out

    res_a: Dict[int, List[Branch]] = {}
    res_b: Dict[int, List[Branch]] = {}
    pairs = []
    for i, j in edges:
        ca = interacted(new_a[i], new_b[j], deg_a[i])
        cb = interacted(new_b[j], new_a[i], deg_b[j])
        res_a.setdefault(i, []).append(ca)
        res_b.setdefault(j, []).append(cb)
        pairs.append((ca, cb, _joint_view(new_a[i], new_b[j])))

    def rebuild(new, res, idle):
        out = []
        for i, br in enumerate(new):
            out.extend(res.get(i, [br]))
        return tuple(out) + tuple(idle)

    point = world.point_of(agent_a)
    records = [
        InteractionRecord(world.trial, point, agent_a, agent_b, ca.lineage_id, cb.lineage_id, joint)
        for ca, cb, joint in pairs
    ]
    for r in records:
        if not r.satisfied():
            raise AssertionError(f"interaction violates the box table: {r}")
    payload = {
        "a": agent_a,
        "b": agent_b,
        "records": len(records),
        "branches_a": len(new_a) + len(idle_a),
        "branches_b": len(new_b) + len(idle_b),
    }
    world = replace(
        world,
        branches={
            **world.branches,
            agent_a: rebuild(new_a, res_a, idle_a),
            agent_b: rebuild(new_b, res_b, idle_b),
        },
        event_log=world._log(agent_a, "meet", payload),
        interactions=world.interactions + tuple(records),
    )
    return world, records


def counterfactual_report(
    world_builder: Callable[[], World], agent: str, input: int, box_id: Optional[int] = None
) -> frozenset:
    """Colours seen across ``agent``'s branches after pressing ``input``."""
    world = world_builder()
    spec = _require_agent(world, agent)
    if box_id is None:
        used = {b for br in world.branches[agent] for b in br.observations}
        free = [b for b in spec.boxes if b not in used]
        if not free:
            raise WorldError(f"{agent!r} has no unused box")
        box_id = free[0]
    world = press(world, agent, box_id, input)
    return frozenset(br.observations[box_id].colour for br in world.branches[agent])
