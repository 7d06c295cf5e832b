import itertools
from dataclasses import replace
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from prlives.boxes import Colour, pr_constraint
from prlives.lhv import epr_prediction
from prlives.world import (
    AgentSpec,
    BoxProgram,
    Branch,
    DoublePressError,
    Event,
    LightSpeedError,
    NotCoLocatedError,
    Observation,
    SpacetimePoint,
    WorldError,
    advance,
    compatible,
    counterfactual_report,
    meet,
    new_world,
    press,
)

G, R = Colour.GREEN, Colour.RED


def pair_world(boxes=(0,), da=-1, db=1, seed=0):
    return new_world([AgentSpec("alice", da, tuple(boxes), "A"), AgentSpec("bob", db, tuple(boxes), "B")], seed=seed)


def by_colour(world, agent, box=0):
    return {br.colour(box): br for br in world.branches[agent]}


# ---------------------------------------------------------------- construction

def test_new_world_initial_state():
    w = pair_world()
    assert w.clock == 0
    assert {a: len(b) for a, b in w.branches.items()} == {"alice": 1, "bob": 1}
    assert all(not br.observations and not br.lineage for bs in w.branches.values() for br in bs)
    w = pair_world(boxes=(0, 1, 2, 3))
    assert {a: len(b) for a, b in w.branches.items()} == {"alice": 1, "bob": 1}


@pytest.mark.parametrize(
    "agents",
    [
        # box 3 claimed by both agents on the same side
        [AgentSpec("alice", 0, (3,), "A"), AgentSpec("bob", 5, (3,), "A")],
        [AgentSpec("alice", 0, (3, 3), "A"), AgentSpec("bob", 5, (3,), "B")],
        # box with no partner half
        [AgentSpec("alice", 0, (1, 2), "A"), AgentSpec("bob", 5, (1,), "B")],
        [AgentSpec("alice", 0, (1,), "A"), AgentSpec("carol", 2, (1,))],
        [AgentSpec("alice", 0, (), "A"), AgentSpec("alice", 1, (), "B")],
        [AgentSpec("alice", 0, (), "C")],
    ],
)
def test_new_world_rejects_malformed_configs(agents):
    with pytest.raises(WorldError):
        new_world(agents)


# ---------------------------------------------------------------- press

def test_unsplit_press_splits_in_two():
    w = press(pair_world(), "alice", 0, 1)
    obs = sorted((br.observations[0].input, str(br.colour(0))) for br in w.branches["alice"])
    assert obs == [(1, "green"), (1, "red")]
    assert len(w.branches["bob"]) == 1 and not w.branches["bob"][0].observations


def test_programmed_press_does_not_split():
    bob = Branch("bob", "B", box_programs={0: BoxProgram(G, R)})
    w = pair_world()
    w = replace(w, branches={**w.branches, "bob": (bob,)})
    w = press(w, "bob", 0, 1)
    (br,) = w.branches["bob"]
    assert br.observations == {0: Observation(1, R)}
    assert not br.box_programs


def test_double_press_is_rejected():
    w = press(pair_world(), "alice", 0, 0)
    with pytest.raises(DoublePressError):
        press(w, "alice", 0, 1)


def test_press_requires_owned_box_and_bit():
    with pytest.raises(WorldError):
        press(pair_world(), "alice", 7, 0)
    with pytest.raises(ValueError):
        press(pair_world(), "alice", 0, 2)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_branch_count_law_exhaustive(k):
    # oracle: the set of colour histories is the full product {G, R}^k
    for inputs in itertools.product((0, 1), repeat=k):
        w = pair_world(boxes=tuple(range(k)))
        for box, x in enumerate(inputs):
            w = press(w, "alice", box, x)
        histories = [tuple(br.colour(b) for b in range(k)) for br in w.branches["alice"]]
        assert len(histories) == 2**k
        assert Counter(histories) == Counter(itertools.product((G, R), repeat=k))
        assert len({br.lineage_id for br in w.branches["alice"]}) == 2**k
        assert len(w.branches["bob"]) == 1


def test_third_press_gives_eight():
    w = pair_world(boxes=(0, 1, 2))
    w = press(press(w, "alice", 0, 0), "alice", 1, 1)
    assert len(w.branches["alice"]) == 4
    assert len(press(w, "alice", 2, 0).branches["alice"]) == 8


# ---------------------------------------------------------------- advance

def test_advance_stationary_only_ticks():
    w = advance(pair_world())
    assert w.clock == 1 and dict(w.positions) == {"alice": -1, "bob": 1}
    assert not w.interactions


def test_inward_moves_meet_in_the_middle():
    w = pair_world(da=0, db=2)
    w = advance(w, {"alice": 1, "bob": -1})
    assert w.positions["alice"] == w.positions["bob"] == 1
    assert [e.kind for e in w.event_log][-1] == "meet"


@pytest.mark.parametrize("d", [2, -2, 5])
def test_faster_than_light_move_is_rejected(d):
    with pytest.raises(LightSpeedError):
        advance(pair_world(), {"alice": d})


def test_meeting_requires_shared_cell():
    with pytest.raises(NotCoLocatedError):
        meet(pair_world(), "alice", "bob")


# ---------------------------------------------------------------- compatibility

def branch(agent, side, **obs):
    return Branch(agent, side, observations={int(k[1:]): Observation(*v) for k, v in obs.items()})


def test_compatibility_examples():
    alice = branch("alice", "A", b0=(1, G))
    assert not compatible(alice, branch("bob", "B", b0=(1, G)))
    assert compatible(alice, branch("bob", "B", b0=(0, G)))
    assert compatible(alice, branch("bob", "B", b0=(1, R)))
    assert compatible(alice, Branch("bob", "B"))


def test_compatibility_needs_distinct_agents():
    with pytest.raises(WorldError):
        compatible(Branch("alice", "A"), Branch("alice", "A"))


@pytest.mark.parametrize("inputs", list(itertools.product((0, 1), repeat=4)))
def test_two_pair_compatibility_is_a_conjunction(inputs):
    x0, x1, y0, y1 = inputs
    checked = 0
    for a0, a1, b0, b1 in itertools.product(list(Colour), repeat=4):
        ba = branch("alice", "A", b0=(x0, a0), b1=(x1, a1))
        bb = branch("bob", "B", b0=(y0, b0), b1=(y1, b1))
        oracle = pr_constraint(x0, y0, a0, b0) and pr_constraint(x1, y1, a1, b1)
        assert compatible(ba, bb) is oracle
        assert compatible(bb, ba) is oracle
        checked += 1
    assert checked == 16


def test_program_must_match_remote_fact():
    alice = branch("alice", "A", b0=(1, G))
    good = Branch("bob", "B", box_programs={0: BoxProgram(*epr_prediction(1, G))})
    bad = Branch("bob", "B", box_programs={0: BoxProgram(*epr_prediction(1, R))})
    assert compatible(alice, good)
    assert not compatible(alice, bad)


# ---------------------------------------------------------------- meetings

def both_pressed(x, y):
    w = press(press(pair_world(), "alice", 0, x), "bob", 0, y)
    return advance(w, {"alice": 1, "bob": -1})


def joint_colours(world):
    return sorted((str(r.joint[0].a), str(r.joint[0].b)) for r in world.interactions)


def test_meeting_after_inputs_1_0_pairs_identical_colours():
    assert joint_colours(both_pressed(1, 0)) == [("green", "green"), ("red", "red")]


def test_meeting_after_inputs_1_1_pairs_different_colours():
    assert joint_colours(both_pressed(1, 1)) == [("green", "red"), ("red", "green")]


@pytest.mark.parametrize("x, y", list(itertools.product((0, 1), repeat=2)))
def test_every_record_obeys_the_table(x, y):
    w = both_pressed(x, y)
    assert len(w.interactions) == 2
    assert all(r.satisfied() for r in w.interactions)
    ids_a = [r.branch_a for r in w.interactions]
    ids_b = [r.branch_b for r in w.interactions]
    assert len(set(ids_a)) == len(set(ids_b)) == 2


def test_travelling_green_alice_meets_unsplit_bob():
    w = pair_world(da=0, db=0)
    w = press(w, "alice", 0, 1)
    green = by_colour(w, "alice")[G]
    w, recs = meet(w, "alice", "bob", participants={"alice": [green.lineage_id]})
    bobs = w.branches["bob"]
    assert len(bobs) == 2
    programs = {br.box_programs[0] for br in bobs}
    assert programs == {BoxProgram(G, R), BoxProgram(R, G)}
    (rec,) = recs
    partner = next(br for br in bobs if br.lineage_id == rec.branch_b)
    assert partner.box_programs[0] == BoxProgram(G, R)
    other = next(br for br in bobs if br.lineage_id != rec.branch_b)
    assert not other.knowledge
    # the red Alice never took part
    red = by_colour(w, "alice")[R]
    assert not red.knowledge
    # pressing afterwards follows the program
    w = press(w, "bob", 0, 1)
    assert sorted(str(br.colour(0)) for br in w.branches["bob"]) == ["green", "red"]
    partner = next(br for br in w.branches["bob"] if br.lineage_id == rec.branch_b)
    assert partner.colour(0) is R and partner.knowledge


def test_whole_alice_visit_pairs_each_copy_with_one_bob():
    w = pair_world(da=0, db=0)
    w = press(w, "alice", 0, 0)
    w, recs = meet(w, "alice", "bob")
    assert len(recs) == 2
    w = press(w, "bob", 0, 1)
    w, recs = meet(w, "alice", "bob")
    assert len(recs) == 2
    assert all(r.satisfied() and len(r.joint) == 1 for r in recs)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_matching_is_a_bijection(n):
    for inputs in itertools.product((0, 1), repeat=2 * n):
        w = pair_world(boxes=tuple(range(n)))
        for box in range(n):
            w = press(w, "alice", box, inputs[box])
            w = press(w, "bob", box, inputs[n + box])
        alices, bobs = w.branches["alice"], w.branches["bob"]
        assert len(alices) == len(bobs) == 2**n
        for ba in alices:
            assert sum(compatible(ba, bb) for bb in bobs) == 1
        for bb in bobs:
            assert sum(compatible(ba, bb) for ba in alices) == 1
        w = advance(w, {"alice": 1, "bob": -1})
        assert len(w.interactions) == 2**n
        assert all(r.satisfied() and len(r.joint) == n for r in w.interactions)


def test_courier_carries_the_split():
    w = new_world(
        [AgentSpec("alice", 0, (0,), "A"), AgentSpec("bob", 4, (0,), "B"), AgentSpec("carol", 0)]
    )
    w = press(w, "alice", 0, 1)
    w, recs = meet(w, "alice", "carol")
    assert len(recs) == 2 and len(w.branches["carol"]) == 2
    for _ in range(4):
        w = advance(w, {"carol": 1})
    # carol reached bob: bob splits lazily, one program per carol copy
    assert len(w.branches["bob"]) == 2
    w = press(w, "bob", 0, 1)
    for _ in range(4):
        w = advance(w, {"bob": -1})
    recs = [r for r in w.interactions if {r.agent_a, r.agent_b} == {"alice", "bob"}]
    assert len(recs) == 2 and all(r.satisfied() and r.joint for r in recs)


def test_meetings_lie_in_the_future_light_cone_of_presses():
    w = both_pressed(1, 1)
    presses = [e for e in w.event_log if e.kind == "press"]
    meets = [e for e in w.event_log if e.kind == "meet"]
    assert presses[0].point.spacelike_to(presses[1].point)
    for m in meets:
        for p in presses:
            assert p.point.reaches(m.point)


def test_event_log_round_trip():
    w = both_pressed(0, 1)
    lines = w.event_lines()
    assert [Event.from_line(l) for l in lines] == list(w.event_log)
    assert all("\n" not in l for l in lines)


def test_spacetime_point_relations():
    assert SpacetimePoint(0, -1).spacelike_to(SpacetimePoint(0, 1))
    assert not SpacetimePoint(0, 0).spacelike_to(SpacetimePoint(2, 1))
    assert SpacetimePoint(0, -1).reaches(SpacetimePoint(1, 0))
    assert not SpacetimePoint(1, 0).reaches(SpacetimePoint(0, 0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["a", "b", "move"]), st.integers(0, 1)), max_size=12))
def test_random_histories_keep_records_consistent(ops):
    w = pair_world(boxes=(0, 1, 2), da=-2, db=2)
    pressed = {"alice": 0, "bob": 0}
    direction = 1
    for op, x in ops:
        if op == "move":
            w = advance(w, {"alice": direction, "bob": -direction})
            if w.positions["alice"] == w.positions["bob"]:
                direction = -direction
        else:
            agent = "alice" if op == "a" else "bob"
            if pressed[agent] < 3:
                w = press(w, agent, pressed[agent], x)
                pressed[agent] += 1
    assert all(r.satisfied() for r in w.interactions)


# ---------------------------------------------------------------- counterfactual

@pytest.mark.parametrize("x", [0, 1])
def test_fresh_press_sees_both_colours(x):
    assert counterfactual_report(pair_world, "alice", x) == {G, R}
    assert counterfactual_report(pair_world, "bob", x) == {G, R}


def test_programmed_bob_sees_one_colour():
    def builder():
        w = pair_world()
        bob = Branch("bob", "B", box_programs={0: BoxProgram(G, R)})
        return replace(w, branches={**w.branches, "bob": (bob,)})

    assert counterfactual_report(builder, "bob", 0) == {G}
