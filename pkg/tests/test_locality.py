import pytest

from prlives.locality import Scenario, locality_audit, run_scenario, standard_scenarios
from prlives.world import AgentSpec

SCENARIOS = standard_scenarios()


def test_matrix_is_large_enough():
    names = [s.name for s in SCENARIOS]
    assert len(SCENARIOS) >= 6 and len(set(names)) == len(names)
    assert any("no-press" in n for n in names)
    assert any("travel" in n for n in names)


@pytest.mark.parametrize("scenario", SCENARIOS, ids=lambda s: s.name)
@pytest.mark.parametrize("seed", [0, 1, 2**63])
def test_remote_input_invariance(scenario, seed):
    report = locality_audit(seed, scenario)
    assert report.passed, report.detail
    assert report.first_divergence is None
    assert report.ticks_compared >= 2


@pytest.mark.parametrize("scenario", SCENARIOS, ids=lambda s: s.name)
def test_post_meeting_records_do_differ(scenario):
    assert locality_audit(0, scenario).records_differ


def test_audit_detects_a_local_difference():
    # sanity check of the audit itself: change the LOCAL input
    agents = (AgentSpec("alice", -2, (0,), "A"), AgentSpec("bob", 2, (0,), "B"))
    bad = Scenario("local-change", agents, "alice", (("press", "alice", 0, 0),), (("press", "alice", 0, 1),))
    report = locality_audit(0, bad)
    assert not report.passed
    assert report.first_divergence == 0


def test_snapshots_stop_at_the_local_meeting():
    s = SCENARIOS[0]
    world, snaps = run_scenario(0, s.agents, s.local, s.steps)
    meet_tick = next(e.point.t for e in world.event_log if e.kind == "meet")
    assert max(snaps) < meet_tick
