import numpy as np
import pytest

from dosalloc.channel import ChannelModel
from dosalloc.errors import InsufficientEnergy, InvalidModel, LadderTooShort, TooLarge
from dosalloc.mdp import (ActionSet, MdpProblem, MdpState, backward_induction,
                          brute_force_policy, check_superadditivity, decision_tree,
                          evaluate_policy, stage_reward, tradeoff_induction, transition,
                          verify_monotone)
from dosalloc.schedule import ArrivalProfile, expected_average, expected_terminal

TABLE = ActionSet([0, 5, 10, 15], [0.1, 0.3, 0.7, 0.9])


@pytest.fixture(scope="module")
def budget_policy(ladder):
    return backward_induction(MdpProblem(5, TABLE, ladder, 60, "average"))


@pytest.fixture(scope="module")
def tradeoff_policy(ladder):
    return tradeoff_induction(MdpProblem(5, TABLE, ladder, None, "average", 0.35))


def test_budget_value(budget_policy):
    assert budget_policy.normalized_value == pytest.approx(8.0256, abs=1e-3)
    assert budget_policy.value == pytest.approx(5 * budget_policy.normalized_value)


def test_tradeoff_value(tradeoff_policy):
    assert tradeoff_policy.normalized_value == pytest.approx(5.3325, abs=1e-3)
    assert verify_monotone(tradeoff_policy)


def test_pruned_equals_unpruned(tradeoff_policy):
    full = tradeoff_induction(tradeoff_policy.problem, prune=False)
    assert full.value == pytest.approx(tradeoff_policy.value, abs=1e-12)


def test_bellman_consistency(budget_policy):
    p = budget_policy.problem
    for (k, s), a in budget_policy.decision.items():
        q = stage_reward(p, k, s, a)
        if k < p.T:
            q += sum(pr * budget_policy.value_table[(k + 1, s2)] for s2, pr in transition(p, s, a))
        assert q == pytest.approx(budget_policy.value_table[(k, s)], abs=1e-10)


def test_forward_evaluation_matches_value(budget_policy, tradeoff_policy):
    for pol in (budget_policy, tradeoff_policy):
        assert evaluate_policy(pol.problem, pol.decision) == pytest.approx(pol.value, abs=1e-10)


def test_only_zero_action_gives_no_attack_value(ladder):
    alpha = 0.1
    p = MdpProblem(6, ActionSet([0], [alpha]), ladder, 0, "average")
    pol = backward_induction(p)
    prof = ArrivalProfile(np.full(6, 1 - alpha))
    assert pol.normalized_value == pytest.approx(expected_average(ladder, prof), rel=1e-12)
    pt = MdpProblem(6, ActionSet([0], [alpha]), ladder, 0, "terminal")
    assert backward_induction(pt).value == pytest.approx(expected_terminal(ladder, prof), rel=1e-12)


def test_budget_larger_than_needed_equals_tradeoff_without_cost(ladder):
    rich = backward_induction(MdpProblem(4, TABLE, ladder, 60, "terminal"))
    free = tradeoff_induction(MdpProblem(4, TABLE, ladder, None, "terminal", 0.0))
    assert rich.value == pytest.approx(free.value, rel=1e-12)


def test_ties_pick_smallest_action(ladder):
    flat = ActionSet([0, 1, 2], [0.4, 0.4, 0.4])
    pol = backward_induction(MdpProblem(3, flat, ladder, 6, "average"))
    assert set(pol.decision.values()) == {0.0}


def small_instances(ladder):
    dropouts = [(0.1, 0.5, 0.8), (0.0, 0.6, 0.95), (0.2, 0.2, 0.9)]
    for T in (1, 2, 3):
        for levels in ([0, 1], [0, 1, 2], [0, 2, 3]):
            for drop in dropouts:
                acts = ActionSet(levels, drop[:len(levels)])
                for index in ("terminal", "average"):
                    for budget in (0, 2, 3, 5):
                        yield MdpProblem(T, acts, ladder, budget, index)
                    for omega in (0.0, 0.3, 2.0):
                        yield MdpProblem(T, acts, ladder, None, index, omega)


def test_policy_oracle(ladder):
    n = 0
    for p in small_instances(ladder):
        val, _ = brute_force_policy(p)
        pol = tradeoff_induction(p) if p.tradeoff else backward_induction(p)
        assert pol.value == pytest.approx(val, rel=1e-12, abs=1e-12), p
        n += 1
    assert n > 100


def test_brute_force_guard(ladder):
    p = MdpProblem(5, TABLE, ladder, 60, "average")
    with pytest.raises(TooLarge):
        brute_force_policy(p, limit=1000)


def test_superadditivity_holds(tradeoff_policy):
    for k in range(1, 6):
        rep = check_superadditivity(tradeoff_policy.problem, k)
        assert rep.passed, rep.as_dict()


def test_superadditivity_negative_control(ladder):
    bad = ActionSet([0, 5, 10, 15], [0.1, 0.7, 0.3, 0.9])
    rep = check_superadditivity(MdpProblem(5, bad, ladder, None, "average", 0.35), 3)
    assert not rep["tail-superadditive"].passed
    assert not rep.passed


def test_energy_never_overspent(budget_policy):
    tree = decision_tree(budget_policy)
    assert tree["root"] == "k1-r0-e600000"
    assert tree["stages"][0]["nodes"][0]["state"] == {"rung": 0, "energy": 60.0}
    for stage in tree["stages"]:
        for node in stage["nodes"]:
            assert node["state"]["energy"] >= 0
            if "next" in node:
                assert sum(s["prob"] for s in node["next"]) == pytest.approx(1.0)


def test_tree_links_resolve(tradeoff_policy):
    tree = decision_tree(tradeoff_policy)
    ids = {n["id"] for st in tree["stages"] for n in st["nodes"]}
    for st in tree["stages"]:
        for n in st.get("nodes"):
            for s in n.get("next", []):
                assert s["to"] in ids


def test_transition_and_errors(ladder):
    p = MdpProblem(5, TABLE, ladder, 60, "average")
    succ = transition(p, MdpState(2, 100000), 5)
    assert succ == [(MdpState(3, 50000), 0.3), (MdpState(0, 50000), 0.7)]
    with pytest.raises(InsufficientEnergy):
        transition(p, MdpState(0, 40000), 5)
    with pytest.raises(InvalidModel):
        ActionSet([1, 2], [0.1, 0.2])
    with pytest.raises(InvalidModel):
        ActionSet([0, 0.00001], [0.1, 0.2])
    with pytest.raises(LadderTooShort):
        MdpProblem(31, TABLE, ladder, 60)
    with pytest.raises(InvalidModel):
        MdpProblem(5, TABLE, ladder, None)


def test_from_channel():
    ch = ChannelModel(2, sigma2=0.5, L=20)
    acts = ActionSet.from_channel([0, 2, 2.25], ch)
    assert acts.units == (0, 20000, 22500)
    assert acts.dropout[0] < acts.dropout[1] < acts.dropout[2]
