import json

import numpy as np
import pytest

from _gen import random_coupling, random_stochastic, theorem2_suite
from conftest import G2, f
from delaysync.conditions import (check_proposition, check_stationary_corollary, check_theorem1, check_theorem2,
                                  check_theorem3, estimate_wolfowitz_N, search_parameters, structural_classes)
from delaysync.errors import PreconditionError
from delaysync.graphs import is_sia
from delaysync.lifting import DelayedCoupling
from delaysync.matrix import scramblingness
from delaysync.process import IID, Deterministic, Markov, TopologyProcess, process_to_json
from delaysync.simulate import classify, random_history, run

THIRD = 1 / 3
HALF = np.full((2, 2), 0.5)
EX1 = {"s1": DelayedCoupling([np.eye(2), np.zeros((2, 2))]),
       "s2": DelayedCoupling([[[0.5, 0], [0, 1]], [[0, 0.5], [0, 0]]])}
EX2 = DelayedCoupling([np.zeros((2, 2)), [[THIRD, 0], [0, 1]], [[0, THIRD], [0, 0]], [[0, THIRD], [0, 0]]])


def single(g):
    dc = g if isinstance(g, DelayedCoupling) else DelayedCoupling(np.asarray(g, dtype=float))
    return TopologyProcess(Deterministic(("a",)), {"a": dc})


def iid(couplings):
    k = len(couplings)
    return TopologyProcess(IID(tuple(couplings), np.full(k, 1 / k)), couplings)


def delayed_average():
    return single(DelayedCoupling([np.zeros((2, 2)), HALF]))


class TestTheorem1:
    def test_g2(self):
        rep = check_theorem1(single(f(G2)), 1, 0.25)
        assert rep.satisfied and rep.failures == []
        assert rep.witnesses["0:a"] == {"roots": [1], "period": 1}

    def test_identity(self):
        rep = check_theorem1(single(np.eye(2)), 2, 0.1)
        assert not rep.satisfied and rep.failures[0].startswith("spanning_tree")

    def test_swap_is_periodic(self):
        rep = check_theorem1(single([[0, 1], [1, 0]]), 1, 0.5)
        assert not rep.satisfied and rep.failures[0].startswith("aperiodicity")

    def test_swap_two_steps_is_not_rooted(self):
        assert not check_theorem1(single([[0, 1], [1, 0]]), 2, 0.5).satisfied

    def test_rejects_delays(self):
        with pytest.raises(PreconditionError):
            check_theorem1(delayed_average(), 1, 0.25)

    def test_iid_product(self):
        p = TopologyProcess(IID(("a", "b"), np.array([0.5, 0.5])),
                            {"a": DelayedCoupling(np.eye(2)), "b": DelayedCoupling(f(G2))})
        assert check_theorem1(p, 2, 0.1).satisfied


class TestTheorem2:
    def test_example_one_iid(self):
        rep = check_theorem2(iid(EX1), 2, 0.2, 0.4)
        assert rep.satisfied
        assert rep.witnesses["roots"] == {"s1": [1], "s2": [1]}
        assert json.loads(json.dumps(rep.to_json()))["theorem"] == "T2"

    def test_missing_self_links(self):
        rep = check_theorem2(single(DelayedCoupling([np.zeros((2, 2)), HALF])), 1, 0.2, 0.4)
        assert any(x.startswith("self_links") for x in rep.failures)

    def test_no_cross_links(self):
        p = iid({"a": DelayedCoupling(np.eye(2)), "b": DelayedCoupling([np.eye(2) * 0.6, np.eye(2) * 0.4])})
        rep = check_theorem2(p, 4, 0.01, 0.4)
        assert rep.failures == ["spanning_tree: no root at a", "spanning_tree: no root at b"]

    def test_markov_conditions_on_current_state(self):
        # from "a" the chain moves to "b" next; a window of one step only sees "b"
        cs = {"a": DelayedCoupling(np.eye(2)), "b": DelayedCoupling(f(G2))}
        t = np.array([[0, 1], [1, 0.0]])
        p = TopologyProcess(Markov(("a", "b"), t, np.array([1.0, 0])), cs)
        rep = check_theorem2(p, 1, 0.2, 0.4)
        assert rep.failures == ["spanning_tree: no root at b"]
        assert check_theorem2(p, 2, 0.2, 0.4).satisfied

    def test_mu_positive(self):
        with pytest.raises(PreconditionError):
            check_theorem2(iid(EX1), 2, 0.2, 0)


class TestTheorem3:
    def test_delayed_average(self):
        rep = check_theorem3(delayed_average(), 1, 1, 0.25, 0.4)
        assert rep.satisfied and rep.parameters["P"] == 2
        assert rep.witnesses["blocks"] == [["v_{1,1}", "v_{1,2}"], ["v_{2,1}", "v_{2,2}"]]

    def test_example_two(self):
        rep = check_theorem3(single(EX2), 1, 1, 0.1, 0.3)
        assert not rep.satisfied
        assert [x.split(":")[0] for x in rep.failures] == ["strong_connectivity"]
        assert rep.parameters["P"] == 1

    def test_instantaneous_variant(self):
        rep = check_theorem3(single(DelayedCoupling(HALF)), 0, 1, 0.25, 0.4)
        assert rep.satisfied and rep.parameters["P"] == 1

    def test_b1(self):
        rep = check_theorem3(single(EX2), 1, 1, 0.1, 0.5)
        assert any(x.startswith("B.1") for x in rep.failures)

    def test_b2_delta_nonzero(self):
        # delay 2 is active (class 1) but its weight is below delta
        g = np.zeros((3, 2, 2))
        g[1] = [[0.45, 0.5], [0.5, 0.45]]
        g[2] = np.eye(2) * 0.05
        p = single(DelayedCoupling(g))
        rep = check_theorem3(p, 1, 1, 0.1, 0.4)
        assert [x.split(":")[0] for x in rep.failures] == ["B.2.delta_nonzero"]
        rep = check_theorem3(p, 1, 1, 0.05, 0.4)
        assert rep.satisfied and rep.parameters["P"] == 1


class TestPropositions:
    def test_p1_example_one(self):
        p = TopologyProcess(Deterministic(("s1", "s2")), EX1)
        rep = check_proposition(p, "P1", 2, 0.2)
        assert rep.satisfied
        assert rep.witnesses["0:s1"]["self_linked_roots"] == [1]

    def test_p1_permutation(self):
        rep = check_proposition(single([[0, 1], [1, 0]]), "P1", 1, 0.5)
        assert rep.failures == ["root_self_link: no self-linked root at 0:a"]

    def test_p2_delayed_average(self):
        rep = check_proposition(delayed_average(), "P2", 1, 0.25)
        assert rep.satisfied and rep.parameters["P"] == 2 and rep.parameters["tau0"] == 1
        assert len(rep.witnesses["0:a"]) == 2

    def test_p2_example_two_fails(self):
        rep = check_proposition(single(EX2), "P2", 2, 0.05, tau0=1)
        assert not rep.satisfied

    def test_structural_classes(self):
        assert structural_classes(delayed_average()).period == 2
        assert structural_classes(single(EX2)).period == 1

    def test_unknown(self):
        with pytest.raises(PreconditionError):
            check_proposition(delayed_average(), "P3", 1, 0.1)


class TestCorollaries:
    def markov(self):
        cs = {"a": DelayedCoupling(np.eye(2)), "b": DelayedCoupling(f(G2))}
        t = np.array([[0.5, 0.5], [0.3, 0.7]])
        return TopologyProcess(Markov(("a", "b"), t, np.array([1.0, 0])), cs)

    def test_c1(self):
        assert check_stationary_corollary(self.markov(), "C1", 0.2, 0.4).satisfied
        assert not check_stationary_corollary(self.markov(), "C1", 0.5, 0.4).satisfied

    def test_c2(self):
        cs = {"a": DelayedCoupling([np.zeros((2, 2)), HALF]),
              "b": DelayedCoupling([np.zeros((2, 2)), np.eye(2)])}
        p = TopologyProcess(IID(("a", "b"), np.array([0.5, 0.5])), cs)
        rep = check_stationary_corollary(p, "C2", 0.2, 0.4, tau0=1)
        assert rep.satisfied and rep.parameters["P"] == 2
        with pytest.raises(PreconditionError):
            check_stationary_corollary(p, "C2", 0.2, 0.4)

    def test_periodic_chain_rejected(self):
        cs = {"a": DelayedCoupling(np.eye(2)), "b": DelayedCoupling(f(G2))}
        p = TopologyProcess(Markov(("a", "b"), np.array([[0, 1], [1, 0.0]]), np.array([1.0, 0])), cs)
        with pytest.raises(PreconditionError):
            check_stationary_corollary(p, "C1", 0.2, 0.4)


class TestWolfowitz:
    def test_g2(self):
        assert estimate_wolfowitz_N([f(G2)]) == 1
        assert estimate_wolfowitz_N([f(G2)], mode="sampled", seed=0) == 1

    def test_identity(self):
        with pytest.raises(PreconditionError, match="matrix 0"):
            estimate_wolfowitz_N([np.eye(2)])

    def test_needs_several_steps(self):
        # a directed path 3 -> 2 -> 1 with self-links scrambles only after two steps
        a = np.array([[0.5, 0.5, 0], [0, 0.5, 0.5], [0, 0, 1]])
        assert scramblingness(a) == 0
        assert estimate_wolfowitz_N([a]) == 2

    def test_random_pairs_certified(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            mats = []
            while len(mats) < 2:
                a = random_stochastic(rng, 3, 0.4)
                if is_sia(a):
                    mats.append(a)
            n = estimate_wolfowitz_N(mats, mode="exhaustive")
            assert n is not None and n <= 64
            assert estimate_wolfowitz_N(mats, mode="sampled", seed=1, count=500) <= n
            for w in rng.integers(0, 2, size=(300, n)):
                prod = np.eye(3)
                for i in w:
                    prod = mats[i] @ prod
                assert scramblingness(prod) > 0


def test_search_parameters():
    L, delta, rep = search_parameters(check_theorem1, single(f(G2)))
    assert (L, delta) == (1, 0.5) and rep.satisfied
    assert search_parameters(check_theorem1, single(np.eye(2)), L_max=2, k_max=3) is None


@pytest.mark.parametrize("seed", range(4))
def test_monotone_in_delta(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        cs = {s: random_coupling(rng, 3, 2, density=0.5, self_min=0.4) for s in "ab"}
        p = TopologyProcess(IID(("a", "b"), np.array([0.5, 0.5])), cs)
        for delta in (0.3, 0.1, 0.05):
            if check_theorem2(p, 2, delta, 0.3).satisfied:
                for smaller in (delta / 2, delta / 7):
                    assert check_theorem2(p, 2, smaller, 0.3).satisfied


def test_theorem2_soundness(tmp_path):
    """Certified systems should reach consensus; any miss is written out as a reproducer."""
    systems = theorem2_suite(seed=21, count=20)
    runs = consensus = 0
    for k, p in enumerate(systems):
        seed = 100 + k
        v = classify(run(p, random_history(p.m, p.tau_max, seed, -1, 1), 2000, seed=seed))
        runs += 1
        consensus += v.kind == "consensus"
        if v.kind != "consensus":
            (tmp_path / f"reproducer_{k}.json").write_text(json.dumps({
                "system": {s: c.to_json() for s, c in p.couplings.items()},
                "process": process_to_json(p), "seed": seed, "verdict": v.to_json()}))
    assert consensus / runs >= 0.95, sorted(x.name for x in tmp_path.iterdir())


def test_theorem3_soundness():
    rng = np.random.default_rng(31)
    found = 0
    while found < 8:
        tau0 = int(rng.integers(0, 3))
        cs = {s: random_coupling(rng, 3, tau0 + 1, density=0.8, self_min=0.5, delays=[tau0], self_delay=tau0)
              for s in "ab"}
        p = TopologyProcess(IID(("a", "b"), np.array([0.5, 0.5])), cs)
        rep = check_theorem3(p, tau0, 2, 0.05, 0.4)
        if not rep.satisfied:
            continue
        found += 1
        P = rep.parameters["P"]
        assert P == tau0 + 1
        v = classify(run(p, random_history(3, p.tau_max, found, -5, 5), 2000, seed=found))
        if P == 1:
            assert v.kind == "consensus"
        else:
            assert v.kind in ("consensus", "periodic_sync") and P % v.period == 0
