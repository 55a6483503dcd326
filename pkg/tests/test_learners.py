import numpy as np
import pytest
from scipy import stats

from pricelab.distributions import assemble
from pricelab.forms import Constant
from pricelab.hard_instances import two_regular_25_base
from pricelab.learners import (
    EXP3,
    ArmGrid,
    ConstantPrice,
    RoundRobin,
    Strategy,
    check_disjoint,
    cube_root_arms,
    find_best,
    learner_from_config,
    make_exp3,
    make_ucb,
    pull_counts_in,
    sample_arm,
    vanilla_pricing,
)
from pricelab.market import Instance, pseudo_regret, run_episode


def _gap_instance():
    # one buyer: value 0.5 w.p. 0.7, value 1 w.p. 0.3 -> r(0.5) = 0.5, r(1) = 0.3
    d = assemble("0.5 or 1", [(0.0, 0.5, Constant(0.0)), (0.5, 1.0, Constant(0.7))])
    return Instance((d,), "gap-0.2")


def test_arm_grid():
    g = ArmGrid(4)
    np.testing.assert_allclose(g.prices, [0.25, 0.5, 0.75, 1.0])
    assert np.all(np.diff(g.prices) > 0)
    with pytest.raises(ValueError):
        ArmGrid(0)


def test_single_arm_learners():
    for learner in (make_ucb(1), make_exp3(1, eta=0.1, seed=0)):
        for _ in range(5):
            p = learner.choose()
            assert p == 1.0
            learner.update(p, True)


def test_ucb_round_robin_start():
    ucb = make_ucb(5)
    played = []
    for _ in range(5):
        p = ucb.choose()
        played.append(p)
        ucb.update(p, False)
    assert played == list(ArmGrid(5).prices)


def test_counts_match_updates():
    ucb = make_ucb(3)
    for _ in range(17):
        ucb.update(ucb.choose(), True)
    assert ucb.pull_counts().sum() == 17
    with pytest.raises(ValueError):
        ucb.update(0.123, True)


@pytest.mark.parametrize("core,limit", [("ucb", 0.10), ("exp3", 0.20)])
def test_gap_benchmark(core, limit):
    inst = _gap_instance()
    fractions = []
    for s in range(100):
        learner = make_ucb(2) if core == "ucb" else make_exp3(2, T=10_000, seed=s)
        run_episode(inst, learner, 10_000, seed=10_000 + s)
        fractions.append(learner.counts[1] / 10_000)
    assert np.mean(fractions) < limit


def test_exp3_weights_stay_a_distribution():
    learner = make_exp3(6, T=2000, seed=1)
    rng = np.random.default_rng(2)
    for _ in range(2000):
        p = learner.choose()
        learner.update(p, rng.random() < 0.5)
        assert learner.probabilities().sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        EXP3(ArmGrid(3), eta=0.0)
    with pytest.raises(ValueError):
        make_exp3(3)


def test_vanilla_arm_counts():
    assert cube_root_arms(1000) == 10
    assert cube_root_arms(1001) == 11
    assert cube_root_arms(8) == 2
    v = vanilla_pricing(1000)
    np.testing.assert_allclose(v.prices, np.arange(1, 11) / 10)
    assert vanilla_pricing(8, "ucb").K == 2
    with pytest.raises(ValueError):
        vanilla_pricing(7)
    with pytest.raises(ValueError):
        vanilla_pricing(1000, core="osmd")


def test_vanilla_regret_band():
    base = two_regular_25_base()
    T = 2**16
    regrets = []
    for s in range(20):
        learner = vanilla_pricing(T, seed=s)
        regrets.append(pseudo_regret(run_episode(base, learner, T, seed=500 + s), base).pseudo_regret)
    assert 0.1 * T ** (2 / 3) <= np.mean(regrets) <= 10 * T ** (2 / 3)


@pytest.mark.slow
def test_vanilla_discretisation_tradeoff():
    """K = T^(1/3) is within 1.5x of the better of K = T^(1/6) and K = T^(1/2)."""
    base = two_regular_25_base()
    T = 2**18
    mean = {}
    for K in (int(np.ceil(T ** (1 / 6))), cube_root_arms(T), int(np.ceil(T ** (1 / 2)))):
        regs = []
        for s in range(4):
            learner = vanilla_pricing(T, seed=s, K=K)
            regs.append(pseudo_regret(run_episode(base, learner, T, seed=900 + s), base).pseudo_regret)
        mean[K] = np.mean(regs)
    small, mid, large = sorted(mean)
    assert mean[mid] <= 1.5 * min(mean[small], mean[large]), mean


def test_find_best_single_arm():
    res = find_best(ArmGrid(1), 50, make_ucb(1), two_regular_25_base(), np.random.default_rng(0))
    assert res.arm == 0 and res.price == 1.0
    assert res.counts.tolist() == [50]


def test_find_best_two_arms():
    # revenues 0.45 at price 0.5 and 0.25 at price 1
    d = assemble("three-point", [(0.0, 0.5, Constant(0.1)), (0.5, 1.0, Constant(0.75))])
    inst = Instance((d,), "two-arm")
    np.testing.assert_allclose(inst.revenue(ArmGrid(2).prices), [0.45, 0.25])
    rng = np.random.default_rng(1)
    wins = sum(find_best(ArmGrid(2), 2000, make_ucb(2), inst, rng).arm == 0 for _ in range(500))
    assert wins / 500 >= 0.9


def test_find_best_rejects_foreign_core():
    with pytest.raises(ValueError):
        find_best(ArmGrid(3), 10, make_ucb(4), two_regular_25_base(), np.random.default_rng(0))


def test_sample_arm_law():
    counts = np.array([100, 300, 600])
    rng = np.random.default_rng(4)
    draws = np.bincount([sample_arm(counts, rng) for _ in range(10_000)], minlength=3)
    assert stats.chisquare(draws, 10_000 * counts / counts.sum()).pvalue > 0.01


def test_pull_counts_in():
    ivs = [(0.1, 0.2), (0.2, 0.3)]
    assert pull_counts_in(np.full(7, 0.15), ivs).tolist() == [7, 0]
    assert pull_counts_in(np.array([]), ivs).tolist() == [0, 0]
    assert pull_counts_in(np.array([0.2]), ivs).tolist() == [0, 1]
    with pytest.raises(ValueError):
        pull_counts_in(np.array([0.1]), [(0.1, 0.3), (0.2, 0.4)])
    with pytest.raises(ValueError):
        check_disjoint([(0.5, 0.4)])


def test_pull_counts_uniform_prices():
    rng = np.random.default_rng(8)
    T = 100_000
    ivs = [(0.05 + 0.09 * i, 0.09 + 0.09 * i) for i in range(10)]
    counts = pull_counts_in(rng.random(T), ivs)
    sigma = np.sqrt(T * 0.04 * 0.96)
    assert np.all(np.abs(counts - 0.04 * T) < 3 * sigma)


def test_configs_and_strategies():
    assert isinstance(learner_from_config({"type": "constant", "price": 0.4}), ConstantPrice)
    assert isinstance(learner_from_config({"type": "uniform", "K": 3}), RoundRobin)
    assert learner_from_config({"type": "vanilla", "core": "ucb"}, T=1000).K == 10
    assert learner_from_config({"type": "exp3", "prices": [0.2, 0.4]}, T=100).K == 2
    with pytest.raises(ValueError):
        learner_from_config({"type": "zooming"})
    s = Strategy.from_config({"type": "ucb", "K": 4})
    assert s(100, 0).K == 4 and s.label == "ucb(K=4)"
    assert Strategy.from_config({"type": "ucb", "prices": [0.45, 0.5]})(10).K == 2
    with pytest.raises(ValueError):
        Strategy.from_config({"type": "ucb"})
    with pytest.raises(ValueError):
        Strategy.from_config({"type": "ucb", "K": 3, "gamma": 1})


def test_round_robin_cycles():
    rr = RoundRobin(ArmGrid(3))
    seq = []
    for _ in range(6):
        p = rr.choose()
        seq.append(p)
        rr.update(p, False)
    np.testing.assert_allclose(seq, [1 / 3, 2 / 3, 1, 1 / 3, 2 / 3, 1])
