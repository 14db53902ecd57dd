import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from clansim.discrete import RandomClusterModel, toy_free, toy_hardcore
from clansim.finite_volume import simulate_forward
from clansim.model import Configuration
from clansim.oracle import (ExactLaw, StateSpaceTooLarge, chisq_gof, chisq_two_sample, compare,
                            compare_counts, enumerate_exact, exact_sample, max_abs_difference,
                            poisson_gof, rc_exact_law, rc_pushforward, tv_distance)
from clansim.randomness import RandomStream

PAIR = toy_hardcore({"a": 0.5, "b": 0.5}, [("a", "b")])


def test_pair_law():
    law = enumerate_exact(PAIR)
    assert law.as_dict() == pytest.approx({(): 0.5, (("a", 1),): 0.25, (("b", 1),): 0.25}, abs=1e-15)
    assert law.Z == pytest.approx(2.0)
    assert math.fsum(law.probs) == pytest.approx(1.0, abs=1e-12)


def test_single_bond_random_cluster():
    m = RandomClusterModel(0.5, 2.0, (2, 1))
    law = rc_exact_law(m)
    assert law.prob(()) == pytest.approx(2 / 3)
    assert 1 - law.prob(()) == pytest.approx(1 / 3)


def test_pushforward_identity_2x2():
    for p, q in [(0.5, 2.0), (0.3, 1.0), (0.7, 3.5)]:
        m = RandomClusterModel(p, q, (2, 2))
        assert max_abs_difference(rc_pushforward(m), rc_exact_law(m)) < 1e-12


def test_free_single_individual():
    w = 0.7
    law = enumerate_exact(toy_free({"a": w}), cap=8)
    assert law.prob(()) == pytest.approx(math.exp(-w), rel=1e-6)
    assert law.prob((("a", 2),)) == pytest.approx(math.exp(-w) * w**2 / 2, rel=1e-6)
    assert law.tail_mass < 1e-4
    assert enumerate_exact(toy_free({"a": w})).tail_mass < 1e-4


def test_enumeration_refuses_huge_spaces():
    m = toy_free({f"x{i}": 0.1 for i in range(10)})
    with pytest.raises(StateSpaceTooLarge):
        enumerate_exact(m)


def test_forward_snapshots_in_support():
    m = toy_hardcore({"a": 0.6, "b": 0.4, "c": 0.5}, [("a", "b"), ("b", "c")])
    support = set(enumerate_exact(m).keys)
    root = RandomStream(1)
    for i in range(10**4):
        tr = simulate_forward(m, None, None, (0.0, 2.0), root.derive(i))
        assert tr.final().key() in support


def point_mass():
    c = Configuration.of(["a"])
    return ExactLaw([c.key()], [1.0], 1.0, {c.key(): c})


def test_exact_sample_point_mass():
    law = point_mass()
    s = RandomStream(2)
    assert all(exact_sample(law, s) == Configuration.of(["a"]) for _ in range(100))


def test_exact_sample_frequencies():
    law = enumerate_exact(PAIR)
    s = RandomStream(3)
    n = 10**5
    counts = Counter(exact_sample(law, s).key() for _ in range(n))
    for k, p in law.as_dict().items():
        assert abs(counts[k] / n - p) < 3 * math.sqrt(p * (1 - p) / n)
    two = ExactLaw([(), (("a", 1),)], [0.5, 0.5], 1.0)
    c2 = Counter(exact_sample(two, s).key() for _ in range(10**4))
    assert abs(c2[()] / 1e4 - 0.5) < 3 * 0.005


def test_tv_examples():
    law = enumerate_exact(PAIR)
    exact = [()] * 2 + [(("a", 1),), (("b", 1),)]
    assert tv_distance(exact, law) == 0.0
    assert tv_distance([(("z", 1),)] * 5, law) == 1.0
    s = RandomStream(4)
    draws = [exact_sample(law, s).key() for _ in range(10**5)]
    assert tv_distance(draws, law) < 0.02
    with pytest.raises(ValueError):
        tv_distance([], law)


def test_chisq_examples():
    r = chisq_gof([50, 30, 20], [0.5, 0.3, 0.2])
    assert r.statistic == 0.0 and r.p_value == 1.0
    with pytest.raises(ValueError):
        chisq_gof([0, 0], [0.5, 0.5])


def test_chisq_calibration():
    rng = np.random.default_rng(5)
    rejections = sum(poisson_gof(rng.poisson(1.0, 10**5), 1.0).p_value < 0.01 for _ in range(200))
    # Binomial(200, 0.01): P[X > 8] < 1e-3
    assert rejections <= 8


def test_chisq_power():
    rng = np.random.default_rng(6)
    assert poisson_gof(rng.poisson(1.2, 10**5), 1.0).p_value < 1e-6


def test_two_sample():
    rng = np.random.default_rng(7)
    a, b = rng.poisson(1.0, 5000), rng.poisson(1.0, 5000)
    assert chisq_two_sample(a, b).p_value > 0.001
    assert chisq_two_sample(a, rng.poisson(1.5, 5000)).p_value < 1e-6
    with pytest.raises(ValueError):
        chisq_two_sample([], [1])


def test_compare_pass_fail_and_refusal():
    from clansim.cleaner import perfect_sample
    law = enumerate_exact(PAIR)
    root = RandomStream(8)
    good = compare(lambda i: perfect_sample(PAIR, None, root.derive(i), force=True)[0], law, 20000)
    assert good.passed and good.tv < 0.02
    free = toy_free({"a": 0.5, "b": 0.5})
    bad = compare(lambda i: perfect_sample(free, None, root.derive(10**6 + i))[0], law, 5000)
    assert not bad.passed
    assert "FAIL" in bad.text()
    with pytest.raises(ValueError):
        compare(lambda i: Configuration(), law, 999)


def test_compare_counts_unseen_atom_fails():
    law = enumerate_exact(PAIR)
    counts = Counter({(): 500, (("a", 1),): 250, (("b", 1),): 240, (("a", 1), ("b", 1)): 10})
    assert not compare_counts(counts, law).passed


def test_records_export():
    law = enumerate_exact(PAIR)
    lines = law.to_records(PAIR).splitlines()
    assert len(lines) == 3 and '"p":0.5' in lines[0]
