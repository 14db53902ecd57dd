import math
from collections import Counter

import numpy as np
import pytest

from clansim.continuous import Call, Grain, LengthLaw, area_model, lossnet_model
from clansim.discrete import ContourModel, RandomClusterModel, toy_free, toy_hardcore
from clansim.finite_volume import (RegenerationTooDeep, simulate_forward, stationary_run,
                                   stationary_window, two_sweep)
from clansim.model import Box, Configuration, LabelSet, UnboundedRegion
from clansim.oracle import enumerate_exact, poisson_gof, tv_distance
from clansim.randomness import RandomStream

PAIR = toy_hardcore({"a": 0.5, "b": 0.5}, [("a", "b")])


def test_constant_without_events():
    xi0 = Configuration.of(["a"])
    tr = simulate_forward(PAIR, LabelSet([]), xi0, (0.0, 1e-9), RandomStream(0))
    assert tr.events == [] and tr.final() == xi0


def test_span_must_increase():
    with pytest.raises(ValueError):
        simulate_forward(PAIR, None, None, (1.0, 0.0), RandomStream(0))


def test_continuous_needs_bounded_domain():
    m = area_model(1.0, 0.5, Grain("disc", 0.5))
    with pytest.raises(UnboundedRegion):
        simulate_forward(m, None, None, (0.0, 1.0), RandomStream(0))


def test_free_forward_count_is_poisson():
    m = toy_free({"a": 1.5})
    root = RandomStream(1)
    counts = np.array([len(simulate_forward(m, None, None, (0.0, 20.0), root.derive(i)).final())
                       for i in range(10**4)])
    assert poisson_gof(counts, 1.5).p_value > 0.01


def test_hardcore_pair_never_together():
    root = RandomStream(2)
    for i in range(200):
        tr = simulate_forward(PAIR, None, None, (0.0, 10.0), root.derive(i))
        for e in tr.events:
            for t in (e.time, math.nextafter(e.time, math.inf)):
                assert len(tr.at(t)) <= 1


def test_empty_sweep_keeps_initial():
    xi0 = Configuration.of(["a", "b"])
    ks, tr = two_sweep(PAIR, LabelSet([]), xi0, (0.0, 5.0), RandomStream(3))
    assert tr.kept == [0, 1] and ks.verdicts == []


def test_free_two_sweep_keeps_all():
    m = toy_free({"a": 1.0, "b": 2.0})
    ks, tr = two_sweep(m, None, None, (0.0, 5.0), RandomStream(4))
    assert tr.kept == list(range(len(tr.cylinders))) and len(tr.cylinders) > 0


def instances():
    out = []
    rng = np.random.default_rng(5)
    for i in range(100):
        kind = i % 4
        if kind == 0:
            w = {c: float(rng.uniform(0.1, 1.0)) for c in "abcd"}
            pairs = [p for p in [("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")] if rng.random() < 0.6]
            m, dom = toy_hardcore(w, pairs), None
            xi0 = Configuration.of(["a"]) if rng.random() < 0.5 else None
        elif kind == 1:
            m, dom, xi0 = ContourModel(float(rng.uniform(0.8, 1.5)), 8), Box((0.0, 0.0), (3.0, 3.0)), None
        elif kind == 2:
            m, dom, xi0 = RandomClusterModel(float(rng.uniform(0.2, 0.6)), 2.0, (2, 2)), None, None
        else:
            m = lossnet_model(float(rng.uniform(0.5, 2.0)), LengthLaw("uniform", lmax=1.5), 2)
            dom, xi0 = Box((0.0,), (4.0,)), Configuration.of([Call(1.0, 0.5)])
        out.append((m, dom, xi0, float(rng.uniform(1.0, 6.0))))
    return out


def test_forward_and_two_sweep_bit_identical():
    for i, (m, dom, xi0, T) in enumerate(instances()):
        a = simulate_forward(m, dom, xi0, (0.0, T), RandomStream(6, (i,)))
        _, b = two_sweep(m, dom, xi0, (0.0, T), RandomStream(6, (i,)))
        assert sorted(a.kept) == b.kept
        assert [(c.basis, c.birth, c.lifetime) for c in a.cylinders] == \
               [(c.basis, c.birth, c.lifetime) for c in b.cylinders]
        births = lambda tr: [(e.time, e.index, e.kept) for e in tr.events if e.kind == "birth"]
        assert births(a) == births(b)
        assert a.final() == b.final()
        for t in np.linspace(0, T, 7):
            assert a.at(t) == b.at(t)


def test_stationary_pair_matches_enumeration():
    law = enumerate_exact(PAIR)
    root = RandomStream(7)
    keys = [stationary_window(PAIR, None, root.derive(i)).key() for i in range(20000)]
    assert tv_distance(keys, law) < 0.01


def test_stationary_single_site():
    m = toy_hardcore({"a": 0.5})
    root = RandomStream(8)
    n = 20000
    occ = sum(len(stationary_window(m, None, root.derive(i))) for i in range(n)) / n
    assert abs(occ - 1 / 3) < 3 * math.sqrt(2 / 9 / n)


def test_stationary_free_is_poisson():
    m = toy_free({"a": 0.8, "b": 0.4})
    root = RandomStream(9)
    counts = np.array([stationary_window(m, None, root.derive(i)).counts["a"] for i in range(10**4)])
    assert poisson_gof(counts, 0.8).p_value > 0.01


def test_regeneration_depth_reported_and_limited():
    m = toy_hardcore({"a": 0.1})
    _, depth, n = stationary_run(m, None, RandomStream(10))
    assert depth >= 0 and n >= 0
    big = toy_free({"a": 30.0})
    with pytest.raises(RegenerationTooDeep) as e:
        stationary_run(big, None, RandomStream(10), max_depth=1.0)
    assert e.value.depth > 1.0


def test_stationary_random_cluster_small():
    m = RandomClusterModel(0.3, 2.0, (2, 2))
    law = enumerate_exact(m)
    root = RandomStream(11)
    keys = [stationary_window(m, None, root.derive(i)).key() for i in range(10**4)]
    assert tv_distance(keys, law) < 0.03


def test_trajectory_text_lines():
    tr = simulate_forward(PAIR, None, None, (0.0, 3.0), RandomStream(12))
    text = tr.to_text(PAIR)
    assert len(text.splitlines()) == len(tr.events)
