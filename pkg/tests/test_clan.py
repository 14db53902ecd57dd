import math

import numpy as np
import pytest

from clansim.clan import (Clan, Cylinder, Limits, NotSubcritical, build_clan, check_ancestor_property,
                          clan_from_text, clan_generations, clan_to_text, potential_bases, ti)
from clansim.continuous import Germ, Grain, LengthLaw, area_model, lossnet_model, strauss_model
from clansim.discrete import ContourModel, RandomClusterModel, toy_free, toy_hardcore
from clansim.model import Ball, Box, LabelSet
from clansim.oracle import chisq_two_sample, poisson_gof
from clansim.randomness import RandomStream


def toy3():
    return toy_hardcore({"a": 0.3, "b": 0.2, "c": 0.1}, [("a", "b")])


# --------------------------------------------------------- TI and bases

def test_ti_examples():
    m = toy3()
    w = LabelSet(["a"])
    assert ti([], w, "a", m) == 0.0
    assert ti([Cylinder("a", -2.0, 3.0)], w, "b", m) == -2.0
    H = [Cylinder("a", -2.0, 3.0), Cylinder("a", -5.0, 4.0)]
    assert ti(H, w, "b", m) == -5.0
    with pytest.raises(ValueError):
        ti(H, w, "c", m)


def test_potential_bases_examples():
    m = toy_hardcore({"a": 0.5, "b": 0.5}, [("a", "b")])
    w = LabelSet(["a"])
    assert potential_bases([], w, m).bases == ["a"]
    dom = potential_bases([Cylinder("a", -1.0, 2.0)], w, m)
    assert set(dom.bases) == {"a", "b"}
    assert dom.member("b")


def test_potential_bases_continuous_window_term():
    m = area_model(1.0, 0.5, Grain("disc", 0.5))
    w = Ball((0.0, 0.0), 2.0)
    dom = potential_bases([], w, m)
    (box,) = dom.boxes
    assert box == Box((-2.5, -2.5), (2.5, 2.5))
    assert dom.member(Germ((2.4, 0.0))) and not dom.member(Germ((2.6, 0.0)))
    assert not dom.member(Germ((1.9, 1.9)))


# ------------------------------------------------------------ builds

def test_zero_intensity_gives_empty_clan():
    c = build_clan(toy3(), LabelSet([]), RandomStream(0))
    assert len(c) == 0 and c.depth == 0.0 and not c.truncated
    assert c.generations(toy3()) == [] and clan_generations(c, toy3()) == []


def test_single_site_root_count_is_poisson():
    m = toy_hardcore({"a": 0.1})
    w = LabelSet(["a"])
    root = RandomStream(1)
    n = 10**5
    roots = np.array([len(build_clan(m, w, root.derive(i)).roots(m)) for i in range(n)])
    assert abs(roots.mean() - 0.1) < 0.003
    assert poisson_gof(roots, 0.1).p_value > 0.001


def test_free_roots_match_poisson():
    m = toy_free({"a": 0.7, "b": 0.3})
    w = LabelSet(["a", "b"])
    root = RandomStream(2)
    counts = []
    for i in range(20000):
        c = build_clan(m, w, root.derive(i))
        counts.append(sum(1 for j in c.roots(m) if c.cylinders[j].basis == "a"))
    assert poisson_gof(np.array(counts), 0.7).p_value > 0.01


def sample_models():
    return [
        (toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")]), LabelSet(["a"])),
        (ContourModel(1.5, 8), Box((0.0, 0.0), (3.0, 3.0))),
        (RandomClusterModel(0.2, 2.0, (2, 2)), None),
        (area_model(0.3, 0.5, Grain("disc", 0.4)), Box((0.0, 0.0), (1.0, 1.0))),
        (strauss_model(0.0, -1.0, 0.5, base_rate=0.8), Box((0.0, 0.0), (2.0, 2.0))),
        (lossnet_model(0.2, LengthLaw("fixed", L=1.0), 1), Box((0.0,), (2.0,))),
    ]


@pytest.mark.parametrize("idx", range(6))
def test_ancestor_property_and_partition(idx):
    m, w = sample_models()[idx]
    root = RandomStream(3, (idx,))
    for i in range(200):
        c = build_clan(m, w, root.derive(i), force=True)
        assert not c.truncated
        check_ancestor_property(c, m)
        gens = c.generations(m)
        assert sum(len(g) for g in gens) == len(c)
        assert all(cy.lifetime >= 0 for cy in c.cylinders)
        assert all(cy.birth <= 0 for cy in c.cylinders)


def test_one_root_one_parent():
    m = toy_hardcore({"a": 1.0})
    c = Clan(LabelSet(["a"]), [Cylinder("a", -1.0, 2.0), Cylinder("a", -3.0, 2.5)])
    check_ancestor_property(c, m)
    assert [len(g) for g in clan_generations(c, m)] == [1]


def test_ancestor_check_catches_orphans():
    m = toy_hardcore({"a": 1.0, "c": 1.0})
    c = Clan(LabelSet(["a"]), [Cylinder("a", -1.0, 2.0), Cylinder("c", -3.0, 2.5)])
    with pytest.raises(AssertionError):
        check_ancestor_property(c, m)


def test_not_subcritical_refused():
    m = RandomClusterModel(0.5, 2.0, (2, 2))
    assert m.alpha > 1
    with pytest.raises(NotSubcritical):
        build_clan(m, None, RandomStream(0))
    build_clan(m, None, RandomStream(0), force=True)


def test_depth_truncation():
    m = toy_hardcore({"a": 5.0})
    c = build_clan(m, LabelSet(["a"]), RandomStream(4), Limits(max_depth=0.05), force=True)
    assert c.truncated and c.reason == "depth"


def test_size_truncation():
    m = toy_hardcore({"a": 5.0})
    c = build_clan(m, LabelSet(["a"]), RandomStream(4), Limits(max_size=1), force=True)
    assert c.truncated and c.reason == "size" and len(c) == 1


def test_size_cutoff_marks_clan():
    m = ContourModel(1.0, 6)
    w = Box((0.0, 0.0), (4.0, 4.0))
    root = RandomStream(5)
    seen = False
    for i in range(300):
        c = build_clan(m, w, root.derive(i), Limits(size_cutoff=6), force=True)
        if c.max_basis_size >= 6:
            assert c.truncated and c.reason == "size_cutoff"
            seen = True
        else:
            assert not c.truncated
    assert seen


@pytest.mark.parametrize("idx", [0, 1, 3, 5])
def test_monotone_growth(idx):
    """A build stopped at depth t is the depth-t prefix of the full build."""
    m, w = sample_models()[idx]
    for i in range(100):
        full = build_clan(m, w, RandomStream(6, (idx, i)), force=True)
        if full.depth == 0:
            continue
        t = 0.5 * full.depth
        part = build_clan(m, w, RandomStream(6, (idx, i)), Limits(max_depth=t), force=True)
        expect = [cy for cy in full.cylinders if -cy.birth <= t]
        assert [(c.basis, c.birth, c.lifetime) for c in part.cylinders] == \
               [(c.basis, c.birth, c.lifetime) for c in expect]


def test_text_round_trip():
    m, w = sample_models()[1]
    c = build_clan(m, w, RandomStream(7), force=True)
    back = clan_from_text(clan_to_text(c, m), m, w)
    assert [(x.basis, x.birth, x.lifetime, x.parent) for x in back.cylinders] == \
           [(x.basis, x.birth, x.lifetime, x.parent) for x in c.cylinders]
    assert back.depth == c.depth


def test_pending_reuse_matches_always_resample():
    m = toy_hardcore({"a": 0.4, "b": 0.4, "c": 0.3}, [("a", "b"), ("b", "c")])
    w = LabelSet(["a"])
    n = 20000

    def stats_of(resample, seed):
        root = RandomStream(seed)
        sizes, roots = [], []
        for i in range(n):
            c = build_clan(m, w, root.derive(i), force=True, always_resample=resample)
            sizes.append(min(len(c), 8))
            roots.append(len(c.roots(m)))
        return sizes, roots

    sa, ra = stats_of(False, 8)
    sb, rb = stats_of(True, 9)
    assert chisq_two_sample(sa, sb).p_value > 0.001
    assert chisq_two_sample(ra, rb).p_value > 0.001


def test_deterministic_given_stream():
    m, w = sample_models()[3]
    a = build_clan(m, w, RandomStream(10, (1,)))
    b = build_clan(m, w, RandomStream(10, (1,)))
    assert [(c.basis, c.birth) for c in a.cylinders] == [(c.basis, c.birth) for c in b.cylinders]
    assert a.uniforms == b.uniforms > 0


def test_lifetime_reaches_obligation():
    """Each non-root cylinder lives at least until the birth of the
    youngest clan cylinder it clashes with."""
    m, w = sample_models()[1]
    for i in range(100):
        c = build_clan(m, w, RandomStream(11, (i,)), force=True)
        for j, cy in enumerate(c.cylinders):
            if cy.parent is not None:
                assert cy.death >= c.cylinders[cy.parent].birth - 1e-12
            else:
                assert cy.death >= 0.0 - 1e-12
