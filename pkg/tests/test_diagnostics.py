import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clansim.clan import Limits, build_clan
from clansim.continuous import Grain, LengthLaw, area_model, lossnet_model
from clansim.diagnostics import (BiasLedger, LedgerEntry, alpha, bias_bound, bias_ledger_summary,
                                 fit_log_tail, generation_decay_check)
from clansim.discrete import ContourModel, toy_hardcore
from clansim.model import Box, LabelSet
from clansim.randomness import RandomStream


def test_alpha_area():
    r = alpha(area_model(0.05, 1.0, Grain("disc", 1.0)))
    assert r.alpha == pytest.approx(0.05 * 4 * math.pi)
    assert r.alpha == pytest.approx(0.6283, abs=1e-4)
    assert r.subcritical


def test_alpha_lossnet():
    r = alpha(lossnet_model(0.2, LengthLaw("fixed", L=1.0), 1))
    assert r.bounds["size_max_L_1"] == pytest.approx(0.6)
    assert r.bounds["maric"] == pytest.approx(0.4)
    assert r.alpha == pytest.approx(0.4) and r.subcritical
    assert "0.4" in r.text()


def test_alpha_toy_pair():
    r = alpha(toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")]))
    assert r.alpha == pytest.approx(0.8)
    assert r.subcritical == (r.alpha < 1)


def test_not_certified_is_a_verdict():
    r = alpha(toy_hardcore({"a": 0.7, "b": 0.7}, [("a", "b")]))
    assert not r.subcritical and "not certified" in r.text()


@pytest.mark.parametrize("c", [0.1, 0.5, 0.9, 1.0])
def test_alpha_scales_with_weights(c):
    w = {"a": 0.3, "b": 0.2, "c": 0.4}
    pairs = [("a", "b"), ("b", "c")]
    base = toy_hardcore(w, pairs).alpha
    scaled = toy_hardcore({k: c * v for k, v in w.items()}, pairs).alpha
    assert scaled == pytest.approx(c * base, rel=1e-12)


def test_contour_report_mentions_cutoff_tail():
    r = alpha(ContourModel(2.0, 10))
    assert r.subcritical and "k=10" in r.tail_note


def test_bias_bound_examples():
    assert bias_bound(0.0) == 0.0
    assert bias_bound(0.01) == pytest.approx(0.0101010101, abs=1e-9)
    assert bias_bound(0.5) == 1.0
    for bad in (1.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            bias_bound(bad)


@given(a=st.floats(0, 0.98), b=st.floats(0, 0.98), t=st.floats(0, 1))
def test_bias_bound_convex_increasing(a, b, t):
    lo, hi = min(a, b), max(a, b)
    assert bias_bound(lo) <= bias_bound(hi)
    mid = t * a + (1 - t) * b
    assert bias_bound(mid) <= t * bias_bound(a) + (1 - t) * bias_bound(b) + 1e-12


def clans_of(m, w, n, seed):
    root = RandomStream(seed)
    return [build_clan(m, w, root.derive(i), force=True) for i in range(n)]


def test_single_individual_offspring_mean():
    m = toy_hardcore({"a": 0.1})
    rep = generation_decay_check(clans_of(m, LabelSet(["a"]), 20000, 1), m, 0.1, n_max=3)
    assert rep.ok
    assert rep.mean[1] <= 0.1 * rep.mean[0] + 3 * rep.se[1] + 0.1 * 3 * rep.se[0]


def test_toy_generation_ratios():
    m = toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")])
    rep = generation_decay_check(clans_of(m, LabelSet(["a"]), 20000, 2), m, 0.8)
    assert rep.ok
    for n in range(4):
        if rep.mean[n + 1] > 0 and rep.mean[n] > 0.01:
            assert rep.ratio[n] <= 0.8 + 3 * rep.se[n + 1] / rep.mean[n]


def test_empty_clans_pass_vacuously():
    m = toy_hardcore({"a": 0.4})
    rep = generation_decay_check(clans_of(m, LabelSet([]), 10, 3), m, 0.4)
    assert rep.ok and rep.mean == [0.0] * 7
    assert generation_decay_check([], m, 0.4).ok


def test_decay_check_flags_violation():
    m = toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")])
    rep = generation_decay_check(clans_of(m, LabelSet(["a"]), 5000, 4), m, 0.05)
    assert not rep.ok and 1 in rep.violations


def test_ledger_round_trip_and_completeness():
    m = toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")])
    led = BiasLedger()
    root = RandomStream(5)
    for i in range(50):
        c = build_clan(m, LabelSet(["a"]), root.derive(i), Limits(max_depth=0.5), force=True)
        e = led.record(i, c, m)
        assert e.uniforms >= e.size
    assert len(led) == 50
    back = BiasLedger.from_jsonl(led.to_jsonl())
    assert back.entries == led.entries
    s = bias_ledger_summary(led)
    assert s.truncated == sum(e.truncated for e in led.entries)
    assert s.p_exceed == pytest.approx(s.truncated / 50)


def test_summary_without_truncation():
    m = toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")])
    led = BiasLedger()
    for i, c in enumerate(clans_of(m, LabelSet(["a"]), 2000, 6)):
        led.record(i, c, m)
    s = bias_ledger_summary(led)
    assert s.p_exceed == 0 and s.bound == 0
    with pytest.raises(ValueError):
        bias_ledger_summary(BiasLedger())


def test_tail_fit_on_geometric_data():
    rng = np.random.default_rng(7)
    x = rng.geometric(1 - 0.6, 10**5) - 1     # P[X > n] = 0.6^(n+1)
    fit = fit_log_tail(x)
    assert fit.slope == pytest.approx(math.log(0.6), abs=0.05)
    assert fit.below(math.log(0.6))
    assert not fit.below(math.log(0.3))
    assert fit_log_tail([0, 0, 1]) is None


def test_toy_depth_tail_below_alpha():
    m = toy_hardcore({"a": 0.4, "b": 0.4}, [("a", "b")])
    led = BiasLedger()
    for i, c in enumerate(clans_of(m, LabelSet(["a"]), 20000, 8)):
        led.record(i, c, m)
    s = bias_ledger_summary(led, alpha_value=0.8)
    assert s.fit is not None and s.fit_ok


def test_contour_size_tail_decreasing():
    m = ContourModel(1.0, 10)
    led = BiasLedger()
    for i, c in enumerate(clans_of(m, Box((0.0, 0.0), (4.0, 4.0)), 600, 9)):
        led.record(i, c, m)
    tail = bias_ledger_summary(led).size_tail
    assert tail["6"] >= tail["8"] >= tail["10"]
    assert tail["6"] > 0


def test_ledger_entry_fields():
    e = LedgerEntry(0, 1.5, 2, 10, 3, 4.0, False)
    assert BiasLedger([e]).to_jsonl().startswith('{"index":0,"depth":1.5')
