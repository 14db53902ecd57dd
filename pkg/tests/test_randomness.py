import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from clansim.randomness import (INFINITY, InvalidParameter, RandomStream, derive_stream,
                                first_event_from_uniform, next_exponential, next_uniform,
                                sample_first_event)


def draws(s, k):
    return np.array([next_uniform(s) for _ in range(k)])


def test_derive_is_deterministic():
    root = RandomStream(42)
    a, b = derive_stream(root, 0), derive_stream(root, 0)
    assert draws(a, 10).tolist() == draws(b, 10).tolist()


def test_siblings_differ():
    root = RandomStream(42)
    assert next_uniform(derive_stream(root, 0)) != next_uniform(derive_stream(root, 1))


def test_child_ignores_parent_consumption():
    root = RandomStream(5)
    first = next_uniform(root.derive(3))
    draws(root, 1000)
    assert next_uniform(root.derive(3)) == first


def test_uniform_mean_and_ks():
    s = RandomStream(1)
    x = draws(s, 10**6)
    assert abs(x.mean() - 0.5) < 0.002
    assert x.min() >= 0 and x.max() < 1
    ks = stats.kstest(x[:10**5], "uniform")
    assert ks.statistic < 1.63 / math.sqrt(10**5)


def test_counter_tracks_draws():
    s = RandomStream(3)
    c0 = s.counter
    for _ in range(17):
        s.uniform()
    assert s.counter == c0 + 17


def test_exponential_mean():
    s = RandomStream(2)
    x = np.array([next_exponential(s, 1.0) for _ in range(10**6)])
    assert abs(x.mean() - 1.0) < 0.005


def test_exponential_inversion_identity():
    # rate 2 at U = 1 - e^-2 gives exactly 1 under -log(1-U)/rate
    u = 1 - math.exp(-2)
    assert -math.log1p(-u) / 2 == pytest.approx(1.0, abs=1e-15)


def test_exponential_rejects_bad_rate():
    with pytest.raises(InvalidParameter):
        next_exponential(RandomStream(0), 0.0)


def test_seed_range():
    with pytest.raises(InvalidParameter):
        RandomStream(-1)
    with pytest.raises(InvalidParameter):
        RandomStream(2**64)
    RandomStream(2**64 - 1)


def test_first_event_zero_mass():
    s = RandomStream(0)
    assert all(sample_first_event(s, 0.0, 0.3) == INFINITY for _ in range(100))


def test_first_event_closed_form():
    t = first_event_from_uniform(0.5, 1.0, 0.0)
    assert t == pytest.approx(-math.log(1 - math.log(2)), rel=1e-12)
    assert t == pytest.approx(1.1814, abs=1e-4)


def test_first_event_infinite_below_threshold():
    assert first_event_from_uniform(math.exp(-1) - 1e-12, 1.0, 0.0) == INFINITY
    assert first_event_from_uniform(0.2, 1.0, 0.0) == INFINITY


def test_first_event_consumes_one_uniform():
    s = RandomStream(9)
    sample_first_event(s, 0.0, 1.0)
    sample_first_event(s, 3.0, 0.0)
    assert s.counter == 2


def thinning_first_event(rng, mass, lower, horizon=40.0):
    """Independent oracle: thin a rate-``mass`` process on (lower, horizon)
    with acceptance ``exp(-t)``."""
    t = lower
    while True:
        t += rng.exponential(1 / mass)
        if t > horizon:
            return INFINITY
        if rng.random() < math.exp(-t):
            return t


@pytest.mark.parametrize("mass,lower", [(1.0, 0.0), (0.5, 0.2), (3.0, 1.0), (10.0, 2.5)])
def test_first_event_finite_probability(mass, lower):
    s = RandomStream(11, (int(mass * 10), int(lower * 10)))
    n = 10**5
    fin = sum(sample_first_event(s, mass, lower) < INFINITY for _ in range(n)) / n
    p = 1 - math.exp(-mass * math.exp(-lower))
    assert abs(fin - p) < 3 * math.sqrt(p * (1 - p) / n) + 1e-9


def test_first_event_matches_thinning_cdf():
    mass, lower = 2.0, 0.3
    s = RandomStream(12)
    rng = np.random.default_rng(12)
    a = np.array([sample_first_event(s, mass, lower) for _ in range(20000)])
    b = np.array([thinning_first_event(rng, mass, lower) for _ in range(20000)])
    assert abs(np.isinf(a).mean() - np.isinf(b).mean()) < 0.02
    ks = stats.ks_2samp(a[np.isfinite(a)], b[np.isfinite(b)])
    assert ks.pvalue > 0.001


def test_infinite_frequency_one_over_e():
    s = RandomStream(13)
    n = 10**5
    f = sum(sample_first_event(s, 1.0, 0.0) == INFINITY for _ in range(n)) / n
    assert abs(f - math.exp(-1)) < 0.005


@settings(max_examples=200, deadline=None)
@given(u=st.floats(1e-12, 1 - 1e-12), m=st.floats(1e-3, 1e3), lower=st.floats(0, 20))
def test_first_event_after_lower(u, m, lower):
    t = first_event_from_uniform(u, m, lower)
    assert t == INFINITY or t > lower


def test_sibling_streams_uncorrelated():
    root = RandomStream(77)
    a, b = draws(root.derive(0), 10**5), draws(root.derive(1), 10**5)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 4 / math.sqrt(10**5)
