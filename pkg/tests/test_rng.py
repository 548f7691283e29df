import numpy as np
from hypothesis import given, strategies as st

from scf_ganlab.rng import Prng

MASK = (1 << 64) - 1


def splitmix_reference(seed, n):
    """Scalar SplitMix64 in plain Python integers."""
    out, state = [], seed & MASK
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


@given(st.integers(0, MASK), st.integers(1, 40))
def test_raw_matches_scalar_splitmix(seed, n):
    assert Prng(seed).raw(n).tolist() == splitmix_reference(seed, n)


def test_streams_continue_across_calls():
    a = Prng(9)
    joined = np.concatenate([a.raw(3), a.raw(5)])
    assert np.array_equal(joined, Prng(9).raw(8))


def test_uniform_in_unit_interval_and_deterministic():
    n = 100_000
    u = Prng(1).uniform(n)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert np.array_equal(u, Prng(1).uniform(n))
    # standard error of the mean of U(0,1) is sqrt(1/12/n)
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / n)


def test_normal_moments():
    z = Prng(0).normal(10000)
    assert -0.05 <= z.mean() <= 0.05
    assert 0.97 <= z.std() <= 1.03


def test_normal_odd_length_is_prefix_of_even():
    assert np.array_equal(Prng(4).normal(7), Prng(4).normal(8)[:7])


@given(st.integers(0, 2**32), st.integers(0, 200))
def test_permutation_is_a_permutation(seed, n):
    p = Prng(seed).permutation(n)
    assert sorted(p.tolist()) == list(range(n))


def test_children_are_distinct_and_stable():
    root = Prng(5)
    assert root.child(1).seed == Prng(5).child(1).seed
    assert root.child(1).seed != root.child(2).seed
    # deriving a child does not advance the parent
    before = Prng(5).raw(4)
    root.child(3)
    assert np.array_equal(root.raw(4), before)
