import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gdde.benchmarks import BENCHMARKS, benchmark, get_benchmark


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
@pytest.mark.parametrize("d", [2, 5, 20])
def test_optimum_is_exactly_zero(name, d):
    f, space = benchmark(name, d)
    x = get_benchmark(name).optimum_location(d)
    assert space.contains(x)
    assert f(x) == 0.0


def test_canonical_boxes():
    assert benchmark("sphere", 3)[1].upper[0] == 5.12
    assert benchmark("rosenbrock", 3)[1].lower[0] == -2.048
    assert benchmark("ackley", 3)[1].upper[0] == 32.768


def test_known_values():
    f, _ = benchmark("sphere", 3)
    assert f(np.array([1.0, 2.0, 3.0])) == -14.0
    e, _ = benchmark("ellipsoid", 2)
    assert e(np.array([1.0, 1.0])) == -3.0
    r, _ = benchmark("rosenbrock", 2)
    assert r(np.zeros(2)) == -1.0


@pytest.mark.parametrize("name", sorted(BENCHMARKS))
@given(st.integers(0, 10**6))
@settings(max_examples=25)
def test_negative_away_from_optimum(name, seed):
    f, space = benchmark(name, 4)
    rng = np.random.default_rng(seed)
    x = space.lower + rng.random(4) * space.span
    if np.array_equal(x, get_benchmark(name).optimum_location(4)):
        return
    assert f(x) < 0.0


def test_errors():
    with pytest.raises(ValueError):
        benchmark("griewank", 3)
    with pytest.raises(ValueError):
        benchmark("sphere", 1)


def test_case_insensitive_and_budget():
    f, _ = benchmark("Sphere", 2, budget=1)
    f(np.zeros(2))
    assert f.remaining == 0
