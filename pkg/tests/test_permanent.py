import math

import numpy as np
import pytest

from cyclic_interferometer.errors import InputError
from cyclic_interferometer.permanent import bench, permanent_batch, permanent_fast, permanent_naive


def test_small_cases():
    assert permanent_fast(np.zeros((0, 0))) == 1
    assert permanent_fast([[3.0]]) == 3
    assert permanent_fast([[1, 2], [3, 4]]) == 10
    assert permanent_naive([[1, 2], [3, 4]]) == 10


@pytest.mark.parametrize("k", range(1, 9))
def test_all_ones(k):
    assert permanent_fast(np.ones((k, k))) == pytest.approx(math.factorial(k))


@pytest.mark.parametrize("k", [2, 5, 8])
def test_fast_matches_naive(k, rng):
    m = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    assert abs(permanent_fast(m) - permanent_naive(m)) < 1e-10 * abs(permanent_naive(m))


def test_invariances(rng):
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    p = permanent_fast(m)
    perm = rng.permutation(6)
    assert permanent_fast(m[perm][:, rng.permutation(6)]) == pytest.approx(p, rel=1e-12)
    assert permanent_fast(m.T) == pytest.approx(p, rel=1e-12)
    # permanent is multilinear in rows
    m2 = m.copy()
    m2[2] *= 3.5
    assert permanent_fast(m2) == pytest.approx(3.5 * p, rel=1e-12)


def test_compensated_path_agrees_with_batch(rng):
    m = rng.normal(size=(16, 16))
    assert permanent_fast(m) == pytest.approx(permanent_batch(m), rel=1e-9)


def test_batch_shapes(rng):
    stack = rng.normal(size=(3, 2, 4, 4))
    out = permanent_batch(stack)
    assert out.shape == (3, 2)
    assert out[1, 1] == pytest.approx(permanent_naive(stack[1, 1]))


def test_limits():
    with pytest.raises(InputError):
        permanent_naive(np.ones((11, 11)))
    with pytest.raises(InputError):
        permanent_fast(np.ones((31, 31)))
    with pytest.raises(InputError):
        permanent_fast(np.ones((2, 3)))
    with pytest.raises(InputError):
        permanent_batch(np.ones((17, 17)))


def test_bench_reports_each_size():
    rows = bench([4, 6], rng=0)
    assert [k for k, _ in rows] == [4, 6]
    assert all(t >= 0 for _, t in rows)
