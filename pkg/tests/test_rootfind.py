"""Bisection on monotone budget residuals."""
import math

import numpy as np
import pytest

from wncs.rootfind import bisect_decreasing


def test_finds_root_of_simple_decreasing_function():
    root = bisect_decreasing(lambda lam: 1.0 - lam)
    assert root == pytest.approx(1.0, rel=1e-10)


def test_root_far_from_start_both_directions():
    # residual (c/lam - 1) has root at c; start=1 must expand up and down
    for c in (1e-9, 1e-3, 1.0, 1e4, 1e9):
        root = bisect_decreasing(lambda lam, c=c: c / lam - 1.0)
        assert root == pytest.approx(c, rel=1e-9)


def test_randomized_allocator_style_residuals():
    # shape matches the allocators: sum_i (f_i + s_i / sqrt(lam)) - budget
    rng = np.random.default_rng(2024)
    for _ in range(50):
        floors = rng.uniform(0.1, 100.0, size=rng.integers(1, 6))
        slopes = rng.uniform(0.1, 50.0, size=floors.size)
        budget = floors.sum() + rng.uniform(1e-3, 1e6)
        (extra,) = (budget - floors.sum(),)
        expected = (slopes.sum() / extra) ** 2

        def residual(lam: float) -> float:
            return (floors.sum() + slopes.sum() / math.sqrt(lam) - budget) / budget

        root = bisect_decreasing(residual)
        assert root == pytest.approx(expected, rel=1e-8)


def test_raises_when_no_sign_change():
    with pytest.raises(RuntimeError):
        bisect_decreasing(lambda lam: 1.0, max_expand=40)
