import numpy as np
import pytest
from hypothesis import given, strategies as st

from framepick.errors import InputShapeError, ParameterError
from framepick.multiplier import estimate_mask, estimate_mask_spatial, mask_objective

mag = st.floats(1e-3, 10.0)
lam_st = st.floats(1e-4, 10.0)


def grid_min(a1, a2, lam, lo=0.0, hi=None, step=1e-4, max_points=2 * 10**6):
    """Brute-force minimiser of 1/2 (a2 - m a1)^2 + lam |m - 1|.

    The step grows on wide ranges so the grid stays below `max_points`.
    """
    hi = hi if hi is not None else max(3.0, 2 * a2 / a1 + 2)
    step = max(step, (hi - lo) / max_points)
    m = np.arange(lo, hi, step)
    obj = 0.5 * (a2 - m * a1) ** 2 + lam * np.abs(m - 1)
    return m[np.argmin(obj)], obj.min()


class TestExamples:
    def test_equal_magnitudes(self, rng):
        c1 = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
        c2 = np.abs(c1) * np.exp(1j * rng.uniform(0, 6, (5, 7)))
        assert np.all(estimate_mask(c1, c2, 1e-3) == 1.0)

    def test_scalar_shrink(self):
        m = estimate_mask(np.array([2.0]), np.array([4.0]), 1.0)
        assert np.isclose(m[0], 1.75, atol=1e-14)
        m_grid, _ = grid_min(2.0, 4.0, 1.0, 0.0, 3.0, 1e-6)
        assert abs(m_grid - 1.75) < 2e-6

    def test_scalar_full_shrink(self):
        assert estimate_mask(np.array([2.0]), np.array([3.0]), 10.0)[0] == 1.0

    def test_zero_c1(self):
        m = estimate_mask(np.zeros((3, 3)), np.ones((3, 3)), 0.1)
        assert np.all(m == 1.0)

    def test_trivial_entries(self):
        c1 = np.array([[1.0, 1e-14]])
        c2 = np.array([[1.0, 5.0]])
        assert estimate_mask(c1, c2, 1e-3)[0, 1] == 1.0

    def test_errors(self):
        with pytest.raises(InputShapeError):
            estimate_mask(np.ones(3), np.ones(4), 1.0)
        for bad in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ParameterError):
                estimate_mask(np.ones(3), np.ones(3), bad)

    def test_batched_lambda(self):
        c1 = np.ones((2, 3, 3))
        c2 = np.full((2, 3, 3), 0.5)
        m = estimate_mask(c1, c2, np.array([0.1, 1.0])[:, None, None])
        assert np.allclose(m[0], 0.6) and np.all(m[1] == 1.0)


class TestObjective:
    def test_zero_at_identity(self):
        c = np.array([1.0, 2.0])
        assert mask_objective(c, c, np.ones(2), 0.5) == 0.0

    def test_identity_mask(self):
        c1, c2 = np.array([1.0, 2.0]), np.array([3.0, 1.0])
        assert np.isclose(mask_objective(c1, c2, np.ones(2), 7.0), 0.5 * (4 + 1))

    def test_random_candidates(self, rng):
        c1 = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        c2 = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        lam = 0.3
        best = mask_objective(c1, c2, estimate_mask(c1, c2, lam), lam)
        cands = estimate_mask(c1, c2, lam) + rng.normal(0, 0.5, (10**5 // 20, 4, 5))
        for m in cands:
            assert best <= mask_objective(c1, c2, m, lam) + 1e-12


@given(mag, st.floats(0.0, 10.0), lam_st)
def test_minimizer_property(a1, a2, lam):
    m = estimate_mask(np.array([a1]), np.array([a2]), lam)[0]
    obj = 0.5 * (a2 - m * a1) ** 2 + lam * abs(m - 1)
    _, obj_grid = grid_min(a1, a2, lam)
    assert obj <= obj_grid + 1e-9


@given(mag, st.floats(0.0, 10.0), lam_st)
def test_shrinkage_direction(a1, a2, lam):
    y = a2 / a1
    m = estimate_mask(np.array([a1]), np.array([a2]), lam)[0]
    assert abs(m - 1) <= abs(y - 1) + 1e-15
    if m != 1:
        assert np.sign(m - 1) == np.sign(y - 1)
    assert m >= min(1.0, y) - 1e-15


@given(mag, st.floats(0.0, 10.0), lam_st, lam_st)
def test_monotone_in_lambda(a1, a2, l1, l2):
    l1, l2 = sorted((l1, l2))
    m1 = estimate_mask(np.array([a1]), np.array([a2]), l1)[0]
    m2 = estimate_mask(np.array([a1]), np.array([a2]), l2)[0]
    assert abs(m1 - 1) >= abs(m2 - 1)


@given(mag, st.floats(0.0, 10.0), lam_st)
def test_threshold_exactness(a1, a2, lam):
    y = a2 / a1
    m = estimate_mask(np.array([a1]), np.array([a2]), lam)[0]
    assert (m == 1.0) == (abs(y - 1) <= lam / a1**2)


class TestSpatial:
    def test_trivial_neighbourhood_bitwise(self, rng):
        c1 = rng.standard_normal((3, 6, 6)) + 1j * rng.standard_normal((3, 6, 6))
        c2 = rng.standard_normal((3, 6, 6)) + 1j * rng.standard_normal((3, 6, 6))
        m = estimate_mask(c1, c2, 0.2)
        ms = estimate_mask_spatial(c1, c2, [c1], [c2], [1.0], 0.2)
        assert np.array_equal(m, ms)

    @pytest.mark.parametrize("reducer", ["linear", "median"])
    def test_identical_neighbours(self, rng, reducer):
        c1 = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        c2 = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        w = np.full(9, 1 / 9)
        ms = estimate_mask_spatial(c1, c2, [c1] * 9, [c2] * 9, w, 0.2, reducer)
        assert np.allclose(ms, estimate_mask(c1, c2, 0.2), atol=1e-12)

    def test_flat_neighbours_damp_deviation(self):
        c1 = np.array([[1.0]])
        c2 = np.array([[2.0]])
        basic = estimate_mask(c1, c2, 0.6)[0, 0]
        assert np.isclose(basic, 1.4)
        ms = estimate_mask_spatial(c1, c2, [c1, c1, c1], [c2, c1, c1], np.full(3, 1 / 3), 0.6)
        assert ms[0, 0] == 1.0

    def test_hand_value(self):
        # y = 2, neighbours raise the pooled ratio to 3, c1_pool = 1
        c1 = np.array([[1.0]])
        nc2 = [np.array([[2.0]]), np.array([[4.0]])]
        m = estimate_mask_spatial(c1, nc2[0], [c1, c1], nc2, [0.5, 0.5], 1.0)
        assert np.isclose(m[0, 0], (2 - 1) * (1 - 1.0 / (1 * 2)) + 1)

    def test_trivial_neighbour_ratio_is_neutral(self):
        c1 = np.array([[1.0, 1.0]])
        c2 = np.array([[2.0, 2.0]])
        dead = np.array([[0.0, 1.0]])
        m = estimate_mask_spatial(c1, c2, [c1, dead], [c2, np.array([[5.0, 2.0]])],
                                  [0.5, 0.5], 0.1)
        # left column: pooled y = (2 + 1) / 2, c1_pool = 0.5
        assert np.isclose(m[0, 0], 1 + 1 * (1 - 0.1 / (0.25 * 0.5)))

    def test_weight_mismatch(self):
        c = np.ones((2, 2))
        with pytest.raises(ParameterError):
            estimate_mask_spatial(c, c, [c, c], [c, c], [1.0], 0.1)
        with pytest.raises(ParameterError):
            estimate_mask_spatial(c, c, [c], [c], [1.0], 0.1, reducer="mean")

    def test_median_reducer_complex(self):
        c1 = np.array([[1 + 1j]])
        nc1 = [c1, np.array([[3 + 0j]]), np.array([[2 - 1j]])]
        nc2 = [2 * x for x in nc1]
        lam = 0.5
        m = estimate_mask_spatial(c1, nc2[0], nc1, nc2, np.full(3, 1 / 3), lam, "median")
        pool = 2 + 0j  # medians of real (1, 3, 2) and imaginary (1, 0, -1) parts
        assert np.isclose(m[0, 0], 1 + 1 * (1 - lam / (abs(pool) ** 2 * 1)))
