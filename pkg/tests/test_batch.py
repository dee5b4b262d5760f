import numpy as np
import pytest

from framepick.batch import pick_dataset, tune_lambda_dataset
from framepick.data import DatasetGrid
from framepick.errors import ParameterError
from framepick.frames import GaborFrame
from framepick.peakpick import (
    LambdaPolicy,
    SliceConfig,
    count_peaks,
    extract_peaks,
    pick_spectrum,
    tune_lambda,
)
from framepick.spatial import NeighborhoodSpec
from framepick.synth import PhantomSpec, synth_phantom

CFG, FRAME = SliceConfig(), GaborFrame()


def small_grid(rng, dims=(3, 4), L=240, present=None):
    n = int(np.prod(dims)) if present is None else int(present.sum())
    t = np.arange(L)
    data = 0.3 * rng.standard_normal((n, L)) + 3 * np.exp(-0.5 * ((t - 100) / 2.5) ** 2)
    return DatasetGrid(dims, np.arange(L) + 100.0, data, present)


def test_basic_equals_pick_spectrum(rng):
    g = small_grid(rng)
    res = pick_dataset(g, CFG, FRAME, LambdaPolicy("fixed", 0.05))
    for i, f in enumerate(g.intensities):
        assert np.array_equal(res.indicators[i], pick_spectrum(f, CFG, FRAME, LambdaPolicy("fixed", 0.05)))
    assert res.ok and np.all(res.lambdas == 0.05)


def test_single_spot_spatial_equals_basic(rng):
    g = small_grid(rng, dims=(1, 1))
    pol = LambdaPolicy("fixed", 0.05)
    b = pick_dataset(g, CFG, FRAME, pol)
    s = pick_dataset(g, CFG, FRAME, pol, spatial=NeighborhoodSpec("average", 3))
    assert np.array_equal(b.indicators, s.indicators)


def test_identical_spots(rng):
    f = rng.standard_normal(240)
    g = DatasetGrid((3, 3), np.arange(240) + 1.0, np.tile(f, (9, 1)))
    pol = LambdaPolicy("fixed", 0.05)
    b = pick_dataset(g, CFG, FRAME, pol)
    s = pick_dataset(g, CFG, FRAME, pol, spatial=NeighborhoodSpec("gaussian", 3, 0.5))
    assert np.allclose(s.indicators, b.indicators, atol=1e-12)
    assert np.allclose(b.indicators, b.indicators[0])


@pytest.mark.parametrize("spatial", [None, NeighborhoodSpec("gaussian", 3, 0.5), NeighborhoodSpec("median", 3)])
def test_thread_count_invariance(rng, spatial):
    present = np.ones((4, 5), bool)
    present[1, 2] = present[3, 0] = False
    g = small_grid(rng, (4, 5), present=present)
    pol = LambdaPolicy("noise_adaptive", 2.0)
    one = pick_dataset(g, CFG, FRAME, pol, spatial=spatial, threads=1)
    many = pick_dataset(g, CFG, FRAME, pol, spatial=spatial, threads=4)
    assert np.array_equal(one.indicators, many.indicators)


def test_bad_spot_collected(rng):
    g = small_grid(rng, (2, 2))
    g.intensities[1] = 0.0
    res = pick_dataset(g, CFG, FRAME, preprocess=lambda f: f / f.sum() if f.sum() else _raise())
    assert [(e.row, e.col) for e in res.errors] == [(0, 1)]
    assert not np.any(res.indicators[1]) and np.isnan(res.lambdas[1])
    assert np.any(res.indicators[0])


def _raise():
    from framepick.errors import DegenerateSpectrumError
    raise DegenerateSpectrumError("empty spectrum")


def test_failed_neighbour_dropped(rng):
    g = small_grid(rng, (1, 3))
    g.intensities[2] = 0.0
    pre = lambda f: f if f.any() else _raise()
    spatial = NeighborhoodSpec("average", 3)
    res = pick_dataset(g, CFG, FRAME, LambdaPolicy("fixed", 0.05), spatial=spatial, preprocess=pre)
    two = DatasetGrid((1, 2), g.mz, g.intensities[:2])
    ref = pick_dataset(two, CFG, FRAME, LambdaPolicy("fixed", 0.05), spatial=spatial)
    assert np.array_equal(res.indicators[:2], ref.indicators)
    assert len(res.errors) == 1


def test_target_count_policy(rng):
    g = small_grid(rng, (1, 2), L=600)
    res = pick_dataset(g, CFG, FRAME, LambdaPolicy("target_count", target=3))
    for i, f in enumerate(g.intensities):
        assert res.lambdas[i] == tune_lambda(f, CFG, FRAME, 3)
        assert count_peaks(res.indicators[i]) == 3


def test_errors(rng):
    g = small_grid(rng)
    with pytest.raises(ParameterError):
        pick_dataset(g, CFG, GaborFrame(40, 20))
    with pytest.raises(ParameterError):
        pick_dataset(g, CFG, FRAME, threads=0)


def test_dataset_lambda_uses_mean(rng):
    g = small_grid(rng, (2, 2), L=600)
    lam = tune_lambda_dataset(g, CFG, FRAME, 2)
    assert lam == tune_lambda(g.intensities.mean(axis=0), CFG, FRAME, 2)


def test_phantom_spatial_fills_shapes():
    grid, occ = synth_phantom(PhantomSpec(grid_dims=(24, 24), noise_sigma=0.6, seed=2))
    pol = LambdaPolicy("fixed", 0.5)
    b = pick_dataset(grid, CFG, FRAME, pol)
    s = pick_dataset(grid, CFG, FRAME, pol, spatial=NeighborhoodSpec("gaussian", 3, 0.5))

    def filled(res, bin_, mask):
        hit = [any(abs(p.bin_index - bin_) <= 3 for p in extract_peaks(z, min_score=1.0))
               for z in res.indicators]
        return np.mean(np.reshape(hit, grid.dims)[mask])

    for bin_, mask in occ.items():
        assert filled(s, bin_, mask) >= filled(b, bin_, mask)
