import math

import numpy as np
import pytest

import ggmp


def bimodal_dataset(n=16, t=120, seed=0):
    rng = np.random.default_rng(seed)
    ids = [f"p{i}" for i in range(n)]
    x = np.linspace(-2.0, 2.0, n).reshape(-1, 1)
    samples = []
    for i in range(n):
        lo = rng.normal(-2.0, 0.1, t // 2)
        hi = rng.normal(2.0, 0.1, t - t // 2)
        samples.append(np.concatenate([lo, hi]).reshape(-1, 1))
    return ggmp.Dataset(ids, x, samples)


@pytest.fixture(scope="module")
def model():
    return ggmp.fit(bimodal_dataset(), k=2, em_restarts=2, gp_starts=2, seed=1)


def test_fit_recovers_both_tracks(model):
    mix = model.predict(np.array([0.0]))
    assert mix.weights.shape == (2,)
    assert mix.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert sorted(mix.means[:, 0]) == pytest.approx([-2.0, 2.0], abs=0.15)


def test_log_density_and_sampling(model):
    x = np.array([0.5])
    draws = model.sample(x, 4000, seed=3)
    assert draws.shape == (4000, 1)
    # both modes populated
    assert 0.3 < (draws[:, 0] > 0).mean() < 0.7
    ld = model.log_density(x, np.array([2.0]))
    assert math.isfinite(ld)
    assert ld > model.log_density(x, np.array([0.0]))


def test_mixture_density_normalizes(model):
    mix = model.predict(np.array([0.0]))
    grid = np.linspace(-8, 8, 2001)
    dens = np.array([math.exp(mix.log_density(np.array([y]))) for y in grid])
    assert np.trapz(dens, grid) == pytest.approx(1.0, abs=1e-6)


def test_save_load_round_trip(tmp_path, model):
    path = str(tmp_path / "model.json")
    model.save(path)
    loaded = ggmp.load(path)
    x = np.array([1.1])
    y = np.array([-2.0])
    assert loaded.log_density(x, y) == pytest.approx(model.log_density(x, y), abs=1e-10)


def test_csv_round_trip(tmp_path):
    ds = bimodal_dataset(n=5, t=30)
    path = str(tmp_path / "samples.csv")
    ggmp.save_samples_csv(ds, path)
    back = ggmp.load_samples_csv(path)
    assert back.n == 5
    np.testing.assert_allclose(back.block("p2"), ds.block("p2"), atol=1e-12)


def test_split_and_benchmark():
    bench = ggmp.generate_benchmark(n=10, t=25, seed=4, grid_points=64)
    train, test = ggmp.split_train_test(bench, 0.2, seed=0)
    assert train.n == 8 and test.n == 2
    assert bench.block("x0").shape == (25, 1)


def test_energy_distance_identical_is_zero():
    a = np.random.default_rng(1).normal(size=(40, 2))
    assert ggmp.energy_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    b = a + 5.0
    assert ggmp.energy_distance(a, b) > 1.0
