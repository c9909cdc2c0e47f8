import math

import numpy as np
import pytest

import warpski


def se_model(noise=0.5, warp=None, counts=None):
    comp = {
        "name": "f",
        "kernel": {"type": "se", "amplitude": 1.5, "lengthscale": 0.4},
        "warp": warp or {"type": "identity"},
    }
    if counts:
        comp["grid"] = {"counts": counts}
    return warpski.model({"components": [comp], "noise_std": noise})


def points(n, seed, lo=-1.2, hi=0.75):
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, 1))


def test_kernel_and_warp_values():
    k = warpski.Kernel.squared_exponential(1.5, 0.4)
    assert k(0.0) == pytest.approx(2.25)
    assert k(0.4) == pytest.approx(2.25 * math.exp(-0.5))
    w = warpski.Warp1D.polynomial([2.0, 0.0, 1.0], -2.0, 2.0)
    assert w.forward(1.0) == pytest.approx(3.0)
    assert w.inverse(3.0) == pytest.approx(1.0)
    assert warpski.phase_from_events([0.0, 1.0, 2.0]).forward(1.5) == pytest.approx(3 * math.pi)


def test_structured_products_match_numpy():
    rng = np.random.default_rng(1)
    col = np.exp(-0.5 * (np.arange(50) / 7.0) ** 2)
    T = col[np.abs(np.subtract.outer(np.arange(50), np.arange(50)))]
    v = rng.standard_normal(50)
    np.testing.assert_allclose(warpski.toeplitz_matvec(col, v), T @ v, atol=1e-10)
    A, B = rng.standard_normal((3, 3)), rng.standard_normal((4, 4))
    x = rng.standard_normal(12)
    np.testing.assert_allclose(warpski.kron_matvec([A, B], x), np.kron(A, B) @ x, atol=1e-12)


def test_interpolation_rows_sum_to_one():
    axis = np.linspace(0.0, 1.0, 20)
    W = warpski.interpolation_matrix([axis], points(30, 2, 0.2, 0.8))
    assert W.shape == (30, 20)
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-12)
    assert (np.count_nonzero(W, axis=1) <= 4).all()


def test_krylov_against_dense():
    rng = np.random.default_rng(3)
    t = np.sort(rng.uniform(0.0, 4.0, 80))
    K = 1.2**2 * np.exp(-0.5 * ((t[:, None] - t[None, :]) / 0.25) ** 2) + 0.1 * np.eye(80)
    y = rng.standard_normal(80)
    x, iters, ok = warpski.cg_solve(K, y, 1e-10)
    assert ok and iters <= 80
    np.testing.assert_allclose(x, np.linalg.solve(K, y), rtol=1e-7)
    est = np.mean([warpski.slq_logdet(K, 20, 30, s) for s in range(10)])
    assert est == pytest.approx(np.linalg.slogdet(K)[1], rel=2e-2)


def test_nlml_and_separation():
    warp = {"type": "polynomial", "coefficients": [2.0, 0.0, 1.0], "domain": [-2.0, 1.5]}
    m = se_model(warp=warp, counts=[800])
    X = points(300, 4)
    latent, y, comps = warpski.sample_prior(m, X, 5)
    assert len(comps) == 1 and y.shape == (300,)
    exact, grad = warpski.exact_nlml(m, X, y)
    approx, agrad = warpski.approx_nlml(m, X, y, probes=30, cg_tolerance=1e-8)
    assert approx == pytest.approx(exact, rel=2e-2)
    assert agrad.shape == grad.shape == (3,)
    means, iters, ok = warpski.separate(m, X, y)
    assert ok
    K = m.dense_kernel(X)
    ref = (K - 0.25 * np.eye(300)) @ np.linalg.solve(K, y)
    assert np.linalg.norm(means["f"] - ref) / np.linalg.norm(ref) < 5e-2


def test_fit_recovers_noise_level():
    m = warpski.model({"components": [], "noise_std": 1.0})
    X = points(1000, 6)
    y = 0.6 * np.random.default_rng(7).standard_normal(1000)
    fitted, info = warpski.fit(m, X, y)
    assert fitted.noise_std ** 2 == pytest.approx(np.mean(y ** 2), rel=5e-2)
    assert "fitted" in info


def test_experiment_and_errors(tmp_path):
    cfg = warpski.two_source_config(1000, 250.0)
    cfg["learn"] = False
    report = warpski.run_experiment("separation1d", cfg, str(tmp_path))
    assert report["metrics"]["fetal.snr_improvement_db"] > 10.0
    assert (tmp_path / "report.csv").exists()
    cfg["n"] = 0
    with pytest.raises(warpski.ConfigError, match="n"):
        warpski.run_experiment("separation1d", cfg)
    with pytest.raises(ValueError):
        warpski.Kernel.squared_exponential(-1.0, 1.0)


def test_validate_subset():
    results = warpski.validate("kernels.")
    assert results and all(r["passed"] for r in results)
