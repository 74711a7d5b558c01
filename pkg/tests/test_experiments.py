import math
import warnings

import numpy as np
import pytest

from qclab.dataset import LabeledSet, make_split
from qclab.errors import NoCrossingError, NumericalError, ValidationError
from qclab.experiments import (
    ActivationCurve,
    ConfusionCurve,
    activation_curve,
    activation_midpoint,
    best_linear_split,
    confusion_labels,
    confusion_scan,
    critical_region,
    detect_anomalies,
    find_w_peak,
    kl_curve,
    latent_scan,
    mahalanobis,
    mahalanobis_fit,
    mosaic,
    trial_points,
    vae_cluster,
)
from qclab.neuralnet import VAE, Hyper, build_mlp
from qclab.rng import RngStream


def phase_set(lambdas, per_lambda=20, seed=0, dim=4, lam_c=0.5):
    """Synthetic probability vectors whose pattern flips at ``lam_c``."""
    rng = RngStream(seed)
    lam = np.repeat(np.asarray(lambdas, float), per_lambda)
    base = np.where((lam >= lam_c)[:, None], [0.1, 0.4, 0.1, 0.4], [0.4, 0.1, 0.4, 0.1])[:, :dim]
    x = base + 0.02 * rng.random((len(lam), dim))
    x /= x.sum(axis=1, keepdims=True)
    n = len(lam)
    z = np.zeros(n)
    return LabeledSet(x, -np.ones(n, np.int64), lam, np.zeros(n, np.int64), z, "chain", make_split(n, seed))


def curve(lambdas, p2):
    lambdas = np.asarray(lambdas, float)
    return ActivationCurve(lambdas, np.asarray(p2, float), np.zeros(len(lambdas)), np.ones(len(lambdas)))


def test_zero_init_final_layer_gives_half():
    model = build_mlp(4, hidden=8, seed=1, dtype=np.float64)
    model.layers[-2].params["W"][:] = 0.0
    data = phase_set([0.0, 0.3], per_lambda=5)
    c = activation_curve(model, data)
    np.testing.assert_array_equal(c.p2, 0.5)
    np.testing.assert_array_equal(c.lambdas, [0.0, 0.3])
    assert c.counts.tolist() == [5, 5]


def test_activation_curve_missing_lambda():
    model = build_mlp(4, hidden=8)
    with pytest.raises(ValidationError, match="lambda=0.2"):
        activation_curve(model, {0.0: phase_set([0.0], 3)}, lambdas=[0.0, 0.2])


def test_step_curve_gives_zero_width_region():
    r = critical_region(curve([0.0, 0.1, 0.2, 0.3], [0.0, 0.0, 1.0, 1.0]))
    assert r.width == 0.0 and r.lo == pytest.approx(0.15)
    assert not (r.open_lo or r.open_hi)


def test_critical_region_uncertain_band_and_open_sides():
    r = critical_region(curve([0.0, 0.1, 0.2, 0.3, 0.4], [0.02, 0.4, 0.6, 0.95, 0.99]))
    assert (r.lo, r.hi) == (0.1, 0.2)
    assert r.contains(0.15) and not r.contains(0.3) and r.contains(0.25, pad=0.05)
    r = critical_region(curve([0.0, 0.1, 0.2], [0.5, 0.6, 0.95]))
    assert r.open_lo and not r.open_hi and r.lo == 0.0
    with pytest.raises(ValidationError):
        critical_region(curve([0.0, 0.1], [0.0, 1.0]), confidence=0.4)


def test_activation_midpoint():
    assert activation_midpoint(curve([0.0, 0.1, 0.2], [0.0, 0.25, 1.0])) == pytest.approx(0.1 + 0.1 / 3)
    with pytest.raises(NumericalError):
        activation_midpoint(curve([0.0, 0.1], [0.1, 0.2]))


def test_w_peak_middle_point():
    p = find_w_peak([1.0, 0.8, 0.9, 0.8, 1.0])
    assert p.index == 2 and p.has_peak and p.lam == 2.0


def test_w_peak_monotone_has_no_peak():
    assert not find_w_peak([1.0, 0.6, 0.7, 0.8, 0.9, 1.0]).has_peak
    with pytest.raises(ValidationError):
        find_w_peak([1.0, 0.9, 1.0, 1.0])


def test_w_peak_skips_missing_trials():
    p = find_w_peak([1.0, 0.7, 0.8, math.nan, 0.95, 0.8, 0.7, 1.0], trials=np.arange(8) * 0.1, window=1)
    assert p.index == 4 and p.lam == pytest.approx(0.4)


def test_trial_points_endpoints_are_single_class():
    lam = np.array([0.0, 0.1, 0.2, 0.4])
    t = trial_points(np.repeat(lam, 3))
    np.testing.assert_allclose(t, [-0.05, 0.05, 0.15, 0.3, 0.5])
    assert np.all(confusion_labels(lam, t[0]) == 1)
    assert np.all(confusion_labels(lam, t[-1]) == 0)
    assert confusion_labels(lam, t[2]).tolist() == [0, 0, 1, 1]


def test_confusion_scan_w_shape():
    data = phase_set(np.round(np.arange(0, 1.01, 0.1), 10), per_lambda=12, seed=3)
    hyper = Hyper(epochs=40, batch_size=20, lr=1e-2, seed=2)
    res = confusion_scan(data, lambda s: build_mlp(4, hidden=16, seed=s), hyper)
    assert len(res.trials) == 12
    assert res.accuracy[0] >= 0.98 and res.accuracy[-1] >= 0.98
    peak = find_w_peak(res)
    assert peak.has_peak and abs(peak.lam - 0.5) <= 0.1
    again = confusion_scan(data, lambda s: build_mlp(4, hidden=16, seed=s), hyper, trials=res.trials[:2])
    np.testing.assert_array_equal(again.accuracy, res.accuracy[:2])


def test_linear_split_separable_and_degenerate():
    rng = RngStream(0)
    z = np.concatenate([rng.normal((50, 2)) + [4, 4], rng.normal((50, 2)) - [4, 4]])
    y = np.repeat([0, 1], 50)
    s = best_linear_split(z, y)
    assert s.score == 1.0 and not s.degenerate
    d = np.array(s.direction)
    pred = z @ d > s.threshold
    assert np.mean(pred == (y == 1)) in (0.0, 1.0)
    single = best_linear_split(z, np.zeros(100))
    assert single.degenerate and single.score == 1.0
    with pytest.raises(ValidationError):
        best_linear_split(z, np.arange(100) % 3)


@pytest.fixture(scope="module")
def small_vae():
    rng = RngStream(9)
    x = np.clip(rng.random((120, 64)) * np.repeat([[0.2], [0.9]], 60, axis=0), 0, 1)
    return VAE(n_pixels=64, hidden=16, seed=4).fit(x, epochs=5, batch_size=20), x


def test_vae_cluster_mean_is_deterministic(small_vae):
    vae, x = small_vae
    n = len(x)
    s = LabeledSet(x.reshape(n, 8, 8), np.repeat([0, 1], 60), np.zeros(n), np.zeros(n, np.int64), np.zeros(n), "billiard")
    c1, sep1 = vae_cluster(vae, s, use_mean=True)
    c2, sep2 = vae_cluster(vae, s, use_mean=True)
    np.testing.assert_array_equal(c1.z, c2.z)
    assert sep1 == sep2 and 0.5 <= sep1.score <= 1.0
    assert c1.rows()[0][2] == "regular"
    with pytest.raises(ValidationError):
        vae_cluster(VAE(n_pixels=64, hidden=4), s)


def test_anomaly_centroid_and_far_point():
    rng = RngStream(5)
    ref = rng.normal((500, 2)) @ np.array([[3.0, 0.0], [1.0, 0.5]])
    mu, cov = mahalanobis_fit(ref)
    w, v = np.linalg.eigh(cov)
    far = mu + 10 * math.sqrt(w[-1]) * v[:, -1]
    res = detect_anomalies(None, ref, np.stack([mu, far]))
    assert res.flags.tolist() == [False, True]
    assert res.distance[0] == pytest.approx(0.0, abs=1e-12)
    assert res.distance[1] == pytest.approx(10.0, rel=1e-9)
    with pytest.raises(ValidationError):
        detect_anomalies(None, ref[:10], ref)


def test_singular_covariance_gets_ridge():
    z = np.stack([np.arange(60.0), 2 * np.arange(60.0)], axis=1)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mu, cov = mahalanobis_fit(z, ridge=1e-3)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    assert np.all(np.isfinite(mahalanobis(z, mu, cov)))


def test_latent_scan_grid(small_vae):
    vae, _ = small_vae
    tiles = latent_scan(vae, np.linspace(-2, 2, 5), np.linspace(-2, 2, 5))
    assert tiles.shape == (25, 8, 8)
    assert np.all(tiles.max(axis=(1, 2)) <= 1.0) and tiles.min() >= 0.0
    # row-major: z2 picks the row
    np.testing.assert_allclose(tiles[1], vae.decode(np.array([[-1.0, -2.0]])).reshape(8, 8))
    m = mosaic(tiles, 5)
    assert m.shape == (5 * 9 - 1, 5 * 9 - 1)
    np.testing.assert_array_equal(m[9:17, 0:8], tiles[5])
    assert np.all(m[8, :] == 0)


def test_kl_curve_crossing():
    rng = np.random.default_rng(0)

    def poisson():
        return np.cumsum(rng.exponential(size=600))

    def goe():
        a = rng.normal(size=(400, 400))
        return np.linalg.eigvalsh(a + a.T)[100:300]

    spectra = {0.0: [poisson(), poisson()], 0.5: [poisson(), goe(), goe()], 1.0: [goe(), goe(), goe()]}
    k = kl_curve(spectra)
    assert k.kl_poisson[0] < k.kl_wd[0] and k.kl_poisson[-1] > k.kl_wd[-1]
    assert 0.0 < k.critical_point < 1.0
    assert k.r_mean[0] < 0.43 and k.r_mean[-1] > 0.5
    flat = {0.0: spectra[0.0], 0.1: spectra[0.0], 0.2: spectra[0.0]}
    with pytest.raises(NoCrossingError):
        kl_curve(flat).critical_point


def test_confusion_curve_rows():
    c = ConfusionCurve(np.array([0.0, 0.1]), np.array([1.0, math.nan]), np.array([0.0]))
    assert c.rows()[0] == (0.0, 1.0, 0.0)
