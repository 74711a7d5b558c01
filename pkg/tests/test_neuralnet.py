import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclab.errors import TrainingDivergedError, ValidationError
from qclab.neuralnet import (
    VAE,
    AdamState,
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    Hyper,
    MaxPool2,
    ReLU,
    Sequential,
    Sigmoid,
    Softmax,
    adam_step,
    build_cnn,
    build_mlp,
    cross_entropy,
    kl_term,
    load_model,
    reparameterize,
    save_model,
    train_classifier,
    vae_loss,
)
from qclab.rng import RngStream

from helpers import finite_difference_check


LAYER_CASES = {
    "conv2d": ([Conv2D(3, 3)], (2, 7, 7)),
    "conv2d_stride": ([Conv2D(2, 3, stride=2)], (1, 9, 9)),
    "maxpool": ([MaxPool2()], (2, 6, 6)),
    "batchnorm_image": ([BatchNorm()], (3, 4, 4)),
    "batchnorm_flat": ([BatchNorm()], (5,)),
    "dropout": ([Dropout(0.4)], (10,)),
    "dense": ([Dense(4)], (6,)),
    "dense_from_image": ([Dense(3)], (2, 3, 3)),
    "relu": ([ReLU()], (8,)),
    "sigmoid": ([Sigmoid()], (8,)),
    "softmax": ([Softmax()], (5,)),
}


@pytest.mark.parametrize("case", sorted(LAYER_CASES))
def test_layer_gradients(case):
    layers, shape = LAYER_CASES[case]
    model = Sequential(layers, shape, seed=3, dtype=np.float64)
    x = RngStream(7).normal((4,) + shape)
    assert finite_difference_check(model, x) <= 1e-4


def test_three_layer_toy_gradient():
    model = Sequential([Dense(5), Sigmoid(), Dense(4), ReLU(), Dense(2), Softmax()], (3,), seed=1, dtype=np.float64)
    assert finite_difference_check(model, RngStream(2).normal((6, 3))) <= 1e-4


def test_small_cnn_gradient():
    model = build_cnn(input_shape=(1, 14, 14), filters=(2, 3), kernel=3, dense=5, dropout=0.3, seed=2, dtype=np.float64)
    assert finite_difference_check(model, RngStream(3).random((3, 1, 14, 14))) <= 1e-4


def test_softmax_rows_sum_to_one():
    model = build_mlp(10, hidden=20)
    p = model.predict_proba(RngStream(0).normal((50, 10)) * 10)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)


def test_dropout_zero_matches_eval():
    model = Sequential([Dense(6), Dropout(0.0), ReLU()], (4,), seed=0, dtype=np.float64)
    x = RngStream(1).normal((5, 4))
    np.testing.assert_array_equal(model.forward(x, train=True), model.forward(x, train=False))


def test_zero_input_dense_relu():
    model = Sequential([Dense(7), ReLU()], (4,), seed=0, dtype=np.float64)
    model.layers[0].params["b"][:] = 0
    np.testing.assert_array_equal(model.forward(np.zeros((3, 4))), 0.0)


def test_shape_mismatch_names_layer():
    with pytest.raises(ValidationError, match="conv2d1"):
        Sequential([Conv2D(2, 9)], (1, 5, 5))
    model = build_mlp(4, hidden=3)
    with pytest.raises(ValidationError, match="dense1"):
        model.forward(np.zeros((2, 5)))


def test_cross_entropy_gradient_at_perfect_prediction():
    model = Sequential([Dense(2), Softmax()], (2,), seed=0, dtype=np.float64)
    model.layers[0].params["W"][:] = np.array([[60.0, -60.0], [-60.0, 60.0]]).T
    model.layers[0].params["b"][:] = 0
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    loss, grads = model.loss_and_grads(x, [0, 1])
    assert loss < 1e-12
    assert np.sqrt(sum((g**2).sum() for g in grads.values())) <= 1e-8


def test_loss_scale_doubles_gradients():
    model = Sequential([Dense(4), ReLU(), Dense(2), Softmax()], (3,), seed=4, dtype=np.float64)
    x = RngStream(5).normal((6, 3))
    y = [0, 1, 1, 0, 1, 0]
    _, g1 = model.loss_and_grads(x, y, scale=1.0)
    g1 = {k: v.copy() for k, v in g1.items()}
    _, g2 = model.loss_and_grads(x, y, scale=2.0)
    for k in g1:
        np.testing.assert_allclose(g2[k], 2 * g1[k], rtol=0, atol=1e-12)


def test_softmax_cross_entropy_logit_gradient():
    model = Sequential([Dense(3), Softmax()], (4,), seed=6, dtype=np.float64)
    x = RngStream(6).normal((5, 4))
    y = np.array([0, 2, 1, 1, 0])
    model.loss_and_grads(x, y)
    p = model.forward(x)
    onehot = np.eye(3)[y]
    expected_b = ((p - onehot) / len(y)).sum(axis=0)
    expected_w = x.T @ ((p - onehot) / len(y))
    np.testing.assert_allclose(model.layers[0].grads["b"], expected_b, atol=1e-10)
    np.testing.assert_allclose(model.layers[0].grads["W"], expected_w, atol=1e-10)


def test_batchnorm_train_then_eval_same_statistics():
    bn = BatchNorm(momentum=1.0)
    model = Sequential([bn], (3, 4, 4), dtype=np.float64)
    x = RngStream(8).normal((6, 3, 4, 4)) * 3 + 1
    train_out = model.forward(x, train=True)
    np.testing.assert_allclose(model.forward(x, train=False), train_out, atol=1e-6)


def test_adam_zero_gradient_fixed_point():
    p = {"w": np.array([1.0, -2.0])}
    state = AdamState(lr=0.1)
    adam_step(p, {"w": np.zeros(2)}, state)
    np.testing.assert_array_equal(p["w"], [1.0, -2.0])
    assert state.t == 1


def test_adam_first_step_magnitude():
    g = np.array([0.3, -4.0, 1e-3])
    p = {"w": np.zeros(3)}
    adam_step(p, {"w": g}, AdamState(lr=0.01))
    np.testing.assert_allclose(p["w"], -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-6)


def test_adam_minimizes_parabola():
    p = {"x": np.array([5.0])}
    state = AdamState(lr=0.1)
    for _ in range(500):
        adam_step(p, {"x": 2 * p["x"]}, state)
    assert abs(p["x"][0]) < 1e-2


def test_adam_rejects_nonfinite():
    with pytest.raises(TrainingDivergedError):
        adam_step({"w": np.zeros(2)}, {"w": np.array([np.nan, 0.0])}, AdamState())


def test_xor_mlp():
    x = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 25, dtype=float)
    y = (x[:, 0] != x[:, 1]).astype(int)
    model = build_mlp(2, hidden=700, seed=0)
    res = train_classifier(model, x, y, x[:4], y[:4], Hyper(epochs=200, batch_size=10, lr=1e-2, seed=0))
    assert res.test_accuracy == 1.0


def test_separable_blobs():
    rng = RngStream(11)
    n = 200
    x = np.concatenate([rng.normal((n, 2)) + [3, 3], rng.normal((n, 2)) - [3, 3]])
    y = np.repeat([0, 1], n)
    model = build_mlp(2, hidden=16, seed=1)
    res = train_classifier(model, x, y, x, y, Hyper(epochs=20, batch_size=10, lr=1e-2))
    assert len(res.history) == 20
    assert res.test_accuracy >= 0.99


def test_constant_labels():
    x = RngStream(12).normal((40, 3))
    y = np.ones(40, dtype=int)
    res = train_classifier(build_mlp(3, hidden=8), x, y, x, y, Hyper(epochs=5, batch_size=10, lr=1e-2))
    assert res.test_accuracy == 1.0


def test_training_bit_reproducible():
    x = RngStream(13).normal((60, 1, 14, 14))
    y = (x.mean(axis=(1, 2, 3)) > 0).astype(int)
    hyper = Hyper(epochs=2, batch_size=20, lr=1e-3, seed=4)
    runs = []
    for _ in range(2):
        model = build_cnn(input_shape=(1, 14, 14), filters=(2, 3), kernel=3, dense=8, seed=5)
        res = train_classifier(model, x, y, x, y, hyper)
        runs.append((res.history, model.state()))
    assert runs[0][0] == runs[1][0]
    for k in runs[0][1]:
        np.testing.assert_array_equal(runs[0][1][k], runs[1][1][k])


def test_divergence_reports_history():
    model = Sequential([Dense(2), Softmax()], (2,), seed=0, dtype=np.float64)
    x = np.array([[np.nan, 0.0]] * 4)
    with pytest.raises(TrainingDivergedError) as info:
        train_classifier(model, x, [0, 1, 0, 1], hyper=Hyper(epochs=2, batch_size=2))
    assert info.value.history == []


def test_model_round_trip(tmp_path):
    model = build_cnn(input_shape=(1, 14, 14), filters=(2, 3), kernel=3, dense=8, seed=5)
    x = RngStream(1).random((3, 1, 14, 14))
    model.forward(x, train=True)  # moves the batchnorm running statistics
    save_model(model, tmp_path)
    back = load_model(tmp_path)
    np.testing.assert_array_equal(back.forward(x), model.forward(x))


def test_cross_entropy_value():
    assert cross_entropy(np.array([[0.5, 0.5]]), [1]) == pytest.approx(np.log(2))


def test_kl_term_examples():
    assert kl_term([0.0, 0.0], [0.0, 0.0])[0] == 0.0
    assert kl_term([1.0, 1.0], [0.0, 0.0])[0] == pytest.approx(1.0)


def test_bce_perfect_binary_reconstruction():
    t = (RngStream(0).random((3, 16)) > 0.5).astype(float)
    loss = vae_loss(t, t, np.zeros((3, 2)), np.zeros((3, 2)))
    assert loss.recon < 1e-9 and loss.kl == 0.0


def test_vae_loss_rejects_out_of_range_target():
    with pytest.raises(ValidationError):
        vae_loss(np.full((1, 4), 0.5), np.array([[0.0, 1.2, 0.0, 0.0]]), np.zeros((1, 2)), np.zeros((1, 2)))


def test_reparameterize_examples():
    mu = np.array([[0.3, -1.0]])
    np.testing.assert_array_equal(reparameterize(mu, np.zeros((1, 2)), np.zeros((1, 2))), mu)
    np.testing.assert_allclose(reparameterize(mu, np.zeros((1, 2)), np.full((1, 2), 1.5)), mu + 1.5)
    with pytest.raises(ValidationError):
        reparameterize(mu, np.zeros((1, 3)), np.zeros((1, 2)))


def test_reparameterize_monte_carlo_variance():
    logvar = np.log(np.array([0.25, 4.0]))
    z = reparameterize(np.zeros((100_000, 2)), np.tile(logvar, (100_000, 1)), RngStream(3).normal((100_000, 2)))
    np.testing.assert_allclose(z.var(axis=0), np.exp(logvar), rtol=0.02)


def test_vae_gradients_match_finite_differences():
    vae = VAE(n_pixels=6, hidden=4, seed=2, dtype="float64")
    # nonzero biases keep every relu input away from its kink at 0
    for i, (key, p) in enumerate(vae.params().items()):
        if key.endswith(".b"):
            p[:] = RngStream(9).spawn(i).uniform(0.05, 0.3, p.shape)
    x = RngStream(4).random((3, 6))
    noise = RngStream(5).normal((3, 2))
    _, grads = vae.step_grads(x, noise)
    grads = {k: g.copy() for k, g in grads.items()}
    params = vae.params()
    h = 1e-6
    worst = 0.0
    for key, p in params.items():
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            fp = vae.step_grads(x, noise)[0].total
            flat[i] = old - h
            fm = vae.step_grads(x, noise)[0].total
            flat[i] = old
            num = (fp - fm) / (2 * h)
            a = grads[key].reshape(-1)[i]
            worst = max(worst, abs(a - num) / max(abs(a) + abs(num), 1e-6))
    assert worst <= 1e-4


def test_vae_untrained_latent_raises():
    with pytest.raises(ValidationError):
        VAE(n_pixels=4, hidden=3).latent(np.zeros((1, 4)))


def test_vae_fit_reduces_loss_and_round_trips(tmp_path):
    rng = RngStream(6)
    a = np.clip(rng.random((80, 16)) * 0.2, 0, 1)
    a[:40, :8] += 0.7
    a[40:, 8:] += 0.7
    vae = VAE(n_pixels=16, hidden=12, seed=1).fit(a, epochs=40, batch_size=20, lr=1e-2)
    assert vae.history[-1]["loss"] < vae.history[0]["loss"]
    vae.save(tmp_path)
    back = VAE.load(tmp_path)
    np.testing.assert_array_equal(back.latent(a, use_mean=True), vae.latent(a, use_mean=True))
    z1 = vae.latent(a, use_mean=True)
    np.testing.assert_array_equal(z1, vae.latent(a, use_mean=True))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), scale=st.floats(0.1, 100))
def test_softmax_rows_property(seed, scale):
    x = RngStream(seed).normal((8, 5)) * scale
    p = Softmax().forward(x, train=False)
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
