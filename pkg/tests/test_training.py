"""Training loop, loss gradients, gradient checking, evaluation."""

import numpy as np
import pytest

from pcmanip.errors import DivergedLossError, EmptySetError
from pcmanip.nn.network import ModelSpec, Network, detector_spec
from pcmanip.nn.training import (
    EpochStats,
    Metrics,
    TrainConfig,
    bce_loss,
    evaluate,
    gradient_check,
    train,
)


def toy_separable(count=200, seed=0):
    """Single scalar feature; label is 1 exactly when the feature is > 0."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((count, 1)).astype(np.float32)
    y = (X[:, 0] > 0).astype(np.float32)
    return X, y


def toy_spec() -> ModelSpec:
    return ModelSpec(
        input_shape=(1,),
        layers=(("dense", 8), ("relu",), ("dense", 1), ("sigmoid",)),
    )


class TestBceGradient:
    def test_logit_gradient_at_half(self):
        # Fused sigmoid+BCE: dL/dz = p - y; at p=0.5, y=1 that is -0.5.
        # Cross-checked against central differences through the raw loss.
        def loss_at(z):
            p = 1.0 / (1.0 + np.exp(-z))
            return bce_loss(np.array([p]), np.array([1.0]))

        eps = 1e-6
        fd = (loss_at(eps) - loss_at(-eps)) / (2 * eps)
        assert fd == pytest.approx(-0.5, abs=1e-9)

    def test_zero_learning_signal(self):
        net = Network(toy_spec(), seed=0)
        X = np.random.default_rng(0).standard_normal((4, 1)).astype(np.float32)
        logits = net.forward_logits(X)
        p = net.layers[-1].forward(logits)
        net.backward_from_logits(p - p)  # labels exactly equal predictions
        for _, _, g in net.gradients():
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_bce_clipping(self):
        assert np.isfinite(bce_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0])))
        assert bce_loss(np.array([1.0]), np.array([1.0])) == pytest.approx(0.0, abs=1e-9)


class TestGradientCheck:
    def test_full_3d_architecture(self):
        net = Network(detector_spec("det3d", 5), seed=11, dtype=np.float64)
        rng = np.random.default_rng(2)
        X = rng.standard_normal((4, 2, 5, 5, 5))
        y = np.array([0.0, 1.0, 1.0, 0.0])
        assert gradient_check(net, X, y, eps=1e-3) <= 1e-3

    def test_full_2d_architecture(self):
        net = Network(detector_spec("error2d", 6), seed=5, dtype=np.float64)
        rng = np.random.default_rng(3)
        X = rng.standard_normal((4, 1, 6, 6))
        y = np.array([1.0, 0.0, 1.0, 0.0])
        assert gradient_check(net, X, y, eps=1e-3) <= 1e-3

    def test_linear_model_tighter_bound(self):
        spec = ModelSpec(input_shape=(6,), layers=(("dense", 1), ("sigmoid",)))
        net = Network(spec, seed=1, dtype=np.float64)
        rng = np.random.default_rng(4)
        X = rng.standard_normal((8, 6))
        y = (rng.uniform(size=8) > 0.5).astype(np.float64)
        assert gradient_check(net, X, y, eps=1e-3) <= 1e-6

    def test_requires_float64(self):
        net = Network(toy_spec(), seed=0)
        X, y = toy_separable(8)
        with pytest.raises(ValueError):
            gradient_check(net, X, y)


class TestTrain:
    def test_separable_toy_converges(self):
        X, y = toy_separable()
        net = Network(toy_spec(), seed=1)
        history = train(net, X, y, TrainConfig(epochs=20, batch_size=16,
                                               learning_rate=0.01, seed=2))
        assert history[-1].accuracy >= 0.99
        assert len(history) == 20
        assert isinstance(history[0], EpochStats)

    def test_loss_mostly_monotone(self):
        X, y = toy_separable()
        net = Network(toy_spec(), seed=1)
        history = train(net, X, y, TrainConfig(epochs=15, batch_size=16,
                                               learning_rate=0.01, seed=2))
        losses = [h.loss for h in history]
        increases = sum(b > a for a, b in zip(losses, losses[1:]))
        assert increases <= 2

    def test_zero_epochs_leaves_model_unchanged(self):
        X, y = toy_separable()
        net = Network(toy_spec(), seed=3)
        before = [p.copy() for _, _, p in net.parameters()]
        history = train(net, X, y, TrainConfig(epochs=0))
        assert history == []
        for (_, _, after), prev in zip(net.parameters(), before):
            np.testing.assert_array_equal(after, prev)

    def test_same_seed_identical_weights(self):
        X, y = toy_separable()
        cfg = TrainConfig(epochs=5, batch_size=16, learning_rate=0.01, seed=7)
        nets = []
        for _ in range(2):
            net = Network(toy_spec(), seed=4)
            train(net, X, y, cfg)
            nets.append(net)
        for (_, _, a), (_, _, b) in zip(nets[0].parameters(), nets[1].parameters()):
            np.testing.assert_array_equal(a, b)

    def test_shuffle_seed_changes_trajectory(self):
        X, y = toy_separable()
        finals = []
        for seed in (1, 2):
            net = Network(toy_spec(), seed=4)
            train(net, X, y, TrainConfig(epochs=3, batch_size=16,
                                         learning_rate=0.01, seed=seed))
            finals.append(next(iter(net.parameters()))[2].copy())
        assert not np.array_equal(finals[0], finals[1])

    def test_diverged_loss_aborts(self):
        X, y = toy_separable(32)
        net = Network(toy_spec(), seed=0)
        bad = net.layers[0].params["w"].copy()
        bad[0, 0] = np.nan
        net.set_param(0, "w", bad)
        with pytest.raises(DivergedLossError) as exc:
            train(net, X, y, TrainConfig(epochs=2))
        assert exc.value.epoch == 0

    def test_empty_training_set(self):
        net = Network(toy_spec(), seed=0)
        with pytest.raises(EmptySetError):
            train(net, np.zeros((0, 1), dtype=np.float32), np.zeros(0),
                  TrainConfig(epochs=1))


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(beta1=1.0)
        with pytest.raises(ValueError):
            TrainConfig(epsilon=0.0)

    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.epochs == 30
        assert cfg.batch_size == 32
        assert cfg.learning_rate == pytest.approx(1e-3)


class TestEvaluate:
    def _constant_half_net(self):
        spec = ModelSpec(input_shape=(3,), layers=(("dense", 1), ("sigmoid",)))
        net = Network(spec, seed=0)
        net.set_param(0, "w", np.zeros((3, 1), dtype=np.float32))
        net.set_param(0, "b", np.zeros(1, dtype=np.float32))
        return net

    def test_ties_count_as_clean(self):
        net = self._constant_half_net()
        X = np.random.default_rng(0).standard_normal((10, 3)).astype(np.float32)
        y = np.array([0, 1] * 5, dtype=np.float32)
        m = evaluate(net, X, y)
        assert m.accuracy == pytest.approx(0.5)
        assert m.tp == 0 and m.fp == 0
        assert m.tn == 5 and m.fn == 5

    def test_perfect_predictions(self):
        spec = ModelSpec(input_shape=(1,), layers=(("dense", 1), ("sigmoid",)))
        net = Network(spec, seed=0)
        net.set_param(0, "w", np.array([[30.0]], dtype=np.float32))
        net.set_param(0, "b", np.zeros(1, dtype=np.float32))
        X = np.array([[-2.0], [-1.0], [1.0], [2.0]], dtype=np.float32)
        y = np.array([0, 0, 1, 1], dtype=np.float32)
        m = evaluate(net, X, y)
        assert m.accuracy == 1.0
        assert m.detection_rate == 100.0
        assert (m.tp, m.fp, m.tn, m.fn) == (2, 0, 2, 0)

    def test_counts_sum_to_total(self):
        net = Network(toy_spec(), seed=2)
        X, y = toy_separable(37, seed=5)
        m = evaluate(net, X, y)
        assert m.tp + m.fp + m.tn + m.fn == 37
        assert 0.0 <= m.accuracy <= 1.0

    def test_empty_set(self):
        net = self._constant_half_net()
        with pytest.raises(EmptySetError):
            evaluate(net, np.zeros((0, 3), dtype=np.float32), np.zeros(0))

    def test_metrics_detection_rate(self):
        m = Metrics(accuracy=0.9475, loss=0.1, tp=1, fp=1, tn=1, fn=1, threshold=0.5)
        assert m.detection_rate == pytest.approx(94.75)
