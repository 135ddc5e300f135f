"""Training loop, Adam optimizer, BCE loss, evaluation, gradient check.

The loss gradient is taken w.r.t. the logits (sigmoid and BCE fused), so
dL/dz = (p - y) / batch and the backward pass never multiplies the two
near-cancelling sigmoid terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import Network
from ..errors import DivergedLossError, EmptySetError


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0, batch_size >= 1, learning_rate > 0 required")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.epsilon > 0):
            raise ValueError("bad Adam hyperparameters")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass(frozen=True)
class Metrics:
    """accuracy is the fraction (tp+tn)/total; detection_rate is the same
    number in percent."""

    accuracy: float
    loss: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    @property
    def detection_rate(self) -> float:
        return 100.0 * self.accuracy


class Adam:
    def __init__(self, net: Network, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {key: np.zeros_like(p) for key, p in self._named(net)}
        self.v = {key: np.zeros_like(p) for key, p in self._named(net)}

    @staticmethod
    def _named(net: Network):
        return [((i, name), p) for i, name, p in net.parameters()]

    def step(self, net: Network) -> None:
        cfg = self.cfg
        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for i, name, g in net.gradients():
            key = (i, name)
            m = self.m[key]
            v = self.v[key]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            p = net.layers[i].params[name]
            p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)


def bce_loss(p: np.ndarray, y: np.ndarray, eps: float = 1e-12) -> float:
    """Mean binary cross-entropy; probabilities clipped away from {0, 1}."""
    pc = np.clip(np.asarray(p, dtype=np.float64).ravel(), eps, 1.0 - eps)
    yv = np.asarray(y, dtype=np.float64).ravel()
    return float(-np.mean(yv * np.log(pc) + (1.0 - yv) * np.log1p(-pc)))


def train(net: Network, X: np.ndarray, y: np.ndarray, cfg: TrainConfig):
    """Mini-batch Adam training; returns per-epoch EpochStats.

    Deterministic given (network seed, data, cfg.seed): batches are drawn
    by a per-run permutation stream and all arithmetic is single-threaded.
    Raises DivergedLossError as soon as a batch loss goes non-finite.
    """
    count = X.shape[0]
    if count == 0:
        raise EmptySetError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(net, cfg)
    yb = np.asarray(y, dtype=net.dtype).reshape(-1, 1)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(count)
        total = 0.0
        for start in range(0, count, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = X[idx]
            tb = yb[idx]
            logits = net.forward_logits(xb)
            p = net.layers[-1].forward(logits)
            loss = bce_loss(p, tb)
            if not np.isfinite(loss):
                raise DivergedLossError(epoch)
            total += loss * len(idx)
            net.backward_from_logits((p - tb) / len(idx))
            opt.step(net)
        m = evaluate(net, X, y)
        history.append(EpochStats(epoch=epoch, loss=total / count, accuracy=m.accuracy))
    return history


def evaluate(net: Network, X: np.ndarray, y: np.ndarray,
             threshold: float = 0.5, batch_size: int = 256) -> Metrics:
    """Confusion counts and accuracy at the given threshold.

    A prediction exactly at the threshold counts as negative (clean).
    """
    count = X.shape[0]
    if count == 0:
        raise EmptySetError("empty evaluation set")
    yv = np.asarray(y).ravel().astype(bool)
    preds = np.empty(count, dtype=bool)
    loss = 0.0
    for start in range(0, count, batch_size):
        p = net.forward(X[start:start + batch_size]).ravel()
        preds[start:start + len(p)] = p > threshold
        loss += bce_loss(p, yv[start:start + len(p)]) * len(p)
    tp = int(np.sum(preds & yv))
    fp = int(np.sum(preds & ~yv))
    tn = int(np.sum(~preds & ~yv))
    fn = int(np.sum(~preds & yv))
    return Metrics(
        accuracy=(tp + tn) / count,
        loss=loss / count,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        threshold=threshold,
    )


def _loss_at(net: Network, X: np.ndarray, y: np.ndarray) -> float:
    return bce_loss(net.forward(X, check_finite=False), y)


def gradient_check(net: Network, X: np.ndarray, y: np.ndarray,
                   eps: float = 1e-3, max_entries_per_param: int = 64):
    """Max relative error between analytic and central-difference gradients.

    The network must be in float64 mode.  For large parameter tensors a
    deterministic stride of entries is probed instead of every entry.
    """
    if net.dtype != np.float64:
        raise ValueError("gradient_check requires a float64 network")
    Xd = np.ascontiguousarray(X, dtype=np.float64)
    yd = np.asarray(y, dtype=np.float64).reshape(-1, 1)

    logits = net.forward_logits(Xd)
    p = net.layers[-1].forward(logits)
    net.backward_from_logits((p - yd) / len(yd))

    worst = 0.0
    for i, name, param in net.parameters():
        grad = net.layers[i].grads[name]
        flat_p = param.ravel()
        flat_g = grad.ravel()
        stride = max(1, flat_p.size // max_entries_per_param)
        for k in range(0, flat_p.size, stride):
            orig = flat_p[k]
            flat_p[k] = orig + eps
            hi = _loss_at(net, Xd, yd)
            flat_p[k] = orig - eps
            lo = _loss_at(net, Xd, yd)
            flat_p[k] = orig
            fd = (hi - lo) / (2.0 * eps)
            denom = max(abs(fd), abs(flat_g[k]), 1e-8)
            worst = max(worst, abs(fd - flat_g[k]) / denom)
    return worst
