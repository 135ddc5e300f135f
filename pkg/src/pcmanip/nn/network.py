"""Model specification, network assembly and checkpointing.

A ModelSpec is a declarative layer list plus the per-sample input shape.
Shape compatibility is checked at build time by symbolically walking the
spec, so a malformed architecture fails before any data is touched.
The final layer must be sigmoid with output shape (batch, 1).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import layers as L
from ..errors import ChecksumMismatchError, ShapeMismatchError, SpecMismatchError

_CKPT_MAGIC = b"PCMN"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    input_shape: tuple
    layers: tuple

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(
            self, "layers", tuple(tuple(layer) for layer in self.layers)
        )
        walk_shapes(self)

    def to_json(self) -> dict:
        return {
            "input_shape": list(self.input_shape),
            "layers": [list(layer) for layer in self.layers],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        return cls(input_shape=tuple(obj["input_shape"]), layers=tuple(obj["layers"]))


def walk_shapes(spec: ModelSpec) -> list:
    """Per-sample shape after every layer; raises ShapeMismatchError on an
    incompatible sequence and enforces the sigmoid(1) ending."""
    if not spec.layers:
        raise ShapeMismatchError("model needs at least one layer")
    shape = spec.input_shape
    trace = [shape]
    for layer in spec.layers:
        op = layer[0]
        if op == "conv3d":
            _, k, ch = layer
            if len(shape) != 4:
                raise ShapeMismatchError(f"conv3d needs (C, D, H, W), got {shape}")
            c, d, h, w = shape
            if min(d, h, w) < k:
                raise ShapeMismatchError(f"kernel {k} exceeds input {shape}")
            shape = (ch, d - k + 1, h - k + 1, w - k + 1)
        elif op == "conv2d":
            _, k, ch = layer
            if len(shape) != 3:
                raise ShapeMismatchError(f"conv2d needs (C, H, W), got {shape}")
            c, h, w = shape
            if min(h, w) < k:
                raise ShapeMismatchError(f"kernel {k} exceeds input {shape}")
            shape = (ch, h - k + 1, w - k + 1)
        elif op in ("relu", "sigmoid"):
            pass
        elif op == "gmaxpool":
            if len(shape) < 2:
                raise ShapeMismatchError(f"gmaxpool needs (C, spatial...), got {shape}")
            shape = (shape[0],)
        elif op == "flatten":
            shape = (math.prod(shape),)
        elif op == "dense":
            _, units = layer
            if len(shape) != 1:
                raise ShapeMismatchError(f"dense needs a flat input, got {shape}")
            shape = (units,)
        else:
            raise ShapeMismatchError(f"unknown layer op {op!r}")
        trace.append(shape)
    if shape != (1,) or spec.layers[-1][0] != "sigmoid":
        raise ShapeMismatchError(
            f"model must end in sigmoid with output (batch, 1); got {spec.layers[-1][0]!r} -> {shape}"
        )
    return trace


def detector_spec(kind: str, n: int, channels: int | None = None, kernel: int = 3,
                  hidden: int = 32) -> ModelSpec:
    """Default detector architecture for a feature kind and matrix order.

    det3d: conv3d(kernel, 16) -> relu -> global max pool -> flatten ->
    dense(hidden) -> relu -> dense(1) -> sigmoid.  The pooling stage makes
    the head an existence test over window positions, which is what the
    attack signatures demand (a handful of extreme cells at an arbitrary
    p); a flatten-into-dense head has to relearn the same detector at
    every position and overfits long before it gets there.

    The 2-D kinds mirror the stack with conv2d(kernel, 8) and no pooling;
    at n <= 9 the flattened conv map is small enough for a dense head.
    """
    if kind == "det3d":
        input_shape = (2, n, n, n)
        head = (("conv3d", kernel, channels or 16), ("relu",), ("gmaxpool",))
    elif kind in ("error2d", "raw2d"):
        input_shape = (1, n, n)
        head = (("conv2d", kernel, channels or 8), ("relu",))
    else:
        raise ValueError(f"unknown feature kind {kind!r}")
    return ModelSpec(
        input_shape=input_shape,
        layers=head + (
            ("flatten",),
            ("dense", hidden),
            ("relu",),
            ("dense", 1),
            ("sigmoid",),
        ),
    )


class Network:
    """A ModelSpec instantiated with seeded He-uniform weights.

    ``dtype`` is float32 for training and float64 for gradient checking.
    """

    def __init__(self, spec: ModelSpec, seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        trace = walk_shapes(spec)
        self.layers = []
        for shape_in, layer in zip(trace, spec.layers):
            op = layer[0]
            if op == "conv3d":
                self.layers.append(L.Conv3d(shape_in[0], layer[2], layer[1], rng, self.dtype))
            elif op == "conv2d":
                self.layers.append(L.Conv2d(shape_in[0], layer[2], layer[1], rng, self.dtype))
            elif op == "relu":
                self.layers.append(L.Relu())
            elif op == "gmaxpool":
                self.layers.append(L.GlobalMaxPool())
            elif op == "flatten":
                self.layers.append(L.Flatten())
            elif op == "dense":
                self.layers.append(L.Dense(shape_in[0], layer[1], rng, self.dtype))
            elif op == "sigmoid":
                self.layers.append(L.Sigmoid())

    def forward(self, X: np.ndarray, check_finite: bool = True) -> np.ndarray:
        """Probabilities of shape (batch, 1)."""
        if tuple(X.shape[1:]) != self.spec.input_shape:
            raise ShapeMismatchError(
                f"batch shape {X.shape} does not match spec input {self.spec.input_shape}"
            )
        a = np.ascontiguousarray(X, dtype=self.dtype)
        for layer in self.layers:
            a = layer.forward(a)
            if check_finite and not np.all(np.isfinite(a)):
                raise ShapeMismatchError(
                    f"non-finite activation after {type(layer).__name__}"
                )
        return a

    def forward_logits(self, X: np.ndarray) -> np.ndarray:
        """Pre-sigmoid output, for the fused BCE gradient."""
        a = np.ascontiguousarray(X, dtype=self.dtype)
        for layer in self.layers[:-1]:
            a = layer.forward(a)
        return a

    def backward_from_logits(self, glogits: np.ndarray) -> None:
        """Backpropagate a gradient w.r.t. the logits (sigmoid skipped)."""
        g = glogits
        for layer in reversed(self.layers[:-1]):
            g = layer.backward(g)

    def parameters(self):
        """Ordered (layer_index, name, array) triples over all parameters."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield i, name, layer.params[name]

    def gradients(self):
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield i, name, layer.grads[name]

    def set_param(self, i: int, name: str, value: np.ndarray) -> None:
        cur = self.layers[i].params[name]
        if cur.shape != value.shape:
            raise SpecMismatchError(
                f"parameter {name} of layer {i}: shape {value.shape} != {cur.shape}"
            )
        self.layers[i].params[name] = np.ascontiguousarray(value, dtype=self.dtype)

    def astype(self, dtype) -> "Network":
        """Copy of the network with parameters cast to ``dtype``."""
        out = Network(self.spec, seed=0, dtype=dtype)
        for i, name, value in self.parameters():
            out.set_param(i, name, value.astype(dtype))
        return out


def save_model(net: Network, path) -> None:
    """Flat binary checkpoint: magic, version, JSON spec header, then every
    parameter as little-endian float32 in layer order, then a sha256
    checksum of everything before it."""
    head = json.dumps(net.spec.to_json(), separators=(",", ":")).encode()
    blob = bytearray()
    blob += _CKPT_MAGIC
    blob += _CKPT_VERSION.to_bytes(4, "little")
    blob += len(head).to_bytes(4, "little")
    blob += head
    for _, _, value in net.parameters():
        blob += np.ascontiguousarray(value, dtype="<f4").tobytes()
    blob += hashlib.sha256(bytes(blob)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_model(path, expect_input_shape: tuple | None = None) -> Network:
    """Inverse of save_model.

    ``expect_input_shape`` lets a pipeline assert the checkpoint matches
    its feature kind (e.g. a 3-D pipeline refusing a 2-D model).
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 44 or blob[:4] != _CKPT_MAGIC:
        raise SpecMismatchError("not a model checkpoint")
    if hashlib.sha256(blob[:-32]).digest() != blob[-32:]:
        raise ChecksumMismatchError("model checkpoint is corrupted")
    version = int.from_bytes(blob[4:8], "little")
    if version != _CKPT_VERSION:
        raise SpecMismatchError(f"checkpoint version {version}, expected {_CKPT_VERSION}")
    hlen = int.from_bytes(blob[8:12], "little")
    try:
        spec = ModelSpec.from_json(json.loads(blob[12:12 + hlen]))
    except (json.JSONDecodeError, KeyError, ShapeMismatchError) as exc:
        raise SpecMismatchError(f"bad checkpoint header: {exc}") from exc
    if expect_input_shape is not None and spec.input_shape != tuple(expect_input_shape):
        raise SpecMismatchError(
            f"checkpoint input shape {spec.input_shape}, pipeline expects {tuple(expect_input_shape)}"
        )
    net = Network(spec, seed=0, dtype=np.float32)
    offset = 12 + hlen
    for i, name, value in net.parameters():
        nbytes = 4 * value.size
        if offset + nbytes > len(blob) - 32:
            raise SpecMismatchError("checkpoint truncated: fewer weights than spec requires")
        # copy: frombuffer views are read-only, parameters must stay writable
        # for in-place optimizer updates and the native kernels
        flat = np.frombuffer(blob, dtype="<f4", count=value.size, offset=offset).copy()
        net.set_param(i, name, flat.reshape(value.shape))
        offset += nbytes
    if offset != len(blob) - 32:
        raise SpecMismatchError("checkpoint has trailing weight bytes beyond spec")
    return net
