"""Network input transforms for PC matrices.

Three representations:

* ``det3d``  - the (n, n, n) tensor of all 3x3 subdeterminants,
* ``error2d`` - elementwise log of the error matrix, shape (n, n, 1),
* ``raw2d``  - the bare comparison ratios, shape (n, n, 1).

Features are computed in float64 and narrowed to float32 only when
assembled into training batches.  Raw subdeterminants span too many
orders of magnitude to train on directly, and their two attack
signatures live at opposite ends of that range (exact zeros from row
proportionality, outsized values from constant rows), so batch assembly
expands det3d into two fixed rescaled channels; see the constants below.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .core import PCMatrix, error_matrix, priorities
from .errors import CorruptSampleError, FormatVersionMismatchError

KINDS = ("det3d", "error2d", "raw2d")

# Batch-assembly rescaling for det3d.  Two channels per matrix:
#   channel 0 = (ln(d + EPS) + SHIFT) / SCALE  - the floored log maps an
#     exact zero (a row-proportionality signature) to a distinct extreme
#     value instead of colliding with the small positive determinants every
#     noisy consistent triple produces;
#   channel 1 = d / (d + KNEE)                 - bounded in [0, 1), keeps
#     resolution in the upper range where constant-row attacks leave
#     abnormally large determinants that the log would flatten out.
DET_LOG_EPS = 1e-5
DET_LOG_SHIFT = 6.0
DET_LOG_SCALE = 4.0
DET_RATIO_KNEE = 6.0

_CACHE_MAGIC = b"PCMF"
_CACHE_VERSION = 1
_HEADER = struct.Struct("<4sI8sII64s")


@dataclass(frozen=True)
class FeatureTensor:
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        self.values.setflags(write=False)

    @property
    def order(self) -> int:
        return self.values.shape[0]


def det_tensor(C: PCMatrix) -> FeatureTensor:
    """All n^3 determinants d_ijk of the 3x3 submatrices on (i, j, k).

    The full cube is emitted, including the zero planes where two indices
    coincide, so downstream convolutions see a regular grid.  For a
    reciprocal matrix every d_ijk is non-negative and vanishes exactly on
    the multiplicatively consistent triples.
    """
    M = C.values
    n = C.order
    r = np.arange(n)
    ii, jj, kk = np.meshgrid(r, r, r, indexing="ij")
    rows = np.stack([ii, jj, kk], axis=-1)
    sub = M[rows[..., :, None], rows[..., None, :]]
    return FeatureTensor(kind="det3d", values=np.linalg.det(sub))


def det_tensor_closed_form(C: PCMatrix) -> np.ndarray:
    """Independent oracle for det_tensor: d = t + 1/t - 2 with
    t = c_ik / (c_ij * c_jk), valid for any reciprocal matrix."""
    M = C.values
    t = M[:, None, :] / (M[:, :, None] * M[None, :, :])
    return t + 1.0 / t - 2.0


def error_feature(C: PCMatrix, method: str = "gmm") -> FeatureTensor:
    """Signed, zero-centered error representation ln(c_ij * w_j / w_i).

    Antisymmetric by reciprocity; identically zero iff C is consistent.
    """
    w = priorities(C, method)
    vals = np.log(error_matrix(C, w))
    return FeatureTensor(kind="error2d", values=vals[:, :, None])


def raw_feature(C: PCMatrix) -> FeatureTensor:
    """The unprocessed comparison ratios, as a single-channel 2-D input."""
    return FeatureTensor(kind="raw2d", values=C.values[:, :, None].copy())


_TRANSFORMS = {
    "det3d": det_tensor,
    "error2d": error_feature,
    "raw2d": raw_feature,
}


def transform(C: PCMatrix, kind: str) -> FeatureTensor:
    if kind not in _TRANSFORMS:
        raise ValueError(f"unknown feature kind {kind!r}")
    return _TRANSFORMS[kind](C)


def batch_shape(kind: str, n: int, count: int) -> tuple:
    """Channels-first batch shape for `count` features of the given kind."""
    if kind == "det3d":
        return (count, 2, n, n, n)
    if kind in ("error2d", "raw2d"):
        return (count, 1, n, n)
    raise ValueError(f"unknown feature kind {kind!r}")


def featurize(samples, kind: str):
    """Transform labeled samples into a float32 training batch.

    Returns
    -------
    (X, y) : np.ndarray
        X channels-first, (count, 2, n, n, n) for det3d (floored-log and
        bounded-ratio channels) and (count, 1, n, n) for the 2-D kinds;
        y float32 of 0/1 labels.
    """
    if not samples:
        raise ValueError("no samples to featurize")
    n = samples[0].matrix.order
    X = np.empty(batch_shape(kind, n, len(samples)), dtype=np.float32)
    y = np.empty(len(samples), dtype=np.float32)
    for i, s in enumerate(samples):
        f = transform(s.matrix, kind).values
        if kind == "det3d":
            d = np.maximum(f, 0.0)
            X[i, 0] = (np.log(d + DET_LOG_EPS) + DET_LOG_SHIFT) / DET_LOG_SCALE
            X[i, 1] = d / (d + DET_RATIO_KNEE)
        else:
            X[i, 0] = f[:, :, 0]
        y[i] = s.label
    return X, y


def save_feature_cache(path, kind: str, X: np.ndarray, y: np.ndarray,
                       dataset_digest: str = "") -> None:
    """Binary feature cache: fixed header (magic, version, kind, n, count,
    source-dataset digest), then labels and features as little-endian
    float32."""
    count = X.shape[0]
    n = X.shape[-1]
    if X.shape != batch_shape(kind, n, count) or y.shape != (count,):
        raise ValueError(f"inconsistent cache arrays: X {X.shape}, y {y.shape}")
    header = _HEADER.pack(
        _CACHE_MAGIC,
        _CACHE_VERSION,
        kind.encode().ljust(8, b"\0"),
        n,
        count,
        dataset_digest.encode().ljust(64, b"\0"),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(y, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(X, dtype="<f4").tobytes())


def load_feature_cache(path):
    """Inverse of save_feature_cache; returns (X, y, kind, dataset_digest)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size or blob[:4] != _CACHE_MAGIC:
        raise CorruptSampleError(1, "not a feature cache file")
    magic, version, kind_b, n, count, digest_b = _HEADER.unpack_from(blob)
    if version != _CACHE_VERSION:
        raise FormatVersionMismatchError(version, _CACHE_VERSION)
    kind = kind_b.rstrip(b"\0").decode()
    if kind not in KINDS:
        raise CorruptSampleError(1, f"unknown feature kind {kind!r}")
    shape = batch_shape(kind, n, count)
    want = _HEADER.size + 4 * count + 4 * int(np.prod(shape))
    if len(blob) != want:
        raise CorruptSampleError(1, f"expected {want} bytes, found {len(blob)}")
    y = np.frombuffer(blob, dtype="<f4", count=count, offset=_HEADER.size).copy()
    X = (
        np.frombuffer(blob, dtype="<f4", offset=_HEADER.size + 4 * count)
        .reshape(shape)
        .copy()
    )
    return X, y, kind, digest_b.rstrip(b"\0").decode()


def dataset_checksum(X: np.ndarray, y: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X, dtype="<f4").tobytes())
    h.update(np.ascontiguousarray(y, dtype="<f4").tobytes())
    return h.hexdigest()
