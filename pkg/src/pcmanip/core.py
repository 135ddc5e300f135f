"""Core math for pairwise-comparison (PC) matrices.

A PC matrix holds the ratio judgements c_ij between n alternatives.  This
module covers construction and validation, the two classic priority
derivation methods (principal eigenvector and geometric mean of rows),
the standard inconsistency measures (CI, CR, GCI), the per-entry error
matrix, and Monte Carlo estimation of the random index used by CR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    MissingRandomIndexError,
    NoConvergenceError,
    NonPositiveEntryError,
    NonSquareError,
    OrderTooSmallError,
    ReciprocityViolationError,
    ZeroWeightError,
)

RECIPROCITY_TOL = 1e-12
EVM_TOL = 1e-10
EVM_MAX_ITER = 10_000

#: Discrete comparison scale used when sampling fully random matrices:
#: {1/9, 1/8, ..., 1/2, 1, 2, ..., 9}.
SAATY_SCALE = np.array([1.0 / k for k in range(9, 1, -1)] + [float(k) for k in range(1, 10)])

# Classic published random-index constants.  The value for n=12 follows the
# monotone variant (1.54 rather than 1.48) so the table is non-decreasing.
BUILTIN_RI = {
    3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45,
    10: 1.49, 11: 1.51, 12: 1.54, 13: 1.56, 14: 1.57, 15: 1.59,
}


@dataclass(frozen=True, eq=False)
class PCMatrix:
    """Square positive reciprocal matrix of comparison ratios.

    Instances are immutable; ``values`` is a read-only float64 array whose
    lower triangle is the exact float reciprocal of the upper triangle.
    """

    values: np.ndarray

    @property
    def order(self) -> int:
        return self.values.shape[0]

    def __repr__(self):
        return f"PCMatrix(order={self.order})"


@dataclass(frozen=True, eq=False)
class PriorityVector:
    """Normalized ranking weights, one per alternative, summing to 1."""

    weights: np.ndarray
    method: str  # "evm" or "gmm"

    @property
    def ranking(self) -> np.ndarray:
        """Alternative indices from highest to lowest weight."""
        return np.argsort(-self.weights, kind="stable")


@dataclass(frozen=True)
class ConsistencyReport:
    lambda_max: float
    ci: float
    cr: float
    gci: float

    @property
    def too_inconsistent(self) -> bool:
        """CR above 0.1 is conventionally rejected as a ranking basis."""
        return self.cr > 0.1


@dataclass(frozen=True)
class RandomIndexTable:
    """Average CI of fully random reciprocal matrices, by matrix order."""

    values: dict
    provenance: str

    @classmethod
    def builtin(cls) -> "RandomIndexTable":
        return cls(values=dict(BUILTIN_RI), provenance="builtin")

    @classmethod
    def monte_carlo(cls, orders, samples: int, seed: int) -> "RandomIndexTable":
        vals = {n: random_index(n, samples, seed) for n in orders}
        return cls(values=vals, provenance=f"monte_carlo(seed={seed}, samples={samples})")

    def lookup(self, n: int) -> float:
        try:
            return self.values[n]
        except KeyError:
            raise MissingRandomIndexError(n) from None


def _wrap(values: np.ndarray) -> PCMatrix:
    values.setflags(write=False)
    return PCMatrix(values=values)


def _mirror_upper(raw: np.ndarray) -> np.ndarray:
    """Rebuild a matrix from its upper triangle so reciprocity is bit-exact."""
    n = raw.shape[0]
    out = np.eye(n)
    iu = np.triu_indices(n, 1)
    out[iu] = raw[iu]
    out[iu[1], iu[0]] = 1.0 / raw[iu]
    return out


def build_matrix(raw) -> PCMatrix:
    """Validate raw comparison ratios and return a canonical PCMatrix.

    Parameters
    ----------
    raw : array-like, shape (n, n)
        Comparison ratios with unit diagonal; must satisfy
        c_ij * c_ji = 1 within ``RECIPROCITY_TOL``.

    Raises
    ------
    NonSquareError, OrderTooSmallError, NonPositiveEntryError,
    ReciprocityViolationError
        The reciprocity error reports the worst offending (i, j) pair.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if n < 3:
        raise OrderTooSmallError(f"matrix order must be >= 3, got {n}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise NonPositiveEntryError("all entries must be finite and > 0")

    prod = arr * arr.T
    dev = np.abs(prod - 1.0)
    worst = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[worst] > RECIPROCITY_TOL:
        raise ReciprocityViolationError(worst[0], worst[1], prod[worst])
    return _wrap(_mirror_upper(arr))


def consistent_from_weights(w) -> PCMatrix:
    """Build the consistent matrix c_ij = w_i / w_j induced by weights w."""
    wv = np.asarray(getattr(w, "weights", w), dtype=np.float64)
    if wv.ndim != 1 or wv.size < 3:
        raise OrderTooSmallError(f"need at least 3 weights, got shape {wv.shape}")
    if not np.all(np.isfinite(wv)) or np.any(wv <= 0.0):
        raise ZeroWeightError("all weights must be finite and > 0")
    return _wrap(_mirror_upper(wv[:, None] / wv[None, :]))


def priority_evm(C: PCMatrix, tol: float = EVM_TOL, max_iter: int = EVM_MAX_ITER):
    """Principal-eigenvector priorities via power iteration.

    Iterates w <- Cw / ||Cw||_1 from the all-ones vector until the residual
    ||Cw - lambda*w||_inf drops below ``tol``.

    Returns
    -------
    (PriorityVector, float)
        Normalized weights and the dominant-eigenvalue estimate.
    """
    M = np.asarray(getattr(C, "values", C))
    n = M.shape[0]
    w = np.full(n, 1.0 / n)
    y = M @ w
    lam = y.sum()
    resid = np.inf
    for _ in range(max_iter):
        w = y / lam
        y = M @ w
        lam = y.sum()
        resid = np.max(np.abs(y - lam * w))
        if resid <= tol:
            return PriorityVector(weights=w, method="evm"), float(lam)
    raise NoConvergenceError(max_iter, resid)


def priority_gmm(C: PCMatrix) -> PriorityVector:
    """Geometric-mean priorities: rescaled row geometric means.

    Computed in log space, so entries far outside the usual 1/9..9 scale
    (e.g. after an attack) cannot overflow.
    """
    M = np.asarray(getattr(C, "values", C))
    g = np.exp(np.mean(np.log(M), axis=1))
    return PriorityVector(weights=g / g.sum(), method="gmm")


def priorities(C: PCMatrix, method: str) -> PriorityVector:
    """Dispatch helper for the two priority methods."""
    if method == "evm":
        return priority_evm(C)[0]
    if method == "gmm":
        return priority_gmm(C)
    raise ValueError(f"unknown priority method {method!r}")


def consistency_report(C: PCMatrix, ri: RandomIndexTable | None = None) -> ConsistencyReport:
    """CI, CR and GCI for a PC matrix.

    CI = (lambda_max - n) / (n - 1); CR = CI / RI(n); GCI averages the
    squared log errors ln^2(c_ij * w_j / w_i) over i < j with geometric-mean
    weights.
    """
    if ri is None:
        ri = RandomIndexTable.builtin()
    n = C.order
    _, lam = priority_evm(C)
    ci = (lam - n) / (n - 1)
    cr = ci / ri.lookup(n)

    w = priority_gmm(C).weights
    logs = np.log(C.values * (w[None, :] / w[:, None]))
    iu = np.triu_indices(n, 1)
    gci = 2.0 / ((n - 1) * (n - 2)) * np.sum(logs[iu] ** 2)
    return ConsistencyReport(lambda_max=lam, ci=ci, cr=cr, gci=gci)


def error_matrix(C: PCMatrix, w) -> np.ndarray:
    """Per-entry error e_ij = c_ij * w_j / w_i.

    Equals the all-ones matrix exactly when C is the consistent matrix of w;
    large entries point at the most inconsistent judgements.
    """
    wv = np.asarray(getattr(w, "weights", w), dtype=np.float64)
    if wv.shape != (C.order,):
        raise DimensionMismatchError(
            f"weight vector of shape {wv.shape} does not match order {C.order}"
        )
    return C.values * (wv[None, :] / wv[:, None])


def matrix_to_json(C: PCMatrix) -> dict:
    """Row-major JSON object for a PC matrix: ``{"n": ..., "rows": [[...]]}``."""
    return {"n": C.order, "rows": [[float(v) for v in row] for row in C.values]}


def matrix_from_json(obj: dict) -> PCMatrix:
    """Parse and validate the matrix JSON object produced by matrix_to_json."""
    rows = obj["rows"]
    if obj["n"] != len(rows):
        raise NonSquareError(f"declared n={obj['n']} but got {len(rows)} rows")
    return build_matrix(rows)


def batched_lambda_max(mats: np.ndarray, tol: float = EVM_TOL, max_iter: int = EVM_MAX_ITER) -> np.ndarray:
    """Power iteration over a stack of positive matrices at once.

    Same iteration as :func:`priority_evm`, vectorized across the first axis;
    used by the random-index Monte Carlo where per-matrix calls would be slow.
    """
    m, n, _ = mats.shape
    w = np.full((m, n), 1.0 / n)
    y = np.einsum("mij,mj->mi", mats, w)
    lam = y.sum(axis=1)
    resid = np.inf
    for _ in range(max_iter):
        w = y / lam[:, None]
        y = np.einsum("mij,mj->mi", mats, w)
        lam = y.sum(axis=1)
        resid = np.max(np.abs(y - lam[:, None] * w))
        if resid <= tol:
            return lam
    raise NoConvergenceError(max_iter, resid)


def sample_random_reciprocal(n: int, count: int, rng) -> np.ndarray:
    """Stack of fully random reciprocal matrices on the discrete scale."""
    iu = np.triu_indices(n, 1)
    picks = SAATY_SCALE[rng.integers(0, len(SAATY_SCALE), size=(count, len(iu[0])))]
    mats = np.broadcast_to(np.eye(n), (count, n, n)).copy()
    mats[:, iu[0], iu[1]] = picks
    mats[:, iu[1], iu[0]] = 1.0 / picks
    return mats


def random_index(n: int, samples: int, seed: int) -> float:
    """Monte Carlo random index: mean CI over fully random reciprocal matrices.

    Upper-triangle entries are drawn uniformly from ``SAATY_SCALE``.
    Deterministic for a given (n, samples, seed).
    """
    if n < 3:
        raise OrderTooSmallError(f"matrix order must be >= 3, got {n}")
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples for a stable estimate, got {samples}")
    rng = np.random.default_rng(seed)
    mats = sample_random_reciprocal(n, samples, rng)
    lam = batched_lambda_max(mats)
    return float(np.mean((lam - n) / (n - 1)))
