"""Ranking manipulation attacks on PC matrices.

All three attacks try to promote alternative ``p`` over a reference
alternative ``r`` by rewriting row ``p`` (and, via reciprocity, column
``p``).  Indices are zero-based.  The attacks never touch any other entry,
and every output is a valid reciprocal matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import core
from .core import PCMatrix, priorities, priority_evm
from .errors import PromotedEqualsReferenceError

ALPHA_LOW = 1.1
ALPHA_HIGH = 5.0


class PromotionNotGuaranteedWarning(UserWarning):
    """The naive attack's alpha does not dominate every matrix entry, so the
    promoted alternative may not end up on top."""


@dataclass(frozen=True)
class AttackConfig:
    """Target indices, scaling factor and the priority method for checks.

    ``method`` controls both the advanced attack's stopping test and the
    ``success`` flag reported for every attack.
    """

    p: int
    r: int
    alpha: float
    method: str = "gmm"

    def __post_init__(self):
        if self.p == self.r:
            raise PromotedEqualsReferenceError(
                f"promoted and reference index are both {self.p}"
            )
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.method not in ("evm", "gmm"):
            raise ValueError(f"unknown priority method {self.method!r}")


@dataclass(frozen=True)
class AttackOutcome:
    attacked: PCMatrix
    algorithm: str
    modified_pairs: list = field(default_factory=list)
    steps_taken: int = 0
    success: bool = False


def draw_alpha(rng) -> float:
    """Scaling factor for the basic/advanced attacks: uniform on [1.1, 5)."""
    return float(rng.uniform(ALPHA_LOW, ALPHA_HIGH))


def _check_indices(n: int, cfg: AttackConfig):
    if not (0 <= cfg.p < n and 0 <= cfg.r < n):
        raise IndexError(f"p={cfg.p}, r={cfg.r} out of range for order {n}")


def _ranks_above(values: np.ndarray, p: int, r: int, method: str) -> bool:
    w = priorities(values, method).weights
    return bool(w[p] > w[r])


def attack_naive(C: PCMatrix, cfg: AttackConfig) -> AttackOutcome:
    """Overwrite row p with the constant alpha (column p with 1/alpha).

    The promoted alternative is guaranteed to come first under the
    geometric-mean method whenever alpha exceeds every entry of C; a
    warning is emitted when that margin does not hold.
    """
    n = C.order
    _check_indices(n, cfg)
    if cfg.alpha <= np.max(C.values):
        warnings.warn(
            f"alpha={cfg.alpha} does not exceed the largest entry "
            f"{np.max(C.values):.4g}; promotion is not guaranteed",
            PromotionNotGuaranteedWarning,
            stacklevel=2,
        )
    M = C.values.copy()
    pairs = []
    for i in range(n):
        if i == cfg.p:
            continue
        M[cfg.p, i] = cfg.alpha
        M[i, cfg.p] = 1.0 / cfg.alpha
        pairs += [(cfg.p, i), (i, cfg.p)]
    return AttackOutcome(
        attacked=core._wrap(M),
        algorithm="naive",
        modified_pairs=pairs,
        steps_taken=n - 1,
        success=_ranks_above(M, cfg.p, cfg.r, cfg.method),
    )


def _copy_row_attack(C: PCMatrix, cfg: AttackConfig, stop_check: bool):
    """Shared loop: row p entries become alpha * (row r), in ascending index
    order, optionally stopping as soon as p overtakes r."""
    n = C.order
    _check_indices(n, cfg)
    M = C.values.copy()
    pairs = []
    steps = 0
    success = False
    for i in range(n):
        if i == cfg.p:
            continue
        v = cfg.alpha * M[cfg.r, i]
        M[cfg.p, i] = v
        M[i, cfg.p] = 1.0 / v
        pairs += [(cfg.p, i), (i, cfg.p)]
        steps += 1
        if stop_check:
            success = _ranks_above(M, cfg.p, cfg.r, cfg.method)
            if success:
                break
    if not stop_check:
        success = _ranks_above(M, cfg.p, cfg.r, cfg.method)
    return core._wrap(M), pairs, steps, success


def attack_basic(C: PCMatrix, cfg: AttackConfig) -> AttackOutcome:
    """Replace row p by alpha times the reference row r, all entries at once."""
    attacked, pairs, steps, success = _copy_row_attack(C, cfg, stop_check=False)
    return AttackOutcome(attacked, "basic", pairs, steps, success)


def attack_advanced(C: PCMatrix, cfg: AttackConfig) -> AttackOutcome:
    """Like the basic attack, but stop after the first update that already
    puts the promoted alternative above the reference.

    The priority vector is recomputed with ``cfg.method`` after every single
    entry update, so the number of touched pairs is minimal for the given
    alpha.  ``success`` reflects the stopping test after the last update.
    """
    attacked, pairs, steps, success = _copy_row_attack(C, cfg, stop_check=True)
    return AttackOutcome(attacked, "advanced", pairs, steps, success)


ATTACKS = {"naive": attack_naive, "basic": attack_basic, "advanced": attack_advanced}


def select_targets(C: PCMatrix, rng):
    """Pick (r, p) the way the experiments do.

    r is the top-ranked alternative under the eigenvector method (ties
    broken by lowest index); p is drawn uniformly from the remaining
    indices using ``rng``.
    """
    w, _ = priority_evm(C)
    r = int(np.argmax(w.weights))
    k = int(rng.integers(0, C.order - 1))
    p = k if k < r else k + 1
    return r, p
