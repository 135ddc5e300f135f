"""Synthetic labeled datasets of clean and attacked PC matrices.

Each dataset is built pair-wise: a clean matrix (a perturbed consistent
matrix with positive inconsistency) and the attacked version of that same
matrix.  Pairs are generated from independent per-pair random streams, so
the output is fully determined by the manifest seed regardless of how the
work is scheduled.

File format: JSON Lines.  Line 1 is the manifest, every following line is
one sample ``{"source_id", "label", "matrix", "provenance"}`` with label 0
for clean and 1 for attacked.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .attacks import (
    ATTACKS,
    AttackConfig,
    PromotionNotGuaranteedWarning,
    draw_alpha,
    select_targets,
)
from .core import (
    PCMatrix,
    PriorityVector,
    consistent_from_weights,
    matrix_from_json,
    matrix_to_json,
    priority_evm,
    _mirror_upper,
    _wrap,
)
from .errors import (
    CorruptSampleError,
    DegeneratePerturbationError,
    EmptySplitError,
    FormatVersionMismatchError,
    PcmanipError,
)

FORMAT_VERSION = 1
DEFAULT_GAMMA = 2.0
ALGORITHMS = ("naive", "basic", "advanced")

# Dirichlet concentration for random_weights.
WEIGHT_SHAPE = 0.7

# Priority method recorded in attack configs: drives the advanced attack's
# stopping test and every outcome's success check.  The eigenvector method
# responds faster than the geometric mean to a part-copied row, so advanced
# attacks stop earlier and stay subtler.
STOP_METHOD = "evm"

# CI below this is indistinguishable from consistent at the eigensolver's
# working precision, so the perturbation is considered degenerate.
_CI_FLOOR = 1e-9


@dataclass(frozen=True)
class AttackProvenance:
    algo: str
    alpha: float
    p: int
    r: int
    steps: int
    success: bool


@dataclass(frozen=True)
class LabeledSample:
    matrix: PCMatrix
    label: int
    provenance: AttackProvenance | None
    source_id: int


@dataclass(frozen=True)
class DatasetManifest:
    n: int
    algorithm: str
    count_pairs: int
    seed: int
    perturbation_gamma: float
    format_version: int = FORMAT_VERSION
    digest: str | None = None


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    shuffle_seed: int = 0


def random_weights(n: int, rng) -> PriorityVector:
    """Random draw from the weight simplex: normalized gamma variates,
    i.e. a symmetric Dirichlet with concentration WEIGHT_SHAPE.

    The sub-uniform concentration (0.7) spreads the weights enough that
    rankings carry real contrasts; flat draws bury the naive attack's
    footprint below the perturbation noise.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    e = rng.gamma(WEIGHT_SHAPE, size=n)
    return PriorityVector(weights=e / e.sum(), method="sampled")


def _is_consistent(C: PCMatrix, rtol: float = 1e-9) -> bool:
    g = np.exp(np.mean(np.log(C.values), axis=1))
    implied = g[:, None] / g[None, :]
    return bool(np.max(np.abs(C.values / implied - 1.0)) <= rtol)


def perturb_consistent(C: PCMatrix, gamma: float, rng, max_attempts: int = 10) -> PCMatrix:
    """Multiply each upper-triangle entry by an independent log-uniform
    factor from [1/gamma, gamma], keeping reciprocity.

    Retries (up to ``max_attempts``) if the result is still numerically
    consistent, and raises DegeneratePerturbationError after that.
    """
    if not gamma > 1.0:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    if not _is_consistent(C):
        raise ValueError("input matrix is not consistent")
    n = C.order
    iu = np.triu_indices(n, 1)
    span = np.log(gamma)
    for _ in range(max_attempts):
        factors = np.exp(rng.uniform(-span, span, size=len(iu[0])))
        M = C.values.copy()
        M[iu] *= factors
        out = _wrap(_mirror_upper(M))
        _, lam = priority_evm(out)
        if (lam - n) / (n - 1) > _CI_FLOOR:
            return out
    raise DegeneratePerturbationError(
        f"perturbation stayed consistent after {max_attempts} attempts (gamma={gamma})"
    )


def generate_dataset(n: int, pairs: int, algorithm: str, seed: int,
                     gamma: float = DEFAULT_GAMMA):
    """Generate ``pairs`` clean matrices and their attacked counterparts.

    Per pair: draw a weight vector, build its consistent matrix, perturb it
    so the inconsistency is positive, pick the attack targets (r = current
    top alternative, p random), then attack.  Alpha follows the experiment
    protocol: the matrix order for the naive attack, otherwise a uniform
    draw from [1.1, 5).

    Returns
    -------
    (list[LabeledSample], DatasetManifest)
        2 * pairs samples in pair order (clean, then attacked), labels
        exactly balanced.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    streams = np.random.SeedSequence(seed).spawn(pairs)
    samples = []
    for idx in range(pairs):
        rng = np.random.default_rng(streams[idx])
        try:
            w = random_weights(n, rng)
            clean = perturb_consistent(consistent_from_weights(w), gamma, rng)
            r, p = select_targets(clean, rng)
            alpha = float(n) if algorithm == "naive" else draw_alpha(rng)
            cfg = AttackConfig(p=p, r=r, alpha=alpha, method=STOP_METHOD)
            with warnings.catch_warnings():
                # alpha=n is this protocol's deliberate choice; the naive
                # attack's "promotion not guaranteed" advisory is expected.
                warnings.simplefilter("ignore", PromotionNotGuaranteedWarning)
                outcome = ATTACKS[algorithm](clean, cfg)
        except PcmanipError as exc:
            exc.args = (f"pair {idx}: {exc}",)
            raise
        samples.append(LabeledSample(clean, 0, None, idx))
        samples.append(
            LabeledSample(
                outcome.attacked,
                1,
                AttackProvenance(algorithm, alpha, p, r, outcome.steps_taken, outcome.success),
                idx,
            )
        )
    manifest = DatasetManifest(n=n, algorithm=algorithm, count_pairs=pairs,
                               seed=seed, perturbation_gamma=gamma)
    return samples, manifest


def split_dataset(samples, spec: SplitSpec):
    """Shuffle whole pairs, then split them at ``train_fraction``.

    Splitting by pair keeps a clean matrix and its attacked twin on the
    same side of the train/test divide.
    """
    by_pair = {}
    for s in samples:
        by_pair.setdefault(s.source_id, []).append(s)
    pair_ids = sorted(by_pair)
    if not pair_ids:
        raise EmptySplitError("no samples to split")
    if not 0.0 < spec.train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {spec.train_fraction}")
    if len(pair_ids) == 1:
        # Degenerate single-pair dataset: the same pair serves both sides so
        # smoke runs at scale 1 still produce a (meaningless) report.
        only = list(by_pair[pair_ids[0]])
        return only, list(only)
    perm = np.random.default_rng(spec.shuffle_seed).permutation(len(pair_ids))
    # Clamp so both sides stay non-empty for any fraction in (0, 1).
    n_train = min(max(int(round(spec.train_fraction * len(pair_ids))), 1),
                  len(pair_ids) - 1)
    train, test = [], []
    for pos, k in enumerate(perm):
        dest = train if pos < n_train else test
        dest.extend(by_pair[pair_ids[k]])
    return train, test


def _sample_to_json(s: LabeledSample) -> dict:
    return {
        "source_id": s.source_id,
        "label": s.label,
        "matrix": matrix_to_json(s.matrix),
        "provenance": None if s.provenance is None else asdict(s.provenance),
    }


def _sample_lines(samples) -> list:
    return [json.dumps(_sample_to_json(s), separators=(",", ":")) for s in samples]


def _digest(lines) -> str:
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()


def save_dataset(samples, manifest: DatasetManifest, path) -> DatasetManifest:
    """Write manifest + samples as JSONL; returns the manifest with its
    content digest filled in."""
    lines = _sample_lines(samples)
    manifest = DatasetManifest(
        n=manifest.n,
        algorithm=manifest.algorithm,
        count_pairs=manifest.count_pairs,
        seed=manifest.seed,
        perturbation_gamma=manifest.perturbation_gamma,
        format_version=manifest.format_version,
        digest=_digest(lines),
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(asdict(manifest), separators=(",", ":")) + "\n")
        for line in lines:
            fh.write(line + "\n")
    return manifest


def load_dataset(path):
    """Read and validate a JSONL dataset; inverse of save_dataset.

    Every matrix is re-validated on load, labels must agree with the
    presence of attack provenance, and the manifest digest must match the
    sample lines actually read.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptSampleError(1, "empty file")
    try:
        head = json.loads(lines[0])
        manifest = DatasetManifest(**head)
    except (json.JSONDecodeError, TypeError) as exc:
        raise CorruptSampleError(1, f"bad manifest: {exc}") from exc
    if manifest.format_version != FORMAT_VERSION:
        raise FormatVersionMismatchError(manifest.format_version, FORMAT_VERSION)

    samples = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            prov = obj["provenance"]
            if (obj["label"] == 1) != (prov is not None):
                raise ValueError("label does not match provenance")
            samples.append(
                LabeledSample(
                    matrix=matrix_from_json(obj["matrix"]),
                    label=int(obj["label"]),
                    provenance=None if prov is None else AttackProvenance(**prov),
                    source_id=int(obj["source_id"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, PcmanipError) as exc:
            raise CorruptSampleError(lineno, str(exc)) from exc
    if len(samples) != 2 * manifest.count_pairs:
        raise CorruptSampleError(
            len(lines) + 1, f"expected {2 * manifest.count_pairs} samples, found {len(samples)}"
        )
    if manifest.digest is not None and _digest(lines[1:]) != manifest.digest:
        raise CorruptSampleError(1, "content digest mismatch")
    return samples, manifest
