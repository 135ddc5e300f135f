"""Command-line harness.

Subcommands: generate, attack, train, eval, reproduce, ri.

Only stdlib is imported at module level; heavy modules load inside main()
after the thread policy from --threads is written to the environment, so
BLAS pools are sized before numpy initializes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)

LOW_DATA_SCALE = 500


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master random seed")
    common.add_argument("--threads", type=int, default=1,
                        help="BLAS/OpenMP thread cap (default 1, the deterministic contract)")
    common.add_argument("--out", type=str, default=None, help="output path")

    parser = argparse.ArgumentParser(
        prog="pcmanip",
        description="Forge, attack and detect manipulated pairwise-comparison matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common],
                       help="generate a labeled clean/attacked dataset (JSONL)")
    p.add_argument("--n", type=int, required=True, help="matrix order")
    p.add_argument("--pairs", type=int, required=True, help="clean/attacked pairs to emit")
    p.add_argument("--algo", choices=("naive", "basic", "advanced"), required=True)
    p.add_argument("--gamma", type=float, default=2.0, help="perturbation half-range")

    p = sub.add_parser("attack", parents=[common],
                       help="apply one attack to a matrix JSON file")
    p.add_argument("--matrix", type=str, required=True, help='input JSON {"n":..,"rows":[[..]]}')
    p.add_argument("--algo", choices=("naive", "basic", "advanced"), required=True)
    p.add_argument("--p", type=int, required=True, help="alternative to promote (0-based)")
    p.add_argument("--r", type=int, default=None,
                   help="reference alternative (default: current top-ranked)")
    p.add_argument("--alpha", type=float, default=None,
                   help="scaling factor (default: n for naive, drawn from [1.1,5) otherwise)")
    p.add_argument("--method", choices=("evm", "gmm"), default="gmm")

    p = sub.add_parser("train", parents=[common],
                       help="train a detector on a dataset file")
    p.add_argument("--data", type=str, required=True, help="JSONL dataset")
    p.add_argument("--kind", choices=("det3d", "error2d", "raw2d"), default="det3d")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--history", type=str, default=None, help="per-epoch CSV path")

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a checkpoint on a dataset file")
    p.add_argument("--model", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--kind", choices=("det3d", "error2d", "raw2d"), default=None,
                   help="feature kind (default: inferred from the checkpoint)")
    p.add_argument("--threshold", type=float, default=0.5)

    p = sub.add_parser("reproduce", parents=[common],
                       help="replicate a published detection-rate table")
    p.add_argument("--table", type=int, choices=(1, 2), required=True)
    p.add_argument("--scale", type=int, default=2000, help="pairs per grid cell")
    p.add_argument("--kind", choices=("det3d", "error2d", "raw2d"), default=None,
                   help="override the table's preprocessing (raw-matrix baseline)")
    p.add_argument("--sizes", type=str, default="5,6,7,8,9", help="comma-separated N values")
    p.add_argument("--algos", type=str, default="naive,basic,advanced")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=2.0)

    p = sub.add_parser("ri", parents=[common],
                       help="Monte Carlo random index for a given order")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--builtin", action="store_true",
                   help="print the built-in table value instead of simulating")
    return parser


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _require_out(args, what: str) -> str:
    if args.out is None:
        raise SystemExit(f"error: --out is required for {what}")
    return args.out


def cmd_generate(args) -> int:
    from . import dataset

    seed = 0 if args.seed is None else args.seed
    out = _require_out(args, "generate")
    samples, manifest = dataset.generate_dataset(
        args.n, args.pairs, args.algo, seed, args.gamma
    )
    manifest = dataset.save_dataset(samples, manifest, out)
    _emit({"written": out, "samples": len(samples), "manifest": manifest.__dict__})
    return 0


def cmd_attack(args) -> int:
    import numpy as np

    from . import attacks, core

    with open(args.matrix, "r", encoding="utf-8") as fh:
        C = core.matrix_from_json(json.load(fh))
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    if args.r is None:
        r, _ = attacks.select_targets(C, rng)
    else:
        r = args.r
    if args.alpha is not None:
        alpha = args.alpha
    elif args.algo == "naive":
        alpha = float(C.order)
    else:
        alpha = attacks.draw_alpha(rng)
    cfg = attacks.AttackConfig(p=args.p, r=r, alpha=alpha, method=args.method)
    outcome = attacks.ATTACKS[args.algo](C, cfg)
    attacked_json = core.matrix_to_json(outcome.attacked)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(attacked_json, fh)
            fh.write("\n")
    _emit({
        "algorithm": outcome.algorithm,
        "p": cfg.p,
        "r": cfg.r,
        "alpha": cfg.alpha,
        "steps_taken": outcome.steps_taken,
        "success": outcome.success,
        "modified_pairs": [list(pair) for pair in outcome.modified_pairs],
        "attacked": None if args.out is not None else attacked_json,
    })
    return 0


def cmd_train(args) -> int:
    from . import dataset, features
    from .nn import network, training

    out = _require_out(args, "train")
    samples, manifest = dataset.load_dataset(args.data)
    X, y = features.featurize(samples, args.kind)
    cfg = training.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=0 if args.seed is None else args.seed,
    )
    net = network.Network(network.detector_spec(args.kind, manifest.n), seed=cfg.seed)
    history = training.train(net, X, y, cfg)
    network.save_model(net, out)
    if args.history is not None:
        with open(args.history, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,loss,accuracy\n")
            for h in history:
                fh.write(f"{h.epoch},{h.loss:.6f},{h.accuracy:.4f}\n")
    final = history[-1] if history else None
    _emit({
        "written": out,
        "samples": len(samples),
        "kind": args.kind,
        "epochs": cfg.epochs,
        "final_loss": None if final is None else round(final.loss, 6),
        "final_train_accuracy": None if final is None else round(final.accuracy, 4),
    })
    return 0


def cmd_eval(args) -> int:
    from . import dataset, features
    from .errors import SpecMismatchError
    from .nn import network, training

    net = network.load_model(args.model)
    samples, manifest = dataset.load_dataset(args.data)
    if args.kind is None:
        if len(net.spec.input_shape) == 4:
            kind = "det3d"
        else:
            kind = "error2d"
    else:
        kind = args.kind
    X, y = features.featurize(samples, kind)
    if tuple(X.shape[1:]) != net.spec.input_shape:
        raise SpecMismatchError(
            f"checkpoint expects input {net.spec.input_shape}, "
            f"dataset ({kind}, n={manifest.n}) produces {tuple(X.shape[1:])}"
        )
    m = training.evaluate(net, X, y, threshold=args.threshold)
    _emit({
        "samples": len(samples),
        "kind": kind,
        "threshold": m.threshold,
        "accuracy": round(m.accuracy, 6),
        "detection_rate_pct": round(m.detection_rate, 2),
        "loss": round(m.loss, 6),
        "tp": m.tp, "fp": m.fp, "tn": m.tn, "fn": m.fn,
    })
    return 0


def cmd_reproduce(args) -> int:
    from . import experiments
    from .nn.training import TrainConfig

    out_dir = Path(_require_out(args, "reproduce"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.scale < LOW_DATA_SCALE:
        print(
            f"warning: scale {args.scale} is below the recommended minimum of "
            f"{LOW_DATA_SCALE} pairs per cell; detection rates will be noisy",
            file=sys.stderr,
        )
    seed = 7 if args.seed is None else args.seed
    plan = experiments.ExperimentPlan(
        sizes=tuple(int(s) for s in args.sizes.split(",") if s),
        algorithms=tuple(a for a in args.algos.split(",") if a),
        pairs=args.scale,
        kind=args.kind or experiments.TABLE_KINDS[args.table],
        seed=seed,
        gamma=args.gamma,
        train=TrainConfig(epochs=args.epochs, batch_size=args.batch,
                          learning_rate=args.lr),
    )
    md_path = out_dir / "report.md"
    csv_path = out_dir / "report.csv"

    def progress(result):
        print(
            f"cell n={result.n} algo={result.algorithm}: "
            f"{result.metrics.detection_rate:.2f}%",
            file=sys.stderr,
        )

    with open(md_path, "w", encoding="utf-8", newline="\n") as md, \
         open(csv_path, "w", encoding="utf-8", newline="\n") as csv:
        experiments.reproduce_table(
            args.table, args.scale, seed,
            out_md=md, out_csv=csv, kind=args.kind, plan=plan, progress=progress,
        )
    _emit({"report_md": str(md_path), "report_csv": str(csv_path)})
    return 0


def cmd_ri(args) -> int:
    from . import core

    if args.builtin:
        value = core.RandomIndexTable.builtin().lookup(args.n)
        _emit({"n": args.n, "source": "builtin", "ri": value})
        return 0
    seed = 0 if args.seed is None else args.seed
    value = core.random_index(args.n, args.samples, seed)
    _emit({"n": args.n, "source": "monte-carlo", "samples": args.samples,
           "seed": seed, "ri": round(value, 6)})
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "attack": cmd_attack,
    "train": cmd_train,
    "eval": cmd_eval,
    "reproduce": cmd_reproduce,
    "ri": cmd_ri,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    for var in _THREAD_VARS:
        os.environ[var] = str(args.threads)

    from .errors import PcmanipError

    try:
        return _COMMANDS[args.command](args)
    except PcmanipError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
