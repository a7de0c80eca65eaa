"""Command-line interface.

Subcommands: split, train, predict, evaluate, analyze-covariance,
analyze-dirichlet, gradcheck, stats. Exit codes: 0 success, 1 usage
error, 2 data error, 3 numerical failure.

Training and prediction must see the same observed graph: when a model
was trained against a split manifest, pass the same ``--split`` to
predict/evaluate so the checkpoint's graph fingerprint matches.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import torch

from .data import (
    apply_split_manifest,
    dataset_stats,
    index_token_pairs,
    load_features,
    load_graph,
    load_split_manifest,
    parse_pair_file,
    save_split_manifest,
    split_dataset,
)
from .errors import DataError, NumericsError
from .graph import GraphDomain
from .inducing import resolve_inducing_sizes
from .metrics import auc, average_precision
from .numerics import as_tensor
from .reports import covariance_profile_report, dirichlet_sweep_report
from .svgp import (
    TrainingConfig,
    gradient_check,
    initialize_model,
    link_scores,
    load_checkpoint,
    save_checkpoint,
    train,
)


class _Parser(argparse.ArgumentParser):
    """Argparse variant that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _lambda_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad weight list {text!r}") from None


def _add_io_flags(p, features=True, checkpoint=False):
    p.add_argument("--edges", required=True, help="edge-list file")
    if features:
        p.add_argument("--features", required=True, help="node feature file")
    if checkpoint:
        p.add_argument("--checkpoint", required=True, help="model JSON path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="linkgp",
                     description="Graph-convolutional GP link prediction")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="print dataset statistics")
    _add_io_flags(p, features=False)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="write a train/test split manifest")
    _add_io_flags(p, features=False)
    p.add_argument("--out", required=True, help="manifest JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_io_flags(p, checkpoint=True)
    p.add_argument("--split", help="split manifest; omit to train on all edges")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=int, default=2, dest="depth",
                   help="number of graph convolution steps")
    p.add_argument("--lambda-init", type=_lambda_list, default=None,
                   metavar="W1,W2,...",
                   help="initial interpolation weights (default 0.5,0.3,...)")
    p.add_argument("--lengthscale-init", type=float, default=1.0)
    p.add_argument("--variance-init", type=float, default=1.0)
    p.add_argument("--inducing-nodes", type=int, default=None)
    p.add_argument("--inducing-edges", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--max-epochs", type=int, default=250)
    p.add_argument("--patience-epochs", type=int, default=20)
    p.add_argument("--elbo-tolerance", type=float, default=1e-2)
    p.add_argument("--quadrature-points", type=int, default=20)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score candidate pairs")
    _add_io_flags(p, checkpoint=True)
    p.add_argument("--split", help="split manifest used at training time")
    p.add_argument("--pairs", help="candidate pair file (default: split test pairs)")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--score-mode", default="expected_probability",
                   choices=["expected_probability", "mean_sigmoid"])
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="compute AUC/AP on a split's test set")
    _add_io_flags(p, checkpoint=True)
    p.add_argument("--split", required=True, help="split manifest")
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--score-mode", default="expected_probability",
                   choices=["expected_probability", "mean_sigmoid"])
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze-covariance",
                       help="mean covariance by geodesic distance, per K")
    _add_io_flags(p)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--center", default=None,
                   help="center node token (default: highest degree)")
    p.add_argument("--k-max", type=int, default=9)
    p.add_argument("--max-d", type=int, default=5)
    p.set_defaults(func=cmd_analyze_covariance)

    p = sub.add_parser("analyze-dirichlet",
                       help="mean Dirichlet norm of prior samples, per K")
    _add_io_flags(p)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--k-max", type=int, default=9)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze_dirichlet)

    p = sub.add_parser("gradcheck",
                       help="finite-difference gradient check on a toy instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def _load_observed(args, tokens, g_full):
    """Observed graph plus optional dataset, per the --split flag."""
    if getattr(args, "split", None):
        dataset = apply_split_manifest(g_full, tokens, load_split_manifest(args.split))
        return dataset.observed_graph, dataset
    return g_full, None


def cmd_stats(args) -> int:
    g, _ = load_graph(args.edges)
    n, e, avg = dataset_stats(g)
    print(f"{n} nodes, {e} edges, avg degree {avg:.2f}")
    return 0


def cmd_split(args) -> int:
    g, tokens = load_graph(args.edges)
    dataset = split_dataset(g, args.test_fraction, args.seed)
    save_split_manifest(dataset, tokens, args.out, seed=args.seed,
                        test_fraction=args.test_fraction)
    print(f"wrote {args.out}: {len(dataset.test_positives)} test positives, "
          f"{len(dataset.train_positives)} train positives")
    return 0


def cmd_train(args) -> int:
    g_full, tokens = load_graph(args.edges)
    x = load_features(args.features, tokens)
    if args.split:
        observed, dataset = _load_observed(args, tokens, g_full)
    else:
        dataset = split_dataset(g_full, 0.0, args.seed)
        observed = dataset.observed_graph
    config = TrainingConfig(
        learning_rate=args.learning_rate, batch_size=args.batch_size,
        max_epochs=args.max_epochs, patience_epochs=args.patience_epochs,
        elbo_tolerance=args.elbo_tolerance,
        quadrature_points=args.quadrature_points, seed=args.seed,
    )
    sizes = resolve_inducing_sizes(observed, args.inducing_nodes,
                                   args.inducing_edges)
    result = train(
        observed, x, dataset.train_pairs, dataset.train_labels,
        node_tokens=tokens, conv_depth=args.depth,
        lambda_init=args.lambda_init, variance_init=args.variance_init,
        lengthscale_init=args.lengthscale_init, inducing_sizes=sizes,
        config=config,
    )
    save_checkpoint(result.model, args.checkpoint)
    final = result.elbo_trace[-1] if result.elbo_trace else None
    print(f"wrote {args.checkpoint}: {result.n_epochs} epochs, "
          f"final elbo {final}")
    return 0


def cmd_predict(args) -> int:
    if not args.pairs and not args.split:
        raise ValueError("predict requires --pairs or --split")
    g_full, tokens = load_graph(args.edges)
    x = load_features(args.features, tokens)
    observed, dataset = _load_observed(args, tokens, g_full)
    model = load_checkpoint(args.checkpoint, observed, x, tokens)
    if args.pairs:
        token_pairs = parse_pair_file(args.pairs)
        pairs = index_token_pairs(token_pairs, tokens)
    else:
        pairs = dataset.test_pairs
        token_pairs = [(tokens[i], tokens[j]) for i, j in pairs.tolist()]
    scores = link_scores(model, pairs, mode=args.score_mode)
    lines = [f"{a},{b},{s!r}" for (a, b), s in zip(token_pairs, scores.tolist())]
    body = "token_a,token_b,score\n" + "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
    return 0


def cmd_evaluate(args) -> int:
    g_full, tokens = load_graph(args.edges)
    x = load_features(args.features, tokens)
    observed, dataset = _load_observed(args, tokens, g_full)
    if dataset is None or len(dataset.test_pairs) == 0:
        raise DataError("split manifest has an empty test set")
    model = load_checkpoint(args.checkpoint, observed, x, tokens)
    scores = link_scores(model, dataset.test_pairs, mode=args.score_mode)
    labels = dataset.test_labels
    doc = {
        "auc": auc(scores, labels),
        "ap": average_precision(scores, labels),
        "n_test": int(labels.shape[0]),
        "elbo_final": model.final_elbo,
        "seed": model.training_config.seed if model.training_config else None,
    }
    text = json.dumps(doc)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
    return 0


def cmd_analyze_covariance(args) -> int:
    g, tokens = load_graph(args.edges)
    x = load_features(args.features, tokens)
    if args.center is None:
        center = int(np.argmax(g.degrees))
    else:
        if args.center not in tokens:
            raise DataError(f"unknown center token {args.center!r}")
        center = tokens.index(args.center)
    covariance_profile_report(g, x, center, range(args.k_max + 1), args.out,
                              max_d=args.max_d)
    print(f"wrote {args.out}")
    return 0


def cmd_analyze_dirichlet(args) -> int:
    g, tokens = load_graph(args.edges)
    x = load_features(args.features, tokens)
    dirichlet_sweep_report(g, x, range(args.k_max + 1), args.out,
                           n_samples=args.samples, seed=args.seed)
    print(f"wrote {args.out}")
    return 0


def _gradcheck_instance(seed: int):
    """Small fixed graph with random features, state nudged off the origin."""
    rng = np.random.default_rng(seed)
    ring = [(i, (i + 1) % 8) for i in range(8)]
    edges = np.asarray(ring + [(0, 2), (3, 6)], dtype=np.int64)
    g = GraphDomain.from_edges(edges)
    x = rng.standard_normal((8, 3))
    model = initialize_model(
        g, x, conv_depth=2, inducing_sizes=(4, 4),
        config=TrainingConfig(seed=seed),
    )
    m = model.n_inducing
    with torch.no_grad():
        model.leaves["variational.mean"].add_(
            as_tensor(0.2 * rng.standard_normal(m)))
        model.leaves["variational.raw_scale"].add_(
            torch.tril(as_tensor(0.05 * rng.standard_normal((m, m)))))
    pairs = np.asarray([(0, 1), (2, 5), (3, 7), (1, 6), (4, 5), (0, 7)],
                       dtype=np.int64)
    labels = np.asarray([1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    return model, pairs, labels


def cmd_gradcheck(args) -> int:
    model, pairs, labels = _gradcheck_instance(args.seed)
    result = gradient_check(model, pairs, labels)
    for name, err in sorted(result.per_group.items()):
        print(f"{name}: {err:.3e}")
    print(f"max relative error: {result.max_rel_error:.3e}")
    if result.max_rel_error > args.tol:
        raise NumericsError(
            f"gradient check failed: {result.max_rel_error:.3e} > {args.tol:g}"
        )
    return 0


def main(argv=None) -> int:
    torch.set_num_threads(1)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
