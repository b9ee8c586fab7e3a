"""Command-line front end: generate, detect, test, rho, simulate.

Exit codes: 0 success, 1 error, 2 test not applicable (k_hat * p_hat <= 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .detect import DetectConfig, detect
from .graph import ParseError, format_edge_list, format_labels, read_edge_list, write_atomic
from .hyptest import NOT_APPLICABLE, run_test
from .models import VARIANTS, ModelError, ModelSpec, ground_truth, max_pop_rho, pop_rho, sample
from .sim import Experiment, run_experiment

EXIT_OK, EXIT_ERROR, EXIT_NOT_APPLICABLE = 0, 1, 2

logger = logging.getLogger("cpinfer")


class CliError(Exception):
    pass


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=VARIANTS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sparsity", type=float, default=1.0)
    p.add_argument("--p", type=float)
    p.add_argument("--p11", type=float)
    p.add_argument("--p12", type=float)
    p.add_argument("--p22", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--theta-core", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--theta-periphery", type=float, nargs=2, metavar=("A", "B"))


def build_parser() -> argparse.ArgumentParser:
    # --seed is accepted before or after the subcommand
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (u64)")

    parser = argparse.ArgumentParser(prog="cpinfer", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[seed_parent], help="sample a graph from a model")
    _add_model_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")

    p = sub.add_parser("detect", parents=[seed_parent], help="estimate core-periphery labels")
    p.add_argument("--graph", required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--fixed-k", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("test", parents=[seed_parent], help="test for core-periphery structure")
    p.add_argument("--graph", required=True)
    p.add_argument("--null", required=True, choices=("er", "cl", "both"))
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rho", parents=[seed_parent], help="population CP strength of a model")
    _add_model_flags(p)

    p = sub.add_parser("simulate", parents=[seed_parent], help="run a Monte-Carlo experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int)
    return parser


def _entropy_seed() -> int:
    seed = int(np.random.SeedSequence().generate_state(2, dtype=np.uint32).view(np.uint64)[0])
    print(f"cpinfer: seed {seed}", file=sys.stderr)
    return seed


def _spec_from_args(args, seed) -> ModelSpec:
    obj = {"variant": args.model, "n": args.n, "sparsity": args.sparsity, "params": {}}
    for name in ("p", "p11", "p12", "p22", "k"):
        v = getattr(args, name)
        if v is not None:
            obj["params"][name] = v
    if args.model in ("cl", "cpdcbm"):
        if args.theta_core is None:
            raise CliError(f"--model {args.model} needs --theta-core A B")
        obj["theta"] = {"core": args.theta_core, "periphery": args.theta_periphery or args.theta_core}
    elif args.theta_core is not None or args.theta_periphery is not None:
        raise CliError(f"--model {args.model} takes no theta")
    return ModelSpec.from_json(obj, seed)


def _read_graph(path: str):
    try:
        return read_edge_list(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def cmd_generate(args, seed: int) -> int:
    theta_seq, sample_seq = np.random.SeedSequence(seed).spawn(2)
    spec = _spec_from_args(args, theta_seq)
    g, truth = sample(spec, sample_seq)
    write_atomic(args.out, format_edge_list(g))
    if args.labels_out:
        if not truth.has_cp:
            logger.warning("model %s has no planted labels; %s not written", spec.variant, args.labels_out)
        else:
            write_atomic(args.labels_out, format_labels(truth.labels))
    logger.info("wrote %d nodes, %d edges to %s", g.n, g.m, args.out)
    return EXIT_OK


def cmd_detect(args, seed: int) -> int:
    parsed = _read_graph(args.graph)
    cfg = DetectConfig(restarts=args.restarts, fixed_k=args.fixed_k, seed=seed, workers=args.workers)
    result = detect(parsed.graph, cfg)
    obj = result.to_json()
    obj["node_ids"] = parsed.node_ids
    write_atomic(args.out, json.dumps(obj) + "\n")
    logger.info("k=%d T=%.6g", result.k, result.t_value)
    return EXIT_OK


def cmd_test(args, seed: int) -> int:
    parsed = _read_graph(args.graph)
    report = run_test(parsed.graph, DetectConfig(restarts=args.restarts, seed=seed), args.null)
    write_atomic(args.out, report.dumps() + "\n")
    logger.info("interpretation: %s", report.interpretation)
    if report.interpretation == NOT_APPLICABLE:
        print(f"cpinfer: test not applicable: k_hat * p_hat = {report.k_hat * report.p_hat:.4g} <= 1",
              file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    return EXIT_OK


def cmd_rho(args, seed: int) -> int:
    spec = _spec_from_args(args, seed)
    best = max_pop_rho(spec)
    truth = ground_truth(spec)
    at_truth = None
    if truth.has_cp and 1 <= truth.labels.k <= spec.n - 2:
        at_truth = pop_rho(spec, truth.labels)
    out = {"rho_tilde": best.value, "rho_truth": at_truth, "method": best.method}
    print(json.dumps(out))
    return EXIT_OK


def cmd_simulate(args, seed: int | None) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.config}: invalid JSON: {exc}") from None
    if seed is not None:
        obj["seed"] = seed
    elif "seed" not in obj:
        obj["seed"] = _entropy_seed()
    if args.workers is not None:
        obj["workers"] = args.workers
    exp = Experiment.from_json(obj)
    for r in run_experiment(exp, args.out_dir):
        logger.info("grid %d %s mean=%.4g se=%.3g failed=%d",
                    r.grid_index, r.metric, r.mean, r.se if not math.isnan(r.se) else 0.0, r.n_failed)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "detect": cmd_detect,
    "test": cmd_test,
    "rho": cmd_rho,
    "simulate": cmd_simulate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="cpinfer: %(message)s", stream=sys.stderr)
    seed = args.seed
    if seed is None and args.command != "simulate":
        seed = _entropy_seed()
    try:
        return COMMANDS[args.command](args, seed)
    except (CliError, ParseError, ModelError, ValueError, RuntimeError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"cpinfer: error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
