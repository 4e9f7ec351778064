"""Command-line entry point: ``sk-stein <command> [options]``."""

import argparse
import json
import logging
import os
import sys
import time

from . import experiments
from .errors import CapacityExceededError, ConvergenceError
from .experiments import ConfigError, default_config, dumps_report, run_experiment, write_outputs
from .sk_model import ModelParams, sample_disorder
from .tap_solver import q_fixed_point, tap_iterate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_CONVERGENCE = 4
EXIT_ASSERT = 5

log = logging.getLogger("skstein")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _run_options(p, with_name=False):
    if with_name:
        p.add_argument("name", choices=experiments.EXPERIMENTS)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--seed", type=_u64, help="master seed")
    p.add_argument("--out", help="output directory for report.json and series.csv")
    p.add_argument("--n", type=_int_list, help="comma-separated system sizes")
    p.add_argument("--beta", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--reps", type=int, help="disorder replications")
    p.add_argument("--backend", choices=experiments.BACKENDS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--assert", dest="check", action="store_true",
                   help="exit with status 5 if any acceptance check fails")


def build_parser():
    parser = argparse.ArgumentParser(prog="sk-stein", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("q-solve", help="solve q = E tanh^2(beta z sqrt(q) + h)")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--h", type=float, required=True)

    tap = sub.add_parser("tap-solve", help="iterate the TAP equations for one disorder draw")
    tap.add_argument("--n", type=int, required=True)
    tap.add_argument("--beta", type=float, required=True)
    tap.add_argument("--h", type=float, required=True)
    tap.add_argument("--seed", type=_u64, default=0)
    tap.add_argument("--damping", type=float, default=0.5)
    tap.add_argument("--tol", type=float, default=1e-10)
    tap.add_argument("--max-iter", type=int, default=1000)

    _run_options(sub.add_parser("experiment", help="run a scaling experiment"), with_name=True)
    _run_options(sub.add_parser("stein-selftest", help="exact identity checks"))
    _run_options(sub.add_parser("approx-lemma", help="approximation lemma on SK fields"))
    return parser


def _config_from_args(name, args):
    data = {}
    if args.config:
        cfg = experiments.ExperimentConfig.from_json(args.config)
        if cfg.experiment != name:
            raise ConfigError(f"config is for {cfg.experiment!r}, not {name!r}")
        data = cfg.to_dict()
    overrides = {
        "master_seed": args.seed,
        "n_list": args.n,
        "beta": args.beta,
        "h": args.h,
        "disorder_replications": args.reps,
        "backend": args.backend,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if data:
        data.update(overrides)
        return experiments.ExperimentConfig.from_dict(data)
    return default_config(name, **overrides)


def _threads(args):
    env = os.environ.get("SK_STEIN_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SK_STEIN_THREADS must be an integer, got {env!r}") from None
    return max(1, args.threads)


def _run(name, args):
    config = _config_from_args(name, args)
    start = time.perf_counter()
    report = run_experiment(config, threads=_threads(args))
    elapsed = time.perf_counter() - start
    if args.out:
        write_outputs(report, args.out)
        with open(os.path.join(args.out, "timing.json"), "w") as fh:
            json.dump({"runtime_seconds": elapsed}, fh)
    else:
        sys.stdout.write(dumps_report(report))
    for check in report["checks"]:
        print(f"{'PASS' if check['passed'] else 'FAIL'}  {check['name']}", file=sys.stderr)
    if args.check and not all(c["passed"] for c in report["checks"]):
        return EXIT_ASSERT
    return EXIT_OK


def _dispatch(args):
    if args.command == "q-solve":
        sol = q_fixed_point(args.beta, args.h)
        print(json.dumps({"q": sol.q, "iterations": sol.iterations, "residual": sol.residual}))
        return EXIT_OK
    if args.command == "tap-solve":
        params = ModelParams(args.n, args.beta, args.h)
        q = q_fixed_point(args.beta, args.h).q
        sol = tap_iterate(sample_disorder(args.n, args.seed), params, q, args.damping, args.tol,
                          args.max_iter)
        print(json.dumps({"q": q, "m": sol.m.tolist(), "iterations": sol.iterations,
                          "residual_sup": sol.residual_sup, "converged": sol.converged}))
        return EXIT_OK if sol.converged else EXIT_CONVERGENCE
    if args.command == "experiment":
        return _run(args.name, args)
    if args.command == "stein-selftest":
        return _run("stein_selftest", args)
    return _run("approx_lemma", args)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except CapacityExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
