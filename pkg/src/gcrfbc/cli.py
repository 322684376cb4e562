"""Command line: generate -> train -> predict / evaluate, and benchmark.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import BENCH_OPTIMIZER, benchmark
from .errors import ConditioningError, DefinitenessError, GCRFError
from .inference import QuadConfig, predict
from .io import load_dataset, load_model, save_dataset, save_model
from .metrics import evaluate
from .optimize import OptimizerConfig, fit
from .synthetic import GenConfig, generate, split

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("gcrfbc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_config(path):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def _quad(args):
    try:
        return QuadConfig(args.quad_points, args.interval_width)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_generate(args):
    cfg = _read_config(args.config)
    cfg = dict(cfg.get("generate", cfg))
    for key in ("n_nodes", "n_instances", "labeler"):
        if getattr(args, key) is not None:
            cfg[key] = getattr(args, key)
    if args.alpha is not None:
        cfg["alpha_true"] = args.alpha
    if args.beta is not None:
        cfg["beta_true"] = args.beta
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        gen = GenConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad generator config: {exc}") from exc
    data = generate(gen)
    if args.test_out:
        train, test = split(data, args.test_fraction, seed=gen.seed)
        save_dataset(args.out, train)
        save_dataset(args.test_out, test)
        log.info("wrote %d train / %d test instances", len(train), len(test))
    else:
        save_dataset(args.out, data)
    return EXIT_OK


def cmd_train(args):
    cfg = _read_config(args.config)
    cfg = dict(cfg.get("optimizer", cfg))
    try:
        opt = OptimizerConfig(**cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad optimizer config: {exc}") from exc
    data = load_dataset(args.data)
    report = fit(args.variant, data, cfg=opt)
    save_model(args.out, report.final_params, report.final_xi, args.variant)
    log.info("%s: objective %.6g after %d iterations (converged=%s)",
             args.variant, report.objective, report.iterations, report.converged)
    if args.trace:
        Path(args.trace).write_text("\n".join(f"{v:.17g}" for v in report.objective_trace) + "\n")
    return EXIT_OK


def _model_variant(args, stored):
    return args.variant or stored


def cmd_predict(args):
    params, _, stored = load_model(args.model)
    data = load_dataset(args.data)
    res = predict(_model_variant(args, stored), params, data, _quad(args))
    rows = ["instance,node,prob,mu,marginal_var"]
    for j in range(res.probs.shape[0]):
        for i in range(res.probs.shape[1]):
            rows.append(f"{j},{i},{res.probs[j, i]:.17g},{res.mu[j, i]:.17g},{res.marginal_var[j, i]:.17g}")
    _emit("\n".join(rows) + "\n", args.out)
    return EXIT_OK


def cmd_evaluate(args):
    params, _, stored = load_model(args.model)
    data = load_dataset(args.data)
    rep = evaluate(_model_variant(args, stored), params, data, _quad(args), n_jobs=args.jobs)
    d = rep.to_dict()
    if args.out and args.out.endswith(".json"):
        _emit(json.dumps(d, indent=1) + "\n", args.out)
    else:
        buf = [",".join(d), ",".join(str(v) for v in d.values())]
        _emit("\n".join(buf) + "\n", args.out)
    return EXIT_OK


def _parse_grid(text):
    cells = []
    for part in text.split(","):
        try:
            m, n = part.split(":")
            cells.append((int(m), int(n)))
        except ValueError as exc:
            raise UsageError(f"grid cell {part!r} is not M:N") from exc
    return cells


def cmd_benchmark(args):
    cfg = _read_config(args.config)
    grid = _parse_grid(args.grid) if args.grid else [tuple(c) for c in cfg.get("grid", [])]
    if not grid:
        raise UsageError("benchmark needs a non-empty grid (--grid M:N,... or config 'grid')")
    opt = BENCH_OPTIMIZER
    if "optimizer" in cfg:
        opt = OptimizerConfig(**cfg["optimizer"])
    variants = (args.variant,) if args.variant else ("b", "nb")
    rep = benchmark(grid, seed=args.seed or 0, variants=variants, cfg=opt, repeats=args.repeats)
    _emit(rep.to_csv(), args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="gcrfbc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, variant_required=False):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (stdout if omitted where allowed)")
        sp.add_argument("--variant", choices=("b", "nb"), required=variant_required)

    def quad(sp):
        sp.add_argument("--quad-points", type=int, default=QuadConfig.n_points)
        sp.add_argument("--interval-width", type=float, default=QuadConfig.width)

    g = sub.add_parser("generate", help="draw a synthetic dataset")
    common(g)
    g.add_argument("--n-nodes", type=int)
    g.add_argument("--n-instances", type=int)
    g.add_argument("--alpha", type=float, nargs="+")
    g.add_argument("--beta", type=float, nargs="+")
    g.add_argument("--labeler", choices=("bc_b", "bc_nb"))
    g.add_argument("--test-out", help="also split and write the held-out part here")
    g.add_argument("--test-fraction", type=float, default=0.2)
    g.set_defaults(func=cmd_generate, needs_out=True)

    t = sub.add_parser("train", help="fit a model to a labeled dataset")
    common(t, variant_required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--trace", help="write the objective trace here")
    t.set_defaults(func=cmd_train, needs_out=True)

    pr = sub.add_parser("predict", help="per-node probabilities as CSV")
    common(pr)
    quad(pr)
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.set_defaults(func=cmd_predict, needs_out=False)

    e = sub.add_parser("evaluate", help="AUC, likelihood and variance norm")
    common(e)
    quad(e)
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--jobs", type=int, default=1, help="threads for per-instance evaluation")
    e.set_defaults(func=cmd_evaluate, needs_out=False)

    b = sub.add_parser("benchmark", help="time learning and inference over an (M, N) grid")
    common(b)
    b.add_argument("--grid", help="comma-separated M:N cells, e.g. 50:4,100:4")
    b.add_argument("--repeats", type=int, default=1)
    b.set_defaults(func=cmd_benchmark, needs_out=False)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.needs_out and not args.out:
        parser.error(f"{args.command} requires --out")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gcrfbc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DefinitenessError, ConditioningError, np.linalg.LinAlgError) as exc:
        print(f"gcrfbc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GCRFError, OSError) as exc:
        print(f"gcrfbc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
