"""Command-line surface.

Every error path exits nonzero with a one-line ``error:<category>:``
prefix on stderr; exit codes are 2 for usage, 3 for data, 4 for
numeric/config problems.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import (
    LikelihoodFactor,
    LikelihoodSpec,
    SelectionRegion,
    YieldConfig,
    composite_log_likelihood,
    integrate_region,
    optimize_selection,
)
from .bench import BENCH_COLUMNS, benchmark
from .crossval import (
    Bandwidths,
    loo_quality_curve,
    quality_kernel,
    select_alpha,
    silverman_bandwidths,
)
from .errors import ConfigError, DataError, DetreeError, UsageError
from .growth import StopCondition, grow
from .io import load_csv, sample_grid, write_csv, write_table_csv, _fmt
from .pruning import apply_alpha, prune_sequence
from .smoothing import InterpolatedTree, SmearedTree
from .synthetic import generate_synthetic, preset_spec, spec_from_doc
from .tree import DensityTree, bounding_box


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise ConfigError(f"bad {what} list {text!r}") from None


def _parse_bins(text: str) -> list[int]:
    try:
        return [int(v) for v in text.lower().split("x")]
    except ValueError:
        raise ConfigError(f"bad bin specification {text!r}; use e.g. 200x200") from None


def _parse_region(text: str) -> SelectionRegion:
    intervals = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"bad region component {part!r}; use name:[lo,hi]")
        name, rest = part.split(":", 1)
        rest = rest.strip()
        if not (rest.startswith("[") and rest.endswith("]")):
            raise ConfigError(f"bad region interval {rest!r}; use [lo,hi]")
        pieces = rest[1:-1].split(",")
        if len(pieces) != 2:
            raise ConfigError(f"bad region interval {rest!r}; use [lo,hi]")
        try:
            a, b = float(pieces[0]), float(pieces[1])
        except ValueError:
            raise ConfigError(f"bad region interval {rest!r}") from None
        intervals[name.strip()] = (a, b)
    if not intervals:
        raise ConfigError(f"empty region specification {text!r}")
    return SelectionRegion(intervals)


def _format_region(region: SelectionRegion) -> str:
    return ";".join(
        f"{name}:[{_fmt(a)},{_fmt(b)}]"
        for name, (a, b) in sorted(region.intervals.items())
    )


def _load_model(path: str) -> DensityTree:
    try:
        return DensityTree.load(path)
    except FileNotFoundError:
        raise DataError(f"model file does not exist: {path}") from None


def _smeared_from_flag(tree: DensityTree, smear: str) -> SmearedTree:
    return SmearedTree(tree, Bandwidths(_parse_float_list(smear, "bandwidth")))


# -- commands ---------------------------------------------------------------


def cmd_train(args) -> int:
    columns = args.columns.split(",") if args.columns else None
    data = load_csv(args.input, columns)
    min_widths = (
        _parse_float_list(args.min_widths, "min-widths") if args.min_widths else None
    )
    stop = StopCondition(
        min_count=args.min_count, min_widths=min_widths, max_leaves=args.max_leaves
    )
    box = bounding_box(data)
    tree = grow(data, stop, box=box)
    profile = prune_sequence(tree, args.complexity)
    if args.cv == "kernel":
        bw = (
            Bandwidths(_parse_float_list(args.bandwidths, "bandwidth"))
            if args.bandwidths
            else silverman_bandwidths(data, args.silverman_factor)
        )
        curve = quality_kernel(tree, profile, data, bw)
        alpha = select_alpha(curve)
    elif args.cv == "loo":
        curve = loo_quality_curve(data, stop, args.complexity, box=box, cap=args.loo_cap)
        alpha = select_alpha(curve)
    else:
        alpha = args.alpha if args.alpha is not None else 0.0
    pruned = apply_alpha(tree, profile, alpha)
    pruned.save(args.output)
    print(f"n_leaves={pruned.n_leaves}")
    print(f"alpha={_fmt(alpha)}")
    print(f"model={args.output}")
    return 0


def cmd_eval(args) -> int:
    tree = _load_model(args.model)
    data = load_csv(args.input, tree.columns)
    model = _smeared_from_flag(tree, args.smear) if args.smear else tree
    dens = model.evaluate_many(data.data)
    columns = list(tree.columns) + ["density"]
    rows = np.column_stack([data.data, dens])
    if args.output:
        write_csv(args.output, columns, rows)
    else:
        write_csv(sys.stdout, columns, rows)
    return 0


def cmd_grid(args) -> int:
    tree = _load_model(args.model)
    if args.smear and args.interpolate:
        raise UsageError("--smear and --interpolate are mutually exclusive")
    if args.smear:
        model = _smeared_from_flag(tree, args.smear)
    elif args.interpolate:
        model = InterpolatedTree(tree)
    else:
        model = tree
    bins = _parse_bins(args.bins)
    columns, rows = sample_grid(model, tree.box, bins, columns=tree.columns)
    write_csv(args.output, columns, rows)
    return 0


def cmd_integrate(args) -> int:
    tree = _load_model(args.model)
    region = _parse_region(args.region)
    for name in region.intervals:
        if name not in tree.columns:
            raise ConfigError(f"region names unknown column '{name}'")
    value = integrate_region(tree, region)
    print(f"integral={_fmt(value)}")
    return 0


def cmd_optimize(args) -> int:
    signal = _load_model(args.signal)
    background = _load_model(args.background)
    yields = YieldConfig(args.s_yield, args.b_yield)
    dims = [d.strip() for d in args.dims.split(",") if d.strip()]
    region, metric = optimize_selection(signal, background, yields, dims)
    print(f"region={_format_region(region)}")
    print(f"metric={_fmt(metric)}")
    return 0


def cmd_likelihood(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"spec file does not exist: {args.spec}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"spec file is not valid JSON: {exc}") from exc
    try:
        factor_docs = doc["factors"]
    except (KeyError, TypeError):
        raise ConfigError("likelihood spec must contain a 'factors' list") from None
    factors = []
    for fd in factor_docs:
        try:
            model_path = fd["model"]
        except (KeyError, TypeError):
            raise ConfigError("each factor needs a 'model' path") from None
        model = _load_model(model_path)
        if fd.get("smear"):
            model = SmearedTree(model, Bandwidths(fd["smear"]))
        factors.append(
            LikelihoodFactor(
                model=model,
                role=fd.get("role", "numerator"),
                mapping=fd.get("map", {}),
                conditional_dim=fd.get("conditional_dim"),
            )
        )
    spec = LikelihoodSpec(factors)
    record_columns = spec.record_columns()
    data = load_csv(args.input, record_columns)
    scores = np.empty(data.n_tot)
    for i, row in enumerate(data.data):
        record = dict(zip(record_columns, row))
        scores[i] = composite_log_likelihood(spec, record)
    columns = record_columns + ["log_likelihood"]
    rows = np.column_stack([data.data, scores])
    if args.output:
        write_csv(args.output, columns, rows)
    else:
        write_csv(sys.stdout, columns, rows)
    return 0


def cmd_synth(args) -> int:
    if args.spec:
        try:
            with open(args.spec, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise DataError(f"spec file does not exist: {args.spec}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"spec file is not valid JSON: {exc}") from exc
        spec = spec_from_doc(doc, args.n, args.seed)
    else:
        spec = preset_spec(args.preset, args.n, args.seed, args.subset)
    table = generate_synthetic(spec)
    if args.output:
        write_table_csv(args.output, table)
    else:
        write_table_csv(sys.stdout, table)
    return 0


def cmd_bench(args) -> int:
    sizes = _parse_int_list(args.sizes, "sizes")
    bins = _parse_bins(args.grid)
    rows = benchmark(
        sizes, stop_variant=args.stop, grid_bins=bins, reps=args.reps, seed=args.seed
    )

    def emit(fh):
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            n_tot, n_leaves, *times = row.astuple()
            fh.write(
                ",".join([str(n_tot), str(n_leaves)] + [_fmt(t) for t in times]) + "\n"
            )

    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            emit(fh)
    else:
        emit(sys.stdout)
    return 0


# -- parser -----------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="detree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a density tree from CSV data")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", help="comma-separated column names (default: all)")
    p.add_argument("--min-count", type=int, required=True)
    p.add_argument("--min-widths", help="comma-separated minimal leaf widths")
    p.add_argument("--max-leaves", type=int)
    p.add_argument("--complexity", choices=["leaves", "depth"], default="leaves")
    p.add_argument("--bandwidths", help="comma-separated kernel widths")
    p.add_argument("--silverman-factor", type=float, default=2.0)
    p.add_argument("--cv", choices=["kernel", "loo", "none"], default="kernel")
    p.add_argument("--alpha", type=float, help="fixed alpha when --cv none")
    p.add_argument("--loo-cap", type=int, default=500)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on CSV rows")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--smear", help="comma-separated resolution widths")
    p.add_argument("--output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="sample a model on a midpoint grid")
    p.add_argument("--model", required=True)
    p.add_argument("--bins", required=True, help="e.g. 200x200")
    p.add_argument("--smear", help="comma-separated resolution widths")
    p.add_argument("--interpolate", action="store_true")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("integrate", help="integrate a model over a region")
    p.add_argument("--model", required=True)
    p.add_argument("--region", required=True, help='e.g. "a:[0,1];b:[2,3]"')
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("optimize", help="optimize a rectangular selection")
    p.add_argument("--signal", required=True)
    p.add_argument("--background", required=True)
    p.add_argument("--s-yield", type=float, required=True)
    p.add_argument("--b-yield", type=float, required=True)
    p.add_argument("--dims", required=True, help="comma-separated dimensions")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("likelihood", help="composite log-likelihood scores")
    p.add_argument("--spec", required=True, help="JSON factor specification")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("synth", help="generate a synthetic sample")
    p.add_argument("--preset", default="d0-demo")
    p.add_argument("--subset", choices=["all", "signal", "sideband"], default="all")
    p.add_argument("--spec", help="JSON mixture specification (overrides preset)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="timing study over sample sizes")
    p.add_argument("--sizes", required=True, help="comma-separated ascending sizes")
    p.add_argument("--stop", choices=["tight", "loose"], default="tight")
    p.add_argument("--grid", default="200x200")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error:usage:{exc}", file=sys.stderr)
        return UsageError.exit_code
    except DetreeError as exc:
        print(f"error:{exc.category}:{exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error:data:{exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
