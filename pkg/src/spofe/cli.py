"""Command-line surface.

Subcommands: run (full pipeline to a JSON report), expand (write the
standardized polynomial feature matrix as CSV), simulate-fdr (Monte-Carlo
FDR/power study), dump-signals (write the kernel-PCA signal matrix and
eigenvalue weights as CSV).

Exit codes: 0 success; 1 numerical or statistical failure; 2 usage or
input errors. Value precedence for run: command-line flags over config
file over built-in defaults. Stage timings go to stderr, never into the
report (report bytes must be reproducible).
"""

import argparse
import csv
import json
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ._version import __version__
from .dataio import PipelineConfig, load_csv, standardize, subsample
from .errors import EmptyInput, ParseError, SpofeError
from .kernels import KernelSpec, center, kernel_matrix
from .kpca import s4gen
from .pipeline import run_pipeline
from .polybasis import build_basis, expand, term_name
from .simulate import SimulationSpec, simulate_fdr

# CLI flag name -> PipelineConfig field.
_CONFIG_FLAGS = {
    "kernel": "kernel",
    "gamma": "gamma",
    "coef0": "coef0",
    "rff_dim": "rff_dim",
    "num_components": "num_components",
    "fdr": "fdr_q",
    "selection": "selection",
    "pvalues": "pvalue_method",
    "seed": "seed",
    "lambda_rule": "lasso_lambda",
    "lasso_tol": "lasso_tol",
    "lasso_max_iter": "lasso_max_iter",
    "delta": "knockoff_delta",
    "max_rows": "max_rows",
    "cv_folds": "cv_folds",
    "ridge_alpha": "ridge_alpha",
}


def _add_config_flags(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("pipeline configuration")
    g.add_argument("--kernel", choices=("cosine", "rbf", "sigmoid", "rff"),
                   default=argparse.SUPPRESS)
    g.add_argument("--gamma", default=argparse.SUPPRESS,
                   help="kernel width, a float or 'auto' (= 1/p)")
    g.add_argument("--coef0", type=float, default=argparse.SUPPRESS,
                   help="sigmoid kernel offset")
    g.add_argument("--rff-dim", type=int, default=argparse.SUPPRESS,
                   help="random feature count for --kernel rff")
    g.add_argument("--num-components", type=int, default=argparse.SUPPRESS,
                   help="number of kernel principal components")
    g.add_argument("--fdr", type=float, default=argparse.SUPPRESS,
                   help="target FDR for the knockoff filter")
    g.add_argument("--selection", default=argparse.SUPPRESS,
                   help="bh:<alpha> | threshold:<alpha> | fixed:<r> | auto")
    g.add_argument("--pvalues", choices=("percentile", "lognormal"),
                   default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help="master seed; all randomness derives from it")
    g.add_argument("--lambda-rule", default=argparse.SUPPRESS,
                   help="lasso penalty: universal | cv | fixed:<value>")
    g.add_argument("--lasso-tol", type=float, default=argparse.SUPPRESS)
    g.add_argument("--lasso-max-iter", type=int, default=argparse.SUPPRESS)
    g.add_argument("--delta", type=float, default=argparse.SUPPRESS,
                   help="knockoff covariance shrinkage")
    g.add_argument("--max-rows", type=int, default=argparse.SUPPRESS,
                   help="row cap; larger inputs are subsampled")
    g.add_argument("--cv-folds", type=int, default=argparse.SUPPRESS)
    g.add_argument("--ridge-alpha", type=float, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spofe",
        description="Sparse interpretable proxies for kernel principal "
                    "components via weighted knockoff selection.",
    )
    parser.add_argument("--version", action="version",
                        version=f"spofe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline on a CSV")
    run.add_argument("--input", required=True, help="input CSV path")
    run.add_argument("--output", default="-",
                     help="report path, '-' for stdout (default)")
    run.add_argument("--config", help="TOML file of flat key = value pairs "
                                      "mirroring the configuration fields")
    run.add_argument("--no-header", action="store_true",
                     help="input CSV has no header row")
    run.add_argument("--component-fits", action="store_true",
                     help="include per-signal fit RMSEs in the report")
    run.add_argument("--dump-stats",
                     help="also write per-signal knockoff statistics as CSV")
    _add_config_flags(run)
    run.set_defaults(func=_cmd_run)

    exp = sub.add_parser("expand",
                         help="write the standardized degree-2 feature "
                              "matrix as CSV")
    exp.add_argument("--input", required=True)
    exp.add_argument("--output", required=True)
    exp.add_argument("--no-header", action="store_true")
    exp.set_defaults(func=_cmd_expand)

    sim = sub.add_parser("simulate-fdr",
                         help="Monte-Carlo FDR/power study on synthetic data")
    sim.add_argument("--n", type=int, default=500)
    sim.add_argument("--p", type=int, default=10)
    sim.add_argument("--k-star", type=int, default=5)
    sim.add_argument("--coef", type=float, default=1.0,
                     help="true coefficient magnitude")
    sim.add_argument("--noise", type=float, default=1.0,
                     help="noise standard deviation")
    sim.add_argument("--fdr", type=float, default=0.2)
    sim.add_argument("--repeats", type=int, default=50)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--delta", type=float, default=0.05)
    sim.add_argument("--lambda-rule", default="universal")
    sim.add_argument("--output", default="-")
    sim.set_defaults(func=_cmd_simulate)

    dmp = sub.add_parser("dump-signals",
                         help="write the signal matrix and eigenvalue "
                              "weights as CSV")
    dmp.add_argument("--input", required=True)
    dmp.add_argument("--no-header", action="store_true")
    dmp.add_argument("--signals-out", help="CSV path for the signal matrix")
    dmp.add_argument("--lambdas-out", help="CSV path for the weights")
    _add_config_flags(dmp)
    dmp.set_defaults(func=_cmd_dump_signals)

    return parser


# ======================================================================
# Command implementations
# ======================================================================

def _build_config(args: argparse.Namespace) -> PipelineConfig:
    values = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "rb") as fh:
            file_values = tomllib.load(fh)
        values.update(file_values)
    for flag, fieldname in _CONFIG_FLAGS.items():
        if hasattr(args, flag):
            values[fieldname] = getattr(args, flag)
    try:
        return PipelineConfig.from_dict(values)
    except (TypeError, ValueError) as e:
        raise _UsageError(str(e)) from None


class _UsageError(Exception):
    pass


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def _cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    data = load_csv(args.input, has_header=not args.no_header)
    report = run_pipeline(
        config, data,
        component_fits=args.component_fits,
        input_name=os.path.basename(args.input),
    )
    _write_text(args.output, report.to_json())
    if args.dump_stats:
        # Re-rank rows by feature index for the debug dump.
        feats = sorted(report.body["per_feature"], key=lambda r: r["index"])
        header = ["index", "name", "score", "p_value"]
        rows = [[f["index"], f["name"], f["score"], f["p_value"]]
                for f in feats]
        with open(args.dump_stats, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([row[0], row[1], repr(float(row[2])),
                                 repr(float(row[3]))])
    for name, seconds in report.timings.items():
        print(f"[spofe] stage={name} seconds={seconds:.3f}", file=sys.stderr)
    return 0


def _cmd_expand(args: argparse.Namespace) -> int:
    data = load_csv(args.input, has_header=not args.no_header)
    data, _ = standardize(data)
    basis = build_basis(data.p)
    fm = expand(basis, data)
    header = [term_name(basis, i, data.column_names)
              for i in range(basis.d_max)]
    _write_csv(args.output, header, fm.psi)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    spec = SimulationSpec(
        n=args.n,
        p=args.p,
        k_star=args.k_star,
        coef_magnitude=args.coef,
        noise_std=args.noise,
        fdr_q=args.fdr,
        repeats=args.repeats,
        seed=args.seed,
        delta=args.delta,
        lambda_rule=args.lambda_rule,
    )
    summary = simulate_fdr(spec)
    _write_text(args.output, json.dumps(summary, indent=2) + "\n")
    return 0


def _cmd_dump_signals(args: argparse.Namespace) -> int:
    if not args.signals_out and not args.lambdas_out:
        raise _UsageError("give --signals-out and/or --lambdas-out")
    config = _build_config(args)
    data = load_csv(args.input, has_header=not args.no_header)
    data = subsample(data, config.max_rows, config.seed)
    data, _ = standardize(data)
    spec = KernelSpec(
        kind=config.kernel, gamma=config.gamma, coef0=config.coef0,
        rff_dim=config.rff_dim, rff_seed=config.seed,
    ).resolve(data.p)
    kc = center(kernel_matrix(spec, data))
    bundle = s4gen(kc, min(config.num_components, kc.n))
    if args.signals_out:
        header = [f"z{j + 1}" for j in range(bundle.m_eff)]
        _write_csv(args.signals_out, header, bundle.signals)
    if args.lambdas_out:
        _write_csv(args.lambdas_out, ["lambda"],
                   [[v] for v in bundle.lambdas])
    return 0


# ======================================================================
# Entry point
# ======================================================================

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        return args.func(args)
    except _UsageError as e:
        print(f"spofe: error [config]: {e}", file=sys.stderr)
        return 2
    except (ParseError, EmptyInput) as e:
        stage = getattr(e, "stage", "load")
        print(f"spofe: error [{stage}]: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"spofe: error [io]: {e}", file=sys.stderr)
        return 2
    except SpofeError as e:
        stage = getattr(e, "stage", "compute")
        print(f"spofe: error [{stage}]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
