"""Command-line frontend: CSV in, JSON or CSV reports out.

Three subcommands:

``test``
    Load a dataset, apply the chosen model adjustment, estimate sigma, build
    the scale set, run the bootstrap, and write a JSON report.
``mc``
    Run the Monte Carlo harness over a grid of designs and write the result
    table as CSV or human-readable text.
``diag``
    List the scale set and the sensitivity diagnostic A_n for a dataset
    without running the test itself.

Exit codes: 0 success, 2 data or configuration error, 3 degenerate variance
on every scale.  Reports use fixed field order and 17 significant digits, so
identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys

import numpy as np

from .bootstrap import BootConfig, TestReport, run_report
from .errors import DataError, DegenerateVarianceError
from .models import (
    additive_adjust,
    additive_series_fit,
    endogenous_adjust,
    partial_linear_adjust,
    selection_adjust,
)
from .scales import KERNELS, build_basic_set, build_custom_set, build_z_local_set
from .sigma import SIGMA_METHODS, estimate_sigma
from .simlab import McDesign, results_to_csv, results_to_text, run_mc
from .statistic import Sample, sensitivity_A

__all__ = ["main", "build_parser", "load_csv", "load_columns", "report_to_json"]

MODELS = (
    "simple",
    "partial-linear",
    "additive",
    "nonparametric-z",
    "endogenous",
    "selection",
)

CV_CHOICES = ("pi", "os", "sd")


# ---------------------------------------------------------------- CSV input


def load_columns(path: str, names) -> dict[str, np.ndarray]:
    """Read the named columns from a headered CSV file as float arrays.

    Rejects missing columns, blank or non-numeric cells (naming the row and
    column), non-finite values, and files with fewer than two data rows.
    """
    names = list(names)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        idx = {}
        for name in names:
            if name not in header:
                raise DataError(f"{path}: missing column {name!r} (header: {header})")
            idx[name] = header.index(name)
        cols: dict[str, list[float]] = {name: [] for name in names}
        for rownum, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            for name in names:
                j = idx[name]
                cell = row[j].strip() if j < len(row) else ""
                if cell == "":
                    raise DataError(f"{path}: blank cell at row {rownum}, column {name!r}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at row {rownum}, column {name!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite value {cell!r} at row {rownum}, column {name!r}"
                    )
                cols[name].append(v)
    n = len(cols[names[0]])
    if n < 2:
        raise DataError(f"{path}: need at least two data rows, found {n}")
    return {name: np.asarray(vals, dtype=float) for name, vals in cols.items()}


def load_csv(path: str, x_col: str = "x", y_col: str = "y", z_cols=()) -> Sample:
    """Load a Sample from a CSV file, preserving row order."""
    z_cols = list(z_cols)
    cols = load_columns(path, [x_col, y_col, *z_cols])
    z = np.column_stack([cols[c] for c in z_cols]) if z_cols else None
    return Sample(cols[x_col], cols[y_col], z=z)


# ------------------------------------------------------------- JSON output


def _json_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(i) for i in v) + "]"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    raise TypeError(f"cannot render {type(v).__name__} in a report")


def _render_json(pairs) -> str:
    lines = [f"  {json.dumps(k)}: {_json_value(v)}" for k, v in pairs]
    return "{\n" + ",\n".join(lines) + "\n}\n"


def report_to_json(report: TestReport, extra_warnings=()) -> str:
    """Serialize a TestReport with the fixed monotest/1 field order."""
    p_scales, selected_os, selected_sd = report.selected_sizes
    pairs = [
        ("schema", "monotest/1"),
        ("T", report.T),
        ("method", report.method),
        ("critical_value", report.critical_value),
        ("p_value", report.p_value),
        ("alpha", report.alpha),
        ("gamma", report.gamma),
        ("B", report.B),
        ("seed", report.seed),
        ("n", report.n),
        ("p_scales", p_scales),
        ("selected_os", selected_os),
        ("selected_sd", selected_sd),
        ("stepdown_iterations", report.stepdown_iterations),
        ("A_n", report.A_n),
        ("sigma_method", report.sigma_method),
        ("model", report.model),
        ("warnings", list(extra_warnings) + list(report.warnings)),
    ]
    return _render_json(pairs)


def _write_out(out: str, text: str) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_error(exc: BaseException) -> None:
    sys.stderr.write(
        _render_json(
            [
                ("schema", "monotest/error1"),
                ("error", type(exc).__name__),
                ("message", str(exc)),
            ]
        )
    )


# --------------------------------------------------------- model dispatch


def _split(opt: str) -> list[str]:
    return [s.strip() for s in opt.split(",") if s.strip()] if opt else []


def _float_list(opt: str, flag: str) -> list[float]:
    try:
        vals = [float(s) for s in _split(opt)]
    except ValueError:
        raise DataError(f"--{flag}: could not parse {opt!r} as comma-separated numbers") from None
    if not vals:
        raise DataError(f"--{flag}: empty list")
    return vals


def _int_list(opt: str, flag: str) -> list[int]:
    try:
        vals = [int(s) for s in _split(opt)]
    except ValueError:
        raise DataError(f"--{flag}: could not parse {opt!r} as comma-separated integers") from None
    if not vals:
        raise DataError(f"--{flag}: empty list")
    return vals


def _z_grid(z: np.ndarray, cells: int) -> list[tuple[float, ...]]:
    # one location per quantile cell midpoint, crossed over z dimensions
    if cells < 1:
        raise DataError("--z-cells must be >= 1")
    levels = [(2 * i + 1) / (2 * cells) for i in range(cells)]
    per_dim = [np.quantile(z[:, j], levels) for j in range(z.shape[1])]
    return [tuple(float(v) for v in combo) for combo in itertools.product(*per_dim)]


def _z_bandwidths(z: np.ndarray, cells: int, override: str) -> list[float]:
    if override:
        return _float_list(override, "z-bw")
    spread = max(float(np.ptp(z[:, j])) for j in range(z.shape[1]))
    if spread <= 0:
        raise DataError("z columns are constant; cannot pick a z-cell bandwidth")
    return [spread / cells]


def _prepare_case(args):
    """Load data, apply the model adjustment, and build the scale set."""
    z_cols = _split(args.z_cols)
    u_cols = _split(args.u_cols)
    model = args.model
    extra_warnings: list[str] = []

    if model in ("partial-linear", "additive", "nonparametric-z", "selection") and not z_cols:
        raise DataError(f"model {model!r} needs --z-cols")
    if model == "endogenous" and not u_cols:
        raise DataError("model 'endogenous' needs --u-cols")
    if model == "selection" and not args.d_col:
        raise DataError("model 'selection' needs --d-col")

    names = [args.x_col, args.y_col] + z_cols + u_cols
    if model == "selection":
        names.append(args.d_col)
    cols = load_columns(args.data, names)
    x, y = cols[args.x_col], cols[args.y_col]
    z = np.column_stack([cols[c] for c in z_cols]) if z_cols else None

    if model == "simple":
        base = Sample(x, y, z=z)
    elif model == "partial-linear":
        base = partial_linear_adjust(
            Sample(x, y, z=z), first_stage_degree=args.first_stage_degree
        ).base
    elif model == "additive":
        sample = Sample(x, y, z=z)
        fit = additive_series_fit(sample.x, sample.z, sample.y, L=args.L)
        base = additive_adjust(sample, fit.g_hat).base
    elif model == "nonparametric-z":
        base = Sample(x, y, z=z)
    elif model == "endogenous":
        u = np.column_stack([cols[c] for c in u_cols])
        base = endogenous_adjust(
            x, u, y, first_stage_degree=args.first_stage_degree, L=args.L
        ).base
    else:
        adj = selection_adjust(
            x, z, cols[args.d_col], y, pscore_degree=args.pscore_degree, L=args.L
        )
        base = adj.base
        extra_warnings.extend(adj.nuisance["warnings"])

    kernel = KERNELS[args.kernel]
    if args.h_set:
        set_ = build_custom_set(
            np.unique(base.x), _float_list(args.h_set, "h-set"), k=args.k, kernel=kernel
        )
    else:
        set_ = build_basic_set(base.x, k=args.k, kernel=kernel)
    if model == "nonparametric-z":
        set_ = build_z_local_set(
            set_,
            _z_grid(base.z, args.z_cells),
            _z_bandwidths(base.z, args.z_cells, args.z_bw),
            z_kernel=kernel,
        )
    return base, set_, extra_warnings


def _estimate(args, base: Sample):
    return estimate_sigma(base, args.sigma, b_n=args.sigma_bn, degree=args.sigma_degree)


# ------------------------------------------------------------- subcommands


def _cmd_test(args) -> int:
    base, set_, extra_warnings = _prepare_case(args)
    sig = _estimate(args, base)
    cfg = BootConfig(
        alpha=args.alpha, gamma=args.gamma, B=args.boot, seed=args.seed, method=args.cv
    )
    report = run_report(base, sig, set_, cfg, model=args.model)
    _write_out(args.out, report_to_json(report, extra_warnings))
    return 0


def _cmd_diag(args) -> int:
    base, set_, _ = _prepare_case(args)
    sig = _estimate(args, base)
    a_n = sensitivity_A(base, set_, sig)
    scales = [
        [s.x, s.h] + (list(s.z_loc) + [s.z_bw] if s.z_loc is not None else [])
        for s in set_.scales
    ]
    pairs = [
        ("schema", "monotest/diag1"),
        ("n", base.n),
        ("p_scales", set_.p),
        ("kernel", set_.kernel.name),
        ("k", float(args.k)),
        ("bandwidths", sorted({s.h for s in set_.scales}, reverse=True)),
        ("A_n", a_n),
        ("sigma_method", sig.method),
        ("model", args.model),
        ("scales", scales),
    ]
    _write_out(args.out, _render_json(pairs))
    return 0


def _cmd_mc(args) -> int:
    noises = ("normal", "uniform") if args.noise == "both" else (args.noise,)
    designs = [
        McDesign(case, n, noise)
        for noise in noises
        for case in _int_list(args.cases, "cases")
        for n in _int_list(args.sizes, "sizes")
    ]
    results = run_mc(
        designs,
        _split(args.sigma) or ["rice"],
        tuple(_split(args.cv)) or ("pi", "os", "sd"),
        reps=args.reps,
        B=args.boot,
        alpha=args.alpha,
        gamma=args.gamma,
        seed=args.seed,
        parallelism=args.threads,
    )
    text = results_to_csv(results) if args.format == "csv" else results_to_text(results)
    _write_out(args.out, text)
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monotest",
        description="Adaptive kernel-weighted monotonicity tests with bootstrap critical values.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("data", help="CSV file with a header row")
    data.add_argument("--x-col", default="x", help="regressor column (default: x)")
    data.add_argument("--y-col", default="y", help="response column (default: y)")
    data.add_argument("--z-cols", default="", help="comma-separated control columns")
    data.add_argument(
        "--u-cols", default="", help="comma-separated exogenous columns (endogenous model)"
    )
    data.add_argument("--d-col", default="", help="selection indicator column (selection model)")
    data.add_argument("--model", default="simple", choices=MODELS)
    data.add_argument("--k", type=float, default=0.0, help="distance exponent in the pair weights")
    data.add_argument("--kernel", default="epanechnikov", choices=sorted(KERNELS))
    data.add_argument(
        "--h-set", default="", help="comma-separated bandwidths replacing the automatic grid"
    )
    data.add_argument("--sigma", default="rice", choices=SIGMA_METHODS)
    data.add_argument("--sigma-bn", type=float, default=None, help="window width for local-rice")
    data.add_argument(
        "--sigma-degree", type=int, default=None, help="fit degree for residual / two-step-poly"
    )
    data.add_argument("--L", type=int, default=4, help="powers per additive series block")
    data.add_argument("--first-stage-degree", type=int, default=3)
    data.add_argument("--pscore-degree", type=int, default=3)
    data.add_argument(
        "--z-cells", type=int, default=3, help="quantile cells per z dimension (nonparametric-z)"
    )
    data.add_argument(
        "--z-bw", default="", help="comma-separated z-cell bandwidths (nonparametric-z)"
    )
    data.add_argument("--out", default="", help="output path (default: stdout)")

    boot = argparse.ArgumentParser(add_help=False)
    boot.add_argument("--alpha", type=float, default=0.1, help="test level")
    boot.add_argument("--gamma", type=float, default=0.01, help="selection level")
    boot.add_argument("--boot", type=int, default=500, help="bootstrap draws")
    boot.add_argument("--seed", type=int, default=0)

    p_test = sub.add_parser(
        "test", parents=[data, boot], help="run the monotonicity test on a CSV file"
    )
    p_test.add_argument("--cv", default="sd", choices=CV_CHOICES, help="critical-value method")
    p_test.add_argument(
        "--threads",
        type=int,
        default=1,
        help="accepted for interface symmetry; a single test is not parallelized",
    )
    p_test.set_defaults(func=_cmd_test)

    p_diag = sub.add_parser(
        "diag", parents=[data], help="print the scale set and the sensitivity diagnostic A_n"
    )
    p_diag.set_defaults(func=_cmd_diag)

    p_mc = sub.add_parser("mc", help="Monte Carlo size and power study")
    p_mc.add_argument("--cases", default="1,2,3,4", help="comma-separated design cases")
    p_mc.add_argument("--sizes", default="100,200,500", help="comma-separated sample sizes")
    p_mc.add_argument("--noise", default="normal", choices=("normal", "uniform", "both"))
    p_mc.add_argument("--sigma", default="rice", help="comma-separated sigma methods")
    p_mc.add_argument("--cv", default="pi,os,sd", help="comma-separated critical-value methods")
    p_mc.add_argument("--reps", type=int, default=1000)
    p_mc.add_argument("--boot", type=int, default=500, help="bootstrap draws per replication")
    p_mc.add_argument("--alpha", type=float, default=0.1)
    p_mc.add_argument("--gamma", type=float, default=0.01)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.add_argument("--threads", type=int, default=1, help="worker processes")
    p_mc.add_argument("--format", default="csv", choices=("csv", "text"))
    p_mc.add_argument("--out", default="", help="output path (default: stdout)")
    p_mc.set_defaults(func=_cmd_mc)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateVarianceError as exc:
        _emit_error(exc)
        return 3
    except (DataError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        _emit_error(exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
