"""Command-line interface.

Every subcommand writes CSV output and a ``<out>.meta`` sidecar with the
resolved configuration.  Exit codes: 0 success, 1 usage error, 2 data error,
3 numeric error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core import read_series_csv, write_series_csv
from .errors import (
    BranchUndefinedError,
    ContractError,
    DataError,
    NumericError,
    ResourceError,
    ValidationError,
)
from .estimators import default_grid, estimate_from_quantile
from .laws import DiscreteLaw, ParametricLaw, TailChainSpec

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(message)


def write_meta(out: str | Path, items: dict) -> Path:
    path = Path(str(out) + ".meta")
    with open(path, "w") as fh:
        fh.write(f"version={__version__}\n")
        for k, v in items.items():
            fh.write(f"{k}={v}\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, np.ndarray):
        return " ".join(repr(float(x)) for x in v)
    return str(v)


def _meta_from_args(args: argparse.Namespace) -> dict:
    return {k: _fmt(v) for k, v in sorted(vars(args).items()) if k != "func"}


def _grid(args) -> np.ndarray:
    return default_grid(args.grid_lo, args.grid_hi, args.grid_num)


def _add_grid(p):
    p.add_argument("--grid-lo", type=float, default=-3.0)
    p.add_argument("--grid-hi", type=float, default=3.0)
    p.add_argument("--grid-num", type=int, default=201)


def _add_model(p):
    p.add_argument("--model", choices=("tcopula", "sre"), required=True)
    p.add_argument("--nu1", type=float, default=2.0, help="t margin degrees of freedom")
    p.add_argument("--nu2", type=float, default=2.5, help="t-copula degrees of freedom")
    p.add_argument("--rho", type=float, default=0.2)
    p.add_argument("--c-law", default="normal(0.3333333333333333, 0.8888888888888888)",
                   help="law of C, e.g. 'normal(mean, var)' or 'lognormal(mu, sigma)'")
    p.add_argument("--d-law", default="normal(-10.0, 1.0)")
    p.add_argument("--alpha-true", type=float, default=2.0)
    p.add_argument("--burn-in", type=int, default=1000)


def _model(args):
    from .models import SREConfig, TCopulaMarkovConfig

    if args.model == "tcopula":
        return TCopulaMarkovConfig(args.nu1, args.nu2, args.rho, args.burn_in)
    return SREConfig(ParametricLaw.parse(args.c_law), ParametricLaw.parse(args.d_law), args.burn_in,
                     args.alpha_true)


# -- spec files -------------------------------------------------------------------

def read_spec_file(path: str | Path) -> TailChainSpec:
    """``key=value`` lines (``p``, ``alpha``, optional ``a1``/``b1`` law strings)
    plus ``[a1]`` / ``[b1]`` blocks of ``atom,mass`` rows."""
    keys: dict[str, str] = {}
    blocks: dict[str, list[tuple[float, float]]] = {}
    current = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                blocks[current] = []
                continue
            if current is None:
                if "=" not in line:
                    raise DataError(f"{path}:{lineno}: expected key=value")
                k, _, v = line.partition("=")
                keys[k.strip().lower()] = v.strip()
                continue
            if line.replace(" ", "") == "atom,mass":
                continue
            try:
                a, m = (float(s) for s in line.split(","))
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected atom,mass") from None
            blocks[current].append((a, m))
    if "p" not in keys or "alpha" not in keys:
        raise DataError(f"{path}: spec needs p= and alpha=")

    def law(name):
        if name in blocks:
            rows = blocks[name]
            if not rows:
                raise DataError(f"{path}: empty [{name}] block")
            return DiscreteLaw([r[0] for r in rows], [r[1] for r in rows])
        if name in keys and keys[name] not in ("", "none", "discrete"):
            return ParametricLaw.parse(keys[name])
        return None

    return TailChainSpec(float(keys["p"]), float(keys["alpha"]), law("a1"), law("b1"))


def write_spec_file(path: str | Path, spec: TailChainSpec) -> None:
    with open(path, "w") as fh:
        fh.write(f"p={spec.p!r}\nalpha={spec.alpha!r}\n")
        for name, law in (("a1", spec.a1_law), ("b1", spec.b1_law)):
            if isinstance(law, ParametricLaw):
                fh.write(f"{name}={law}\n")
        for name, law in (("a1", spec.a1_law), ("b1", spec.b1_law)):
            if isinstance(law, DiscreteLaw):
                fh.write(f"[{name}]\natom,mass\n")
                for a, m in zip(law.atoms, law.masses):
                    fh.write(f"{float(a)!r},{float(m)!r}\n")


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .models import simulate_sre, simulate_tcopula_chain

    cfg = _model(args)
    seed = np.random.SeedSequence(args.seed)
    sim = simulate_tcopula_chain if args.model == "tcopula" else simulate_sre
    series = sim(cfg, args.n, seed)
    write_series_csv(args.out, series)
    meta = _meta_from_args(args)
    meta["seed_entropy"] = str(seed.entropy)
    write_meta(args.out, meta)
    return EXIT_OK


def cmd_estimate(args) -> int:
    series = read_series_csv(args.input)
    if args.alpha_mode == "known" and args.alpha is None and args.estimator != "forward":
        raise UsageError("--alpha is required with --alpha-mode known")
    est = estimate_from_quantile(series, args.quantile, args.target, args.estimator, args.alpha_mode,
                                 args.alpha, _grid(args))
    est.to_csv(args.out)
    meta = _meta_from_args(args)
    meta.update({f"resolved_{k}": v for k, v in est.meta().items()})
    write_meta(args.out, meta)
    return EXIT_OK


def cmd_mc_study(args) -> int:
    from .experiments import MCStudyConfig, run_mc_study, write_results_csv, write_summary_csv

    cfg = MCStudyConfig(_model(args), args.n, args.reps, args.quantile, _grid(args), args.alpha_mode,
                        args.seed, args.first_replication)
    res = run_mc_study(cfg)
    out = Path(args.out)
    b1 = Path(args.b1_out) if args.b1_out else out.with_name(out.stem + "_B1" + out.suffix)
    summary = Path(args.summary_out) if args.summary_out else out.with_name(out.stem + "_summary" + out.suffix)
    write_results_csv(res, out, "A1")
    write_results_csv(res, b1, "B1")
    write_summary_csv(res, summary)
    meta = _meta_from_args(args)
    meta.update({
        "b1_table": str(b1),
        "summary_table": str(summary),
        "truth": res.truth_label,
        "replication_seeds": f"SeedSequence({args.seed}, spawn_key=(i,)) for i in "
                             f"{args.first_replication}..{args.first_replication + args.reps - 1}",
        "p_hat_mean": repr(res.p_hat.mean),
        "alpha_hat_mean": repr(res.alpha_hat.mean),
    })
    write_meta(out, meta)
    return EXIT_OK


def cmd_case_study(args) -> int:
    from .experiments import run_case_study, synthetic_prices, write_curves_csv, write_prices_csv

    out = Path(args.out)
    meta = _meta_from_args(args)
    if args.prices is None:
        if args.synthetic_seed is None:
            raise UsageError("give --prices or --synthetic-seed")
        dates, prices = synthetic_prices(args.synthetic_n, args.synthetic_seed, args.synthetic_kind)
        fixture = out.with_name(out.stem + "_prices.csv")
        write_prices_csv(fixture, dates, prices)
        meta["fixture"] = str(fixture)
        source = fixture
    else:
        source = args.prices
    res = run_case_study(source, args.quantile, _grid(args))
    write_curves_csv(res, out)
    summary = out.with_name(out.stem + "_summary.csv")
    with open(summary, "w") as fh:
        fh.write("field,value\n")
        for k, v in res.summary().items():
            fh.write(f"{k},{v}\n")
    meta.update(res.summary())
    meta["summary_table"] = str(summary)
    write_meta(out, meta)
    for k, v in res.summary().items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_asymvar(args) -> int:
    from .asymptotics import asymptotic_table

    spec = read_spec_file(args.spec)
    grid = np.asarray([float(s) for s in args.x.split(",")]) if args.x else np.linspace(0.0, 3.0, 31)
    rows = asymptotic_table(spec, grid, args.n_vn, args.K, args.paths, args.seed)
    with open(args.out, "w") as fh:
        cols = ["x", "var_f", "var_b", "sd_pred_f", "sd_pred_b", "cov_fb", "tail_diag"]
        if spec.alpha != 1.0:
            cols.insert(3, "var_b_printed")
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(getattr(r, c))) for c in cols) + "\n")
    write_meta(args.out, _meta_from_args(args))
    return EXIT_OK


def run_identity_suite(spec: TailChainSpec, tol: float = 1e-12) -> list[tuple[str, bool, float]]:
    """Duality round trip, time-change equalities, standardization and the sign check."""
    from .oracle import (
        backward_from_forward,
        check_tailsign,
        forward_from_backward,
        functional_family,
        standardize_spec,
        time_change_gap,
        verify_time_change,
        windows,
    )

    report = []
    a_m1, b_m1, p_check = backward_from_forward(spec)
    a1, b1 = forward_from_backward(a_m1, b_m1, spec.p, spec.alpha)
    dev = 0.0
    for orig, back in ((spec.a1_law, a1), (spec.b1_law, b1)):
        if orig is not None and back is not None:
            dev = max(dev, orig.max_deviation(back))
    report.append(("duality_round_trip", dev <= tol, dev))
    mass_dev = abs(p_check - spec.theta_minus1_mass())
    report.append(("backward_mass_identity", mass_dev <= tol, mass_dev))
    worst = 0.0
    for s, t, i in windows(3):
        for _, f in functional_family(t - s + 1, -s):
            lhs, rhs = verify_time_change(spec, f, s, t, i)
            worst = max(worst, time_change_gap(lhs, rhs))
    report.append(("time_change_formula", worst <= tol, worst))
    std = standardize_spec(spec)
    sdev = abs(std.theta_minus1_mass() - spec.theta_minus1_mass())
    report.append(("standardization_mass", sdev <= tol, sdev))
    verdict = check_tailsign(spec)
    report.append((f"tailsign_{verdict.status}", verdict.status != "fail",
                   abs(verdict.residual) if verdict.residual == verdict.residual else 0.0))
    return report


def cmd_verify(args) -> int:
    spec = read_spec_file(args.spec)
    report = run_identity_suite(spec, args.tol)
    lines = ["check,passed,max_deviation"] + [f"{n},{int(ok)},{d!r}" for n, ok, d in report]
    for name, ok, d in report:
        print(f"{'PASS' if ok else 'FAIL'} {name} max_deviation={d:.3e}")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        write_meta(args.out, _meta_from_args(args))
    identities_ok = all(ok for n, ok, _ in report if not n.startswith("tailsign"))
    return EXIT_OK if identities_ok else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tailchain", description="Spectral tail chain estimation, simulation and checks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate a reference model")
    _add_model(s)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate an increment cdf from a series CSV")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--quantile", type=float, default=0.975)
    e.add_argument("--alpha-mode", choices=("known", "plugin", "rank"), default="rank")
    e.add_argument("--alpha", type=float)
    e.add_argument("--target", choices=("A1", "B1", "A1_rev", "B1_rev"), default="A1")
    e.add_argument("--estimator", choices=("forward", "backward", "mixture", "monotonized_mixture"),
                   default="mixture")
    _add_grid(e)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("mc-study", help="Monte Carlo study of the estimators")
    _add_model(m)
    m.add_argument("--n", type=int, default=2000)
    m.add_argument("--reps", type=int, default=1000)
    m.add_argument("--quantile", type=float, default=0.975)
    m.add_argument("--alpha-mode", choices=("plugin", "rank"), default="plugin")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--first-replication", type=int, default=0)
    _add_grid(m)
    m.add_argument("--out", required=True)
    m.add_argument("--b1-out")
    m.add_argument("--summary-out")
    m.set_defaults(func=cmd_mc_study)

    c = sub.add_parser("case-study", help="log-return pipeline on a date,close CSV")
    c.add_argument("--prices")
    c.add_argument("--synthetic-seed", type=int)
    c.add_argument("--synthetic-n", type=int, default=2280)
    c.add_argument("--synthetic-kind", choices=("tcopula", "iid_t"), default="tcopula")
    c.add_argument("--quantile", type=float, default=0.95)
    _add_grid(c)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_case_study)

    a = sub.add_parser("asymvar", help="limit variances for a nonnegative tail chain spec")
    a.add_argument("--spec", required=True)
    a.add_argument("--x", help="comma-separated evaluation points (default 0..3 step 0.1)")
    a.add_argument("--n-vn", type=float, default=50.0, help="expected number of exceedances")
    a.add_argument("--K", type=int, default=100)
    a.add_argument("--paths", type=int, default=1_000_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_asymvar)

    v = sub.add_parser("verify", help="exact identity suite for a discrete spec")
    v.add_argument("--spec", required=True)
    v.add_argument("--tol", type=float, default=1e-12)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValidationError, ContractError, BranchUndefinedError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, ResourceError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
