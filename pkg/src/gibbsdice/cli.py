"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or model error.  The default
output format can be set with ``GIBBSDICE_FORMAT`` (table, csv or json).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    BUILTIN,
    ExperimentRecord,
    builtin_text,
    parse_experiment,
    serialize_experiment,
)
from .errors import GibbsDiceError
from .estimation import (
    TossCounts,
    XxyObservation,
    fit_beta,
    fit_beta_global,
)
from .model import (
    CuboidSpec,
    GeneralDieSpec,
    Normalization,
    cuboid_energies,
    general_energies,
    gibbs_probabilities,
    simpson_probabilities,
    xxy_pxx,
)
from .svgplot import Series, render_figure
from .validation import (
    BootstrapConfig,
    bootstrap_constant_beta,
    chi_square_full,
    chi_square_xxy,
    simulate_tosses,
)

FORMATS = ("table", "csv", "json")
FORMAT_ENV = "GIBBSDICE_FORMAT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- inputs


def _dataset_source(args) -> tuple[str, str]:
    """(label, file text) of the dataset named on the command line."""
    if args.builtin and args.file:
        raise UsageError("give either --builtin or --file, not both")
    if args.builtin:
        return args.builtin, builtin_text(args.builtin)
    if args.file:
        try:
            return Path(args.file).stem, Path(args.file).read_text(encoding="utf-8")
        except OSError as exc:
            raise GibbsDiceError(f"cannot read {args.file}: {exc.strerror}") from None
    raise UsageError("a dataset is required: --builtin NAME or --file PATH")


def _load(args) -> tuple[ExperimentRecord, str]:
    _, text = _dataset_source(args)
    return parse_experiment(text), _digest(text)


def _digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _norm_for(record_kind: str, flag: str | None) -> Normalization:
    if flag:
        return Normalization.parse(flag)
    if record_kind == "xxy":
        return Normalization.GEOMETRIC_MEAN
    return Normalization.HALF_DIAGONAL


def _geometry(args):
    """Die described by --cuboid / --xxy / --heights+--scale."""
    given = [g for g in ("cuboid", "xxy", "heights") if getattr(args, g)]
    if len(given) != 1:
        raise UsageError("give exactly one of --cuboid, --xxy or --heights/--scale")
    if args.cuboid:
        parts = args.cuboid.lower().split("x")
        try:
            sides = [float(p) for p in parts]
        except ValueError:
            sides = []
        if len(sides) != 3:
            raise UsageError(f"--cuboid expects AxBxC, got {args.cuboid!r}")
        return CuboidSpec(*sides)
    if args.xxy:
        parts = args.xxy.lower().split("x")
        if len(parts) != 2:
            raise UsageError(f"--xxy expects SXxSY, got {args.xxy!r}")
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            raise UsageError(f"--xxy expects SXxSY, got {args.xxy!r}") from None
    if args.scale is None:
        raise UsageError("--heights needs --scale")
    try:
        heights = tuple(float(h) for h in args.heights.split(","))
    except ValueError:
        raise UsageError(f"--heights expects comma-separated numbers, got {args.heights!r}") from None
    return GeneralDieSpec(heights, args.scale)


def _energies(die, norm: Normalization):
    if isinstance(die, CuboidSpec):
        return cuboid_energies(die, norm)
    return general_energies(die)


# ---------------------------------------------------------------- output


class Envelope:
    """Command result: scalar fields, an optional table, and the echo."""

    def __init__(self, command, arguments, digest, results, rows=None, columns=None, title=None):
        self.command = command
        self.arguments = arguments
        self.digest = digest
        self.results = results
        self.rows = rows or []
        self.columns = columns or []
        self.title = title

    def render(self, fmt: str) -> str:
        if fmt == "json":
            payload = dict(self.results)
            if self.rows:
                payload["rows"] = self.rows
            doc = {
                "command": self.command,
                "arguments": self.arguments,
                "input_digest": self.digest,
                "format": "json",
                "results": payload,
            }
            return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerow(["command", self.command])
            w.writerow(["input_digest", self.digest])
            for k, v in self.results.items():
                if isinstance(v, (list, tuple, np.ndarray)):
                    continue
                w.writerow([k, _csv_value(v)])
            if self.rows:
                buf.write("\n")
                w.writerow(self.columns)
                for row in self.rows:
                    w.writerow([_csv_value(row[c]) for c in self.columns])
            return buf.getvalue()
        return self._table()

    def _table(self) -> str:
        lines = []
        if self.title:
            lines.append(self.title)
        for k, v in self.results.items():
            if isinstance(v, (list, tuple, np.ndarray)):
                continue
            lines.append(f"{k:>22}: {_human(k, v)}")
        if self.rows:
            cells = [[_human(c, row[c]) for c in self.columns] for row in self.rows]
            widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(self.columns)]
            lines.append("")
            lines.append("  ".join(c.rjust(w) for c, w in zip(self.columns, widths)))
            lines.append("  ".join("-" * w for w in widths))
            for r in cells:
                lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
        return "\n".join(lines) + "\n"


PERCENT_COLUMNS = {"f_percent", "p_percent", "fxx_percent", "pxx_percent"}


def _human(key, v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        if key in PERCENT_COLUMNS:
            return f"{v:.1f}"
        return f"{v:.6g}"
    return str(v)


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _fit_fields(fit) -> dict:
    return {
        "beta_hat": fit.beta_hat,
        "neg_log_likelihood": fit.neg_log_likelihood_at_min,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "boundary": fit.boundary,
    }


def _xxy_rows(obs, beta, norm):
    p = np.atleast_1d(xxy_pxx([o.sx for o in obs], [o.sy for o in obs], beta, norm))
    return [
        {
            "sx": o.sx,
            "sy": o.sy,
            "N": o.N,
            "nxx": o.nxx,
            "fxx_percent": 100.0 * o.fxx,
            "pxx_percent": 100.0 * float(pj),
        }
        for o, pj in zip(obs, p)
    ]


XXY_COLUMNS = ["sx", "sy", "N", "nxx", "fxx_percent", "pxx_percent"]
STATE_COLUMNS = ["state", "energy", "count", "f_percent", "p_percent"]


def _state_rows(E, counts, p):
    N = sum(counts) if counts is not None else 0
    rows = []
    for i, (e, pi) in enumerate(zip(E, p)):
        row = {"state": i + 1, "energy": float(e), "p_percent": 100.0 * float(pi)}
        if counts is not None:
            row["count"] = counts[i]
            row["f_percent"] = 100.0 * counts[i] / N
        rows.append(row)
    return rows


# ---------------------------------------------------------------- commands


def cmd_fit(args) -> Envelope:
    record, digest = _load(args)
    norm = _norm_for(record.kind, args.norm)
    echo = {"dataset": args.builtin or args.file, "norm": norm.value}
    if record.kind == "xxy":
        fit = fit_beta_global(record.observations, tol=args.tol, norm=norm)
        rows = _xxy_rows(record.observations, fit.beta_hat, norm)
        return Envelope("fit", echo, digest, {"norm": norm.value, "m": len(rows), **_fit_fields(fit)},
                        rows, XXY_COLUMNS, title=f"{record.name or 'dataset'}: joint fit over xxy-cuboids")
    E = record.energies(norm)
    fit = fit_beta(E, record.counts, tol=args.tol)
    p = gibbs_probabilities(E, fit.beta_hat)
    rows = _state_rows(E, record.counts.counts, p)
    if isinstance(record.die, GeneralDieSpec):
        echo["norm"] = norm_value = f"explicit scale {record.die.scale:g}"
    else:
        norm_value = norm.value
    return Envelope("fit", echo, digest, {"norm": norm_value, "N": record.counts.N, **_fit_fields(fit)},
                    rows, STATE_COLUMNS, title=f"{record.name or 'dataset'}: single-die fit")


def cmd_predict(args) -> Envelope:
    die = _geometry(args)
    argv_text = json.dumps(
        {"cuboid": args.cuboid, "xxy": args.xxy, "heights": args.heights, "scale": args.scale,
         "beta": args.beta, "model": args.model, "norm": args.norm}, sort_keys=True)
    digest = _digest(argv_text)
    if args.model == "simpson":
        if not isinstance(die, CuboidSpec):
            raise UsageError("--model simpson needs --cuboid")
        p = simpson_probabilities(die)
        rows = _state_rows(cuboid_energies(die, Normalization.HALF_DIAGONAL), None, p)
        return Envelope("predict", {"model": "simpson", "cuboid": args.cuboid}, digest,
                        {"model": "simpson"}, rows, ["state", "p_percent"], title="Simpson (solid-angle) model")
    if args.beta is None:
        raise UsageError("--beta is required for the gibbs model")
    if isinstance(die, tuple):
        norm = _norm_for("xxy", args.norm)
        pxx = xxy_pxx(die[0], die[1], args.beta, norm)
        return Envelope("predict", {"model": "gibbs", "xxy": args.xxy, "beta": args.beta, "norm": norm.value},
                        digest, {"model": "gibbs", "norm": norm.value, "beta": args.beta,
                                 "pxx": pxx, "pxy": 1.0 - pxx}, title="Gibbs model, xxy-cuboid")
    norm = _norm_for("cuboid", args.norm)
    E = _energies(die, norm)
    p = gibbs_probabilities(E, args.beta)
    norm_value = norm.value if isinstance(die, CuboidSpec) else f"explicit scale {die.scale:g}"
    rows = _state_rows(E, None, p)
    return Envelope("predict", {"model": "gibbs", "beta": args.beta, "norm": norm_value}, digest,
                    {"model": "gibbs", "norm": norm_value, "beta": args.beta},
                    rows, ["state", "energy", "p_percent"], title="Gibbs model")


def _beta_for(args, fit_fn) -> tuple[float, bool]:
    if args.beta is not None and args.fit:
        raise UsageError("give either --beta or --fit, not both")
    if args.beta is not None:
        return args.beta, False
    return fit_fn().beta_hat, True


def cmd_gof(args) -> Envelope:
    record, digest = _load(args)
    norm = _norm_for(record.kind, args.norm)
    echo = {"dataset": args.builtin or args.file, "norm": norm.value}
    if record.kind == "xxy":
        beta, fitted = _beta_for(args, lambda: fit_beta_global(record.observations, norm=norm))
        gof = chi_square_xxy(record.observations, beta, norm)
        rows = _xxy_rows(record.observations, beta, norm)
        columns = XXY_COLUMNS
    else:
        E = record.energies(norm)
        beta, fitted = _beta_for(args, lambda: fit_beta(E, record.counts))
        p = gibbs_probabilities(E, beta)
        gof = chi_square_full(record.counts, p)
        rows = _state_rows(E, record.counts.counts, p)
        columns = STATE_COLUMNS
    results = {
        "beta": beta,
        "beta_fitted": fitted,
        "chi2": gof.chi2,
        "m": gof.m,
        "chi2_per_m": gof.chi2_per_m,
        "verdict": gof.verdict,
    }
    return Envelope("gof", echo, digest, results, rows, columns, title="Pearson chi-square goodness of fit")


def cmd_bootstrap(args) -> Envelope:
    record, digest = _load(args)
    if record.kind != "xxy":
        raise UsageError("bootstrap needs an xxy dataset (sx,sy,N,nxx)")
    norm = _norm_for("xxy", args.norm)
    beta0 = args.beta if args.beta is not None else fit_beta_global(record.observations, norm=norm).beta_hat
    cfg = BootstrapConfig(
        beta0=beta0,
        epsilon=args.epsilon,
        iterations=args.iterations,
        master_seed=args.seed,
        refit_lengths=args.refit_lengths,
        workers=args.workers,
        norm=norm,
    )
    res = bootstrap_constant_beta(record.observations, cfg)
    sim = res.chi2_simulated
    echo = {
        "dataset": args.builtin or args.file,
        "epsilon": cfg.epsilon,
        "iterations": cfg.iterations,
        "seed": cfg.master_seed,
        "refit_lengths": cfg.refit_lengths,
        "norm": norm.value,
    }
    results = {
        "beta0": beta0,
        "epsilon": cfg.epsilon,
        "iterations": cfg.iterations,
        "seed": cfg.master_seed,
        "chi2_observed": res.chi2_observed,
        "p_value": res.p_value,
        "chi2_simulated_mean": float(sim.mean()),
        "chi2_simulated_median": float(np.median(sim)),
        "chi2_simulated": sim,
    }
    return Envelope("bootstrap", echo, digest, results, title="parametric bootstrap, constant beta")


def cmd_simulate(args) -> Envelope:
    die = _geometry(args)
    if args.tosses < 0:
        raise UsageError("-N/--tosses must be >= 0")
    rng = np.random.default_rng(args.seed)
    argv_text = json.dumps(
        {"cuboid": args.cuboid, "xxy": args.xxy, "heights": args.heights, "scale": args.scale,
         "beta": args.beta, "N": args.tosses, "seed": args.seed, "norm": args.norm}, sort_keys=True)
    digest = _digest(argv_text)
    echo = {k: v for k, v in (("cuboid", args.cuboid), ("xxy", args.xxy), ("heights", args.heights),
                              ("scale", args.scale)) if v is not None}
    echo.update(beta=args.beta, N=args.tosses, seed=args.seed)
    if isinstance(die, tuple):
        norm = _norm_for("xxy", args.norm)
        p = xxy_pxx(die[0], die[1], args.beta, norm)
        nxx = simulate_tosses(p, args.tosses, rng)
        record = ExperimentRecord(name="simulated", note=f"beta={args.beta:g}, seed={args.seed}",
                                  observations=(XxyObservation(die[0], die[1], max(args.tosses, 1), nxx),))
        results = {"norm": norm.value, "N": args.tosses, "nxx": nxx, "pxx": p}
        rows, columns = [], []
    else:
        norm = _norm_for("cuboid", args.norm)
        E = _energies(die, norm)
        p = gibbs_probabilities(E, args.beta)
        counts = [int(c) for c in simulate_tosses(p, args.tosses, rng)]
        record = ExperimentRecord(name="simulated", note=f"beta={args.beta:g}, seed={args.seed}",
                                  die=die, counts=TossCounts(tuple(counts)))
        results = {"N": args.tosses, "counts": counts}
        rows = _state_rows(E, counts, p) if args.tosses else _state_rows(E, None, p)
        for r in rows:
            r.setdefault("count", 0)
        columns = ["state", "energy", "count", "p_percent"]
    if args.out:
        if args.tosses == 0:
            raise UsageError("--out needs at least one toss (a dataset file must hold observations)")
        Path(args.out).write_text(serialize_experiment(record), encoding="utf-8")
        results["written"] = str(args.out)
    return Envelope("simulate", echo, digest, results, rows, columns, title="simulated tosses")


def cmd_plot(args) -> Envelope:
    sources = [("builtin", b) for b in args.builtin or []] + [("file", f) for f in args.file or []]
    if not sources:
        raise UsageError("nothing to plot: give --builtin and/or --file")
    if args.beta and len(args.beta) != len(sources):
        raise UsageError("give one --beta per dataset, or use --fit")
    series = []
    digests = []
    for i, (kind, ref) in enumerate(sources):
        if kind == "builtin":
            text = builtin_text(ref)
        else:
            try:
                text = Path(ref).read_text(encoding="utf-8")
            except OSError as exc:
                raise GibbsDiceError(f"cannot read {ref}: {exc.strerror}") from None
        record = parse_experiment(text)
        if record.kind != "xxy":
            raise UsageError(f"{ref}: plot needs an xxy dataset (sx,sy,N,nxx)")
        norm = _norm_for("xxy", args.norm)
        beta = args.beta[i] if args.beta else fit_beta_global(record.observations, norm=norm).beta_hat
        series.append(Series(record.name or ref, record.observations, beta))
        digests.append(_digest(text))
    svg = render_figure(series, epsilon=args.epsilon, error_style=args.error_bar,
                        norm=_norm_for("xxy", args.norm))
    Path(args.out).write_text(svg, encoding="utf-8")
    results = {
        "out": str(args.out),
        "series": len(series),
        "markers": sum(len(s.observations) for s in series),
    }
    for s in series:
        results[f"beta[{s.label}]"] = s.beta
    return Envelope("plot", {"sources": [r for _, r in sources], "epsilon": args.epsilon},
                    _digest("".join(digests)), results, title="figure written")


# ---------------------------------------------------------------- parser


def _add_dataset(p):
    p.add_argument("--builtin", metavar="NAME", help=f"bundled dataset: {', '.join(BUILTIN)}")
    p.add_argument("--file", metavar="PATH", help="dataset file (see README for the format)")


def _add_norm(p):
    p.add_argument("--norm", choices=[n.value for n in Normalization],
                   help="energy normalization (default: geometric-mean for xxy data, "
                        "half-diagonal for cuboids)")


def _add_geometry(p):
    p.add_argument("--cuboid", metavar="AxBxC", help="homogeneous cuboid side lengths, e.g. 13x20x23")
    p.add_argument("--xxy", metavar="SXxSY", help="xxy-cuboid, e.g. 15x7.1")
    p.add_argument("--heights", metavar="H1,...,Hk", help="centre-of-gravity heights of a general die")
    p.add_argument("--scale", type=float, help="normalization length for --heights")


def build_parser() -> argparse.ArgumentParser:
    default_format = os.environ.get(FORMAT_ENV, "table")
    if default_format not in FORMATS:
        default_format = "table"
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=default_format,
                        help=f"output format (default from ${FORMAT_ENV}, else table)")

    parser = _Parser(prog="gibbsdice", description="Gibbs model of cuboidal dice.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit of beta")
    _add_dataset(p)
    _add_norm(p)
    p.add_argument("--tol", type=float, default=1e-6, help="final bracket width in beta")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="face probabilities for a geometry")
    _add_geometry(p)
    _add_norm(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--model", choices=("gibbs", "simpson"), default="gibbs")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gof", parents=[common], help="Pearson chi-square goodness of fit")
    _add_dataset(p)
    _add_norm(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--fit", action="store_true", help="use the maximum-likelihood beta (default)")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("bootstrap", parents=[common], help="parametric bootstrap p-value")
    _add_dataset(p)
    _add_norm(p)
    p.add_argument("--epsilon", type=float, required=True, help="relative side-length uncertainty")
    p.add_argument("--iterations", type=int, default=999)
    p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--beta", type=float, help="beta under test (default: fitted)")
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p.add_argument("--refit-lengths", choices=("nominal", "perturbed"), default="nominal")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("simulate", parents=[common], help="simulate tosses from the Gibbs model")
    _add_geometry(p)
    _add_norm(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("-N", "--tosses", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", help="also write the result as a dataset file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", parents=[common], help="SVG figure of f_xx and fitted p_xx vs s_y/s_x")
    p.add_argument("--builtin", action="append", metavar="NAME")
    p.add_argument("--file", action="append", metavar="PATH")
    _add_norm(p)
    p.add_argument("--fit", action="store_true", help="fit beta per dataset (default)")
    p.add_argument("--beta", type=float, action="append")
    p.add_argument("--epsilon", type=float, default=0.05, help="relative error for horizontal bars")
    p.add_argument("--error-bar", choices=("caption", "binomial"), default="caption",
                   help="caption: sqrt(f/n_xx); binomial: sqrt(f(1-f)/N)")
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return int(exc.code or 0)
    try:
        envelope = args.func(args)
    except UsageError as exc:
        print(f"gibbsdice {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except GibbsDiceError as exc:
        print(f"gibbsdice {args.command}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(envelope.render(args.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
