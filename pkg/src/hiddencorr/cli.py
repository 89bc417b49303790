"""Command-line front end: ``hiddencorr <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data or parse error, 4 numerical
failure. All outputs are plain data files (CSV, tensor text, JSON) written
atomically, so plots can be made with any external tool.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .decompositions import AlsConfig, model_kind
from .hcm import NearestCorrelationError, PipelineError, build_hcm
from .ingestion import WindowSpec, build_cov_tensor, read_panel_csv
from .io import ParseError, atomic_write_text, read_tensor, read_vector, save_model, write_json, write_matrix, write_tensor
from .model_selection import RankScanError, scan_ranks
from .simulation import SimConfig, simulate, split_tensor
from .spectrum import compare_spectra

log = logging.getLogger("hiddencorr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


def parse_ranks(text: str) -> List[int]:
    """``"2..15"``, ``"3,5,8"`` or ``"10"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split(".."))
            if lo > hi:
                raise ValueError
            out = list(range(lo, hi + 1))
        else:
            out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rank grid {text!r}; use a..b or a,b,c") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError("rank grid must be nonempty and positive")
    return out


def _csv_text(header: Sequence[str], rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _als_config(args) -> AlsConfig:
    return AlsConfig(max_iter=args.max_iter, tol=args.tol, restarts=args.restarts, seed=args.seed)


def _grid(args, t) -> List[int]:
    if args.ranks is not None:
        return args.ranks
    return list(range(2, min(t.shape[0], 15) + 1))


def _check_convergence(args, report) -> None:
    if report is not None and not report.converged:
        msg = f"ALS stopped after {report.iterations} sweeps without converging"
        if args.require_convergence:
            raise NumericalError(msg)
        log.warning(msg)


def _load_tensor(path):
    try:
        return read_tensor(path)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise ParseError(str(exc), 0, str(path)) from exc


def _fit_summary(report) -> dict:
    if report is None:
        return {}
    return {
        "ssr": report.ssr,
        "rel_error": report.rel_error,
        "iterations": report.iterations,
        "converged": report.converged,
        "free_params": report.free_params,
        "restart": report.restart,
    }


def _run_hcm(args, t):
    res = build_hcm(
        t,
        kind=args.model,
        ranks=_grid(args, t),
        market_mode=args.market_mode,
        cfg=_als_config(args),
        criterion=args.criterion,
        time_rank=args.time_rank,
    )
    _check_convergence(args, res.report)
    return res


def _provenance(args, res) -> dict:
    return {
        "model": args.model,
        "ranks": list(res.model.ranks),
        "selected": res.scan.selected,
        "criterion": res.scan.criterion,
        "market_mode": res.market_mode,
        "seed": args.seed,
        "fit": _fit_summary(res.report),
        "link_asymmetry": res.asymmetry,
        "projection_residual": res.projection_residual,
    }


def cmd_cov_tensor(args) -> int:
    if args.prices and args.returns:
        raise UsageError("--prices and --returns are mutually exclusive")
    kind = "returns" if args.returns else "prices"
    panel = read_panel_csv(args.input, kind)
    spec = "monthly" if args.window == "monthly" else WindowSpec(int(args.window), args.step)
    try:
        t = build_cov_tensor(panel, spec)
    except ValueError as exc:
        raise ParseError(str(exc), 0, str(args.input)) from exc
    write_tensor(args.out, t)
    log.info("wrote %s tensor to %s", "x".join(map(str, t.shape)), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    kw = {}
    for key in ("T", "svd_rank", "noise_sigma", "d_block", "d_full", "seed"):
        val = getattr(args, key)
        if val is not None:
            kw[key] = val
    if args.block_sizes is not None:
        kw["block_sizes"] = tuple(args.block_sizes)
    if args.time_series is not None:
        series = read_vector(args.time_series)
        kw["time_series"] = tuple(series)
        kw.setdefault("T", series.size)
    try:
        cfg = SimConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = simulate(cfg)
    d = Path(args.out_dir)
    write_tensor(d / "tensor.txt", out.tensor)
    write_matrix(d / "omega_true.csv", out.omega_true)
    write_matrix(d / "sigma_svd.csv", out.sigma_svd)
    atomic_write_text(d / "time_series.csv", _csv_text(["t", "tau"], zip(range(1, cfg.T + 1), out.time_series)))
    write_json(d / "config.json", cfg.to_dict())
    return EXIT_OK


def cmd_scan(args) -> int:
    t = _load_tensor(args.tensor)
    scan = scan_ranks(t, args.model, _grid(args, t), _als_config(args), args.criterion, args.time_rank)
    _check_convergence(args, scan.best_report)
    atomic_write_text(args.out, scan.to_csv())
    log.info("selected rank %d by %s", scan.selected, scan.criterion)
    return EXIT_OK


def cmd_hcm(args) -> int:
    t = _load_tensor(args.tensor)
    res = _run_hcm(args, t)
    d = Path(args.out_dir)
    write_matrix(d / "theta.csv", res.theta)
    atomic_write_text(d / "scan.csv", res.scan.to_csv())
    write_json(d / "provenance.json", _provenance(args, res))
    if args.emit_plots:
        write_matrix(d / "link.csv", res.link)
        write_matrix(d / "omega.csv", res.omega)
        save_model(d / "model", res.scan.best_model, res.report, args.seed)
    return EXIT_OK


def cmd_split_compare(args) -> int:
    t = _load_tensor(args.tensor)
    k = t.shape[2]
    at = args.split_at if args.split_at is not None else k // 2
    if not 1 <= at < k:
        raise UsageError(f"split point {at} out of range 1..{k - 1}")
    halves = split_tensor(t, at)
    d = Path(args.out_dir)
    thetas, prov = [], {}
    for i, half in enumerate(halves, start=1):
        res = _run_hcm(args, half)
        thetas.append(res.theta)
        write_matrix(d / f"theta_{i}.csv", res.theta)
        prov[f"half_{i}"] = _provenance(args, res)
    cmp = compare_spectra(thetas[0], thetas[1], drop_zero=args.drop_zero)
    atomic_write_text(d / "spectrum.csv", cmp.to_csv())
    prov["split_at"] = at
    prov["drop_zero"] = args.drop_zero
    write_json(d / "provenance.json", prov)
    return EXIT_OK


def dynamic_factor(model, volatility: bool = False) -> np.ndarray:
    """Time factor(s) of a fitted model as a ``K x n`` matrix.

    PARAFAC time components are summed into one column. With ``volatility``
    the square root is taken (negative values are clipped to zero first).
    """
    c = np.array(model.C, dtype=float)
    if model_kind(model) == "parafac":
        c = c.sum(axis=1, keepdims=True)
    # orient each column so that it sums to a nonnegative value
    c = c * np.where(c.sum(axis=0) < 0, -1.0, 1.0)
    if volatility:
        if np.any(c < 0):
            log.warning("clipping negative time-factor values before the square root")
        c = np.sqrt(np.clip(c, 0.0, None))
    return c


def align(series: np.ndarray, ref: np.ndarray) -> dict:
    """Correlation with a reference after sign and least-squares scale alignment."""
    x = np.asarray(series, dtype=float)
    y = np.asarray(ref, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"reference series has length {y.size}, expected {x.size}")
    if np.std(x) == 0 or np.std(y) == 0:
        corr = float("nan")
    else:
        corr = float(np.corrcoef(x, y)[0, 1])
    sign = -1.0 if corr < 0 else 1.0
    xs = sign * x
    denom = float(xs @ xs)
    scale = float(xs @ y) / denom if denom > 0 else float("nan")
    return {"correlation": abs(corr), "sign": sign, "scale": scale}


def cmd_dynamic(args) -> int:
    t = _load_tensor(args.tensor)
    scan = scan_ranks(t, args.model, _grid(args, t), _als_config(args), args.criterion, args.time_rank)
    _check_convergence(args, scan.best_report)
    c = dynamic_factor(scan.best_model, args.volatility)
    header = ["t"] + [f"factor_{i + 1}" for i in range(c.shape[1])]
    rows = [[i + 1, *row] for i, row in enumerate(c)]
    atomic_write_text(args.out, _csv_text(header, rows))
    if args.series is not None:
        ref = read_vector(args.series)
        if ref.size != c.shape[0]:
            raise ParseError(f"reference series has {ref.size} values, tensor has {c.shape[0]} slices", 0, str(args.series))
        stats = align(c[:, 0], ref)
        stats["selected"] = scan.selected
        out = Path(args.out)
        write_json(out.with_name(out.stem + "_alignment.json"), stats)
    return EXIT_OK


def _add_fit_flags(p: argparse.ArgumentParser, criterion=True) -> None:
    p.add_argument("--model", choices=("parafac", "tucker", "sdt"), default="sdt")
    p.add_argument("--ranks", type=parse_ranks, default=None, help="grid a..b, list a,b,c or one rank (default 2..min(M,15))")
    p.add_argument("--time-rank", type=int, default=1, help="time components for Tucker and SDT")
    if criterion:
        p.add_argument("--criterion", choices=("bic", "aic", "aicc", "concordia", "diffit"), default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--require-convergence", action="store_true", help="exit with code 4 if ALS does not converge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiddencorr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of flag defaults (keys use underscores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cov-tensor", help="covariance tensor from a price or return panel")
    p.add_argument("--input", required=True)
    p.add_argument("--prices", action="store_true", help="values are prices (default)")
    p.add_argument("--returns", action="store_true", help="values are log-returns")
    p.add_argument("--window", default="monthly", help="observations per window, or 'monthly'")
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cov_tensor)

    p = sub.add_parser("simulate", help="synthetic covariance tensor with known structure")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--svd-rank", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--d-block", type=float, default=None)
    p.add_argument("--d-full", type=float, default=None)
    p.add_argument("--block-sizes", type=lambda s: [int(x) for x in s.split(",")], default=None)
    p.add_argument("--time-series", default=None, help="CSV column replacing the AR(1) series")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("scan", help="fit every rank of a grid and write the scan table")
    p.add_argument("--tensor", required=True)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("hcm", help="hidden correlation matrix of a covariance tensor")
    p.add_argument("--tensor", required=True)
    _add_fit_flags(p)
    p.add_argument("--market-mode", choices=("keep", "remove"), default="keep")
    p.add_argument("--emit-plots", action="store_true", help="also write link/omega matrices and the model")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_hcm)

    p = sub.add_parser("split-compare", help="compare the spectra of HCMs from two time halves")
    p.add_argument("--tensor", required=True)
    _add_fit_flags(p)
    p.add_argument("--market-mode", choices=("keep", "remove"), default="keep")
    p.add_argument("--split-at", type=int, default=None, help="last slice of the first half (default K/2)")
    p.add_argument("--drop-zero", action="store_true", help="drop eigenvalues below 1e-10")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split_compare)

    p = sub.add_parser("dynamic", help="time factor of the selected model")
    p.add_argument("--tensor", required=True)
    _add_fit_flags(p)
    p.add_argument("--series", default=None, help="reference series CSV for alignment statistics")
    p.add_argument("--volatility", action="store_true", help="take the square root of the factor")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dynamic)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        raise UsageError(f"config file {args.config} not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, args.config) from None
    if not isinstance(cfg, dict):
        raise ParseError("config must be a JSON object", 1, args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    # config values become defaults, explicit flags still win
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hiddencorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"hiddencorr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hiddencorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, PipelineError, RankScanError, NearestCorrelationError, np.linalg.LinAlgError) as exc:
        print(f"hiddencorr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, OSError, ValueError) as exc:
        print(f"hiddencorr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
