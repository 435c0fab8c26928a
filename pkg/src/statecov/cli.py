"""Command-line front end.

Subcommands: validate, predict, singleton, spectrum, lines, decompose,
simulate, estimate.  All reports are deterministic JSON (complex entries as
[re, im] pairs, matrices as row-major nested lists); time series and density
grids are CSV.  Exit codes: 0 success, 1 usage error, 2 domain error
(inadmissible covariance, infeasible program, failed consistency check).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import central, covariance, decompose, linalg, prediction, system
from .errors import InfeasibleError, NotStateCovarianceError, StatecovError

DEFAULT_TOL = 1e-10


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with code 1."""

    def error(self, message):
        raise _UsageError(message)


def _complex_out(M):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def _complex_in(data):
    return np.array([[complex(re, im) for re, im in row] for row in data],
                    dtype=complex)


def _default_tol():
    env = os.environ.get("CFP_TOL")
    if env is None:
        return DEFAULT_TOL
    tol = float(env)
    if tol <= 0:
        raise _UsageError(f"CFP_TOL must be positive, got {env}")
    return tol


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path} is not valid JSON: {exc}") from exc


def _parse_scalar_list(text):
    out = []
    for item in text.split(","):
        out.append(complex(item) if "j" in item else float(item))
    return out


def _build_cov(args, tol):
    """Build a StructuredCovariance from the mutually exclusive input flags."""
    sources = [args.pair is not None, args.toeplitz is not None,
               args.block_toeplitz is not None]
    if sum(sources) != 1:
        raise _UsageError(
            "exactly one of --pair, --toeplitz, --block-toeplitz is required")
    if args.toeplitz is not None:
        values = _parse_scalar_list(args.toeplitz)
        if len(values) < 2:
            raise _UsageError("--toeplitz needs at least two lags")
        blocks = [np.array([[v]], dtype=complex) for v in values]
        return covariance.toeplitz_assemble(blocks, tol=tol)
    if args.block_toeplitz is not None:
        parts = args.block_toeplitz.split(",", 2)
        if len(parts) != 3:
            raise _UsageError("--block-toeplitz expects m,lags,FILE")
        m, lags, path = int(parts[0]), int(parts[1]), parts[2]
        data = _load_json(path)
        blocks = [_complex_in(b) for b in data["blocks"]]
        if len(blocks) != lags + 1 or blocks[0].shape != (m, m):
            raise _UsageError("block file does not match m,lags")
        return covariance.toeplitz_assemble(blocks, tol=tol)
    pair = _load_pair(args.pair)
    if args.cov is None:
        raise _UsageError("--pair also requires --cov FILE with the matrix R")
    cov_data = _load_json(args.cov)
    if "R" not in cov_data:
        raise _UsageError(f"{args.cov} has no field 'R'")
    R = _complex_in(cov_data["R"])
    return covariance.structured(R, pair, tol=tol)


def _load_pair(path):
    """Read a filter pair from JSON; reports that embed one under a 'pair'
    key (as emitted by validate/estimate) are accepted as-is."""
    data = _load_json(path)
    if "pair" in data and "A" not in data:
        data = data["pair"]
    if "A" not in data or "B" not in data:
        raise _UsageError(f"{path} does not contain a filter pair")
    return system.pair_from_json(json.dumps(data))


def _emit(report, out_path):
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _pair_spec(pair):
    return {"n": pair.n, "m": pair.m, "A": _complex_out(pair.A),
            "B": _complex_out(pair.B)}


def cmd_validate(args, tol):
    try:
        cov = _build_cov(args, tol)
    except NotStateCovarianceError as exc:
        _emit({"admissible": False, "error": "NotStateCovarianceError",
               "message": str(exc)}, args.out)
        return 2
    report = covariance.validate(cov.R, cov.pair, tol)
    _emit({
        "admissible": bool(report.admissible),
        "psd_margin": report.psd_margin,
        "displacement_rank": report.displacement_rank,
        "pair": _pair_spec(cov.pair),
        "R": _complex_out(cov.R),
        "H": _complex_out(cov.H),
    }, args.out)
    return 0 if report.admissible else 2


def cmd_predict(args, tol):
    cov = _build_cov(args, tol)
    fwd = prediction.predict_forward(cov, rank_tol=tol)
    report = {
        "gamma": _complex_out(fwd.gamma),
        "omega": _complex_out(fwd.omega),
        "method": fwd.method,
        "unique": fwd.unique,
    }
    completion = cov.completion or system.inner_complete(cov.pair)
    if cov.L is None:
        cov = covariance.structured(cov.R, cov.pair, completion=completion,
                                    tol=tol)
    bwd = prediction.predict_backward(cov, completion, rank_tol=tol)
    report["gamma_r"] = _complex_out(bwd.gamma)
    report["omega_r"] = _complex_out(bwd.omega)
    _emit(report, args.out)
    return 0


def cmd_singleton(args, tol):
    cov = _build_cov(args, tol)
    rep = prediction.singleton_test(cov, rank_tol=tol)
    _emit({
        "is_singleton": bool(rep.is_singleton),
        "gap_forward": rep.gap_forward,
        "gap_backward": rep.gap_backward,
        "witness_forward": rep.witness_forward,
        "witness_backward": rep.witness_backward,
    }, args.out)
    return 0


def _lines_payload(lines):
    return [{"theta": line.theta, "V": _complex_out(line.V),
             "rho": _complex_out(line.rho)} for line in lines]


def cmd_lines(args, tol):
    cov = _build_cov(args, tol)
    lines = prediction.line_spectrum(cov, rank_tol=tol)
    _emit({"lines": _lines_payload(lines)}, args.out)
    return 0


def cmd_spectrum(args, tol):
    cov = _build_cov(args, tol)
    spec = central.central_spectrum(cov, rank_tol=tol)
    lossless, lossy = central.lossless_split(spec)
    lines = central.residues(lossless)
    grid = args.grid
    thetas = 2 * np.pi * np.arange(grid) / grid
    dens = central.density(spec, thetas)
    _, rel = central.reconstruct(spec, quad_order=args.quad)
    report = {
        "D_psi": _complex_out(spec.D_psi),
        "A_o": _complex_out(spec.A_o),
        "B_o": _complex_out(spec.B_o),
        "C_o": _complex_out(spec.C_o),
        "quadratic_residual": spec.quadratic_residual,
        "displacement_residual": spec.displacement_residual,
        "lines": _lines_payload(lines),
        "reconstruction_error": rel,
    }
    _emit(report, args.out)
    if args.density_csv:
        m = cov.m
        with open(args.density_csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["theta"]
            for i in range(m):
                for j in range(m):
                    header += [f"re_d{i+1}{j+1}", f"im_d{i+1}{j+1}"]
            writer.writerow(header)
            for theta, d in zip(thetas, dens):
                row = [f"{theta:.12g}"]
                for i in range(m):
                    for j in range(m):
                        row += [f"{d[i, j].real:.12g}", f"{d[i, j].imag:.12g}"]
                writer.writerow(row)
    return 0


def cmd_decompose(args, tol):
    cov = _build_cov(args, tol)
    if args.ma is None:
        result = decompose.white_decompose(cov, weight=_load_weight(args))
        k = None
    else:
        result = decompose.ma_decompose(cov, args.ma)
        k = args.ma
    params = {name: _complex_out(val)
              for name, val in result.noise_params.items()}
    _emit({
        "mode": result.mode,
        "k": k,
        "objective": result.objective_value,
        "R_noise": _complex_out(result.R_noise),
        "R_signal": _complex_out(result.R_signal),
        "Q_blocks": params,
        "certificate": {key: val for key, val in result.certificate.items()
                        if isinstance(val, (int, float, str, type(None)))},
    }, args.out)
    return 0


def _load_weight(args):
    if args.weight is None:
        return None
    return _complex_in(_load_json(args.weight)["W"])


def cmd_simulate(args, tol):
    angles = _parse_scalar_list(args.angles) if args.angles else []
    powers = _parse_scalar_list(args.powers) if args.powers else []
    if len(angles) != len(powers):
        raise _UsageError("--angles and --powers must have equal length")
    if any(p < 0 for p in powers):
        raise _UsageError("powers must be nonnegative")
    coeffs = _parse_scalar_list(args.ma_coeffs) if args.ma_coeffs else []
    length = args.length
    rng = np.random.Generator(np.random.Philox(args.seed))
    phases = rng.uniform(0.0, 2 * np.pi, size=len(angles))
    k = np.arange(length)
    u = np.zeros(length, dtype=complex)
    for theta, power, phi in zip(angles, powers, phases):
        u += np.sqrt(power) * np.exp(1j * (theta * k + phi))
    if coeffs:
        order = len(coeffs) - 1
        w = (rng.standard_normal(length + order)
             + 1j * rng.standard_normal(length + order)) / np.sqrt(2)
        noise = np.zeros(length, dtype=complex)
        for i, c in enumerate(coeffs):
            noise += c * w[order - i:order - i + length]
        u += noise
    out = args.out or "series.csv"
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "re_u1", "im_u1"])
        for i, x in enumerate(u):
            writer.writerow([i, f"{x.real:.17g}", f"{x.imag:.17g}"])
    return 0


def _read_series(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            channels = (len(header) - 1) // 2
            rows = []
            for row in reader:
                vals = [complex(float(row[1 + 2 * c]), float(row[2 + 2 * c]))
                        for c in range(channels)]
                rows.append(vals)
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}") from exc
    return np.array(rows, dtype=complex)


def cmd_estimate(args, tol):
    if args.series is None:
        raise _UsageError("estimate requires --series FILE")
    series = _read_series(args.series)
    m = series.shape[1]
    if args.pair is not None:
        pair = _load_pair(args.pair)
    else:
        if args.lags is None:
            raise _UsageError("estimate requires --pair or --lags")
        pair = system.block_toeplitz_pair(m, args.lags)
    R_hat = covariance.sample_covariance(series, pair)
    cov = covariance.project_to_structure(R_hat, pair, tol=tol)
    distance = float(np.linalg.norm(cov.R - R_hat))
    _emit({
        "pair": _pair_spec(pair),
        "R": _complex_out(cov.R),
        "H": _complex_out(cov.H),
        "projection_distance": distance,
        "samples": int(series.shape[0]),
    }, args.out)
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "predict": cmd_predict,
    "singleton": cmd_singleton,
    "spectrum": cmd_spectrum,
    "lines": cmd_lines,
    "decompose": cmd_decompose,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
}


def _add_cov_flags(sub):
    sub.add_argument("--pair", help="JSON file with the filter pair (A, B)")
    sub.add_argument("--cov", help="JSON file with the covariance matrix R")
    sub.add_argument("--toeplitz",
                     help="comma-separated scalar lags r0,r1,...")
    sub.add_argument("--block-toeplitz", dest="block_toeplitz",
                     help="m,lags,FILE with JSON {'blocks': [...]}")


def build_parser():
    parser = _Parser(prog="statecov",
                     description="Structured state-covariance analysis")
    parser.add_argument("--tol", type=float, default=None,
                        help="rank/admission tolerance (or env CFP_TOL)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("validate", "predict", "singleton", "lines"):
        p = sub.add_parser(name)
        _add_cov_flags(p)
        p.add_argument("--out")
    p = sub.add_parser("spectrum")
    _add_cov_flags(p)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--quad", type=int, default=1024)
    p.add_argument("--density-csv", dest="density_csv")
    p.add_argument("--out")
    p = sub.add_parser("decompose")
    _add_cov_flags(p)
    p.add_argument("--ma", type=int, default=None,
                   help="correlation range k (omit for white noise)")
    p.add_argument("--weight", help="JSON file with {'W': ...}")
    p.add_argument("--out")
    p = sub.add_parser("simulate")
    p.add_argument("--angles", help="comma-separated line angles")
    p.add_argument("--powers", help="comma-separated line powers")
    p.add_argument("--ma-coeffs", dest="ma_coeffs",
                   help="comma-separated MA filter coefficients c0,c1,...")
    p.add_argument("--length", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p = sub.add_parser("estimate")
    p.add_argument("--series", help="CSV series from simulate")
    p.add_argument("--pair", help="JSON file with the filter pair")
    p.add_argument("--lags", type=int, default=None,
                   help="tapped-delay-line length for the default pair")
    p.add_argument("--out")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        tol = args.tol if args.tol is not None else _default_tol()
        if tol <= 0:
            raise _UsageError("--tol must be positive")
        return _COMMANDS[args.command](args, tol)
    except _UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(json.dumps({"error": "InfeasibleError", "message": str(exc),
                          "margin": exc.margin}), file=sys.stderr)
        return 2
    except StatecovError as exc:
        print(json.dumps({"error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
