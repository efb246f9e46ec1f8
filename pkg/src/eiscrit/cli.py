"""Command-line front end: verification sweeps and data export.

Defaults come from flags, then EISCRIT_-prefixed environment variables,
then built-ins (tol 1e-9, 128 precision bits).  Reports are deterministic:
rows sorted by (k, check), floats printed with fixed formatting.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

PI = math.pi


@dataclass(frozen=True)
class RunConfig:
    k_values: tuple[int, ...]
    precision_bits: int = 128
    tol: float = 1e-9
    output_format: str = "csv"
    output_path: str = "."
    parallelism: int = 1


def _env(name: str, default, cast):
    raw = os.environ.get(f"EISCRIT_{name}")
    if raw is None:
        return default
    return cast(raw)


def _parse_k(spec: str, minimum: int = 4) -> tuple[int, ...]:
    if ".." in spec:
        lo, hi = spec.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo = hi = int(spec)
    if lo % 2 or hi % 2 or lo < minimum or hi < lo:
        raise argparse.ArgumentTypeError(
            f"--k wants even values >= {minimum} (single or lo..hi), got {spec!r}")
    return tuple(range(lo, hi + 1, 2))


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


# ----------------------------------------------------------------- verify

def _row(check: str, k: int, expected, observed, ok: bool) -> dict:
    return {"check": check, "k": k, "expected": _fmt(expected),
            "observed": _fmt(observed), "status": "pass" if ok else "FAIL"}


def _verify_one_k(args) -> list[dict]:
    k, tol = args
    from .critzeros import locate_arc_zeros, locate_line_zeros, proposition1_sign
    from .phimap import expected_w_end, total_line_count, w_table
    from .types import ContradictionError, ZeroOnCurveError
    from .winding import (compute_A, compute_B, contour_count_I, expected_A,
                          expected_B)
    rows: list[dict] = []

    def guard(check, expected, fn):
        try:
            observed, ok = fn()
        except Exception as exc:  # a contradiction surfaces as a named FAIL
            rows.append(_row(check, k, expected, f"error: {exc}", False))
            return
        rows.append(_row(check, k, expected, observed, ok))

    def line_zeros():
        scan = locate_line_zeros(k)
        return scan

    guard("line_zero_count", (k - 4) // 6,
          lambda: (len(line_zeros().records),
                   len(line_zeros().records) == (k - 4) // 6))
    guard("line_endpoint_zero", k % 6 == 2,
          lambda: (line_zeros().endpoint_is_zero,
                   line_zeros().endpoint_is_zero == (k % 6 == 2)))
    guard("line_residuals", f"<= {tol:.3g}",
          lambda: ((max((r.residual for r in line_zeros().records), default=0.0)),
                   max((r.residual for r in line_zeros().records), default=0.0) <= tol))
    guard("line_simplicity", ">= 1e6 x residual",
          lambda: ((min((r.simplicity_margin / max(r.residual, 1e-300)
                         for r in line_zeros().records), default=math.inf)),
                   min((r.simplicity_margin / max(r.residual, 1e-300)
                        for r in line_zeros().records), default=math.inf) >= 1e6))

    def prop1():
        ms = range(1, (k + 1) // 6 + 1)
        good = sum(proposition1_sign(k, m) == (-1) ** m for m in ms)
        return f"{good}/{len(list(ms))}", good == len(list(ms))

    guard("prop1_signs", "all (-1)^m", prop1)

    def arc():
        scan = locate_arc_zeros(k)
        rem = k % 6
        n_exp = {4: (k - 4) // 6, 0: k // 6, 2: (k - 8) // 6}[rem]
        return len(scan.interior), len(scan.interior) == n_exp

    guard("arc_zero_count", {4: (k - 4) // 6, 0: k // 6, 2: (k - 8) // 6}[k % 6], arc)
    guard("arc_endpoint_order", {4: 1, 0: 0, 2: 2}[k % 6],
          lambda: (locate_arc_zeros(k).endpoint_order,
                   locate_arc_zeros(k).endpoint_order == {4: 1, 0: 0, 2: 2}[k % 6]))

    wtol = 1e-6
    guard("winding_A", _fmt(expected_A(k)),
          lambda: (compute_A(k), abs(compute_A(k) - expected_A(k)) <= wtol))
    guard("winding_B", _fmt(expected_B(k)),
          lambda: (compute_B(k), abs(compute_B(k) - expected_B(k)) <= wtol))
    guard("winding_eq15", "A = -(k+2)pi/6 + B",
          lambda: (compute_A(k) - (-(k + 2) * PI / 6 + compute_B(k)),
                   abs(compute_A(k) - (-(k + 2) * PI / 6 + compute_B(k))) <= 2e-6))
    guard("winding_count_I", (k - 4) // 6,
          lambda: (contour_count_I(k),
                   abs(contour_count_I(k) - (k - 4) // 6) <= wtol))

    guard("w_endpoint", _fmt(expected_w_end(k)),
          lambda: (w_table(k).w_end,
                   abs(w_table(k).w_end - expected_w_end(k)) <= 1e-9))
    guard("w_monotone", True,
          lambda: (bool(np.all(np.diff(w_table(k).w) > 0)),
                   bool(np.all(np.diff(w_table(k).w) > 0))))
    guard("total_line_count", 1 + 2 * ((k - 2) // 6),
          lambda: (total_line_count(k),
                   total_line_count(k) == 1 + 2 * ((k - 2) // 6)))
    return rows


def _verify_global() -> list[dict]:
    from fractions import Fraction as Fr

    from .critzeros import e2_line_zero
    from .quasimod import (ONE, X, Y, Z, apply_D, build_Ff, check_bracket,
                           check_lemma17, q_expand)
    rows = []
    try:
        ok = all(check_bracket(p) for p in (X, Y, Z, Y * Z, X ** 3, X * Y))
        rows.append(_row("quasimod_bracket", 0, True, ok, ok))
        cases = [(f, r, j) for f in (Y, Z, Y * Y, Y * Z) for r in range(5)
                 for j in range(r + 1)]
        ok = all(check_lemma17(f, r, j) for f, r, j in cases)
        ok = ok and all(check_lemma17(X, r, j) for r in range(5) for j in range(r + 1))
        rows.append(_row("quasimod_weight_ladder", 0, True, ok, ok))
        ok = True
        for p in (X, Y, Z, Y ** 3 - Z ** 2, X * Y):
            lhs = q_expand(apply_D(p), 32)
            rhs = q_expand(p, 32).differentiated()
            ok = ok and lhs == rhs
        rows.append(_row("quasimod_D_vs_qddq", 0, True, ok, ok))
        ok = all(build_Ff(f).is_x_free and q_expand(build_Ff(f), 1)[0] == Fr(0)
                 for f in (Y, Z, Y * Y, Y * Z))
        rows.append(_row("quasimod_Ff_cuspidal", 0, True, ok, ok))
    except Exception as exc:
        rows.append(_row("quasimod", 0, "identities", f"error: {exc}", False))
    try:
        rec = e2_line_zero()
        ok = rec.simplicity_margin > 0 and rec.residual <= 1e-9
        rows.append(_row("e2_zero_simple", 2, "simple zero on the axis",
                         f"t={rec.location.im:.12f}", ok))
    except Exception as exc:
        rows.append(_row("e2_zero_simple", 2, "simple zero", f"error: {exc}", False))
    return rows


def cmd_verify(config: RunConfig) -> tuple[int, list[dict]]:
    """Run the invariant suite over the configured weights."""
    rows = _verify_global()
    work = [(k, config.tol) for k in config.k_values]
    if config.parallelism > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            for part in pool.map(_verify_one_k, work):
                rows.extend(part)
    else:
        for w in work:
            rows.extend(_verify_one_k(w))
    rows.sort(key=lambda r: (r["k"], r["check"]))
    exit_code = 0 if all(r["status"] == "pass" for r in rows) else 1
    return exit_code, rows


def _write_report(rows: list[dict], config: RunConfig, stream) -> None:
    if config.output_format == "json":
        json.dump(rows, stream, indent=1, sort_keys=True)
        stream.write("\n")
    else:
        w = csv.DictWriter(stream, fieldnames=["check", "k", "expected",
                                               "observed", "status"])
        w.writeheader()
        w.writerows(rows)


# ----------------------------------------------------------------- export

def _outdir(config: RunConfig) -> Path:
    p = Path(config.output_path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_table(path: Path, header: list[str], rows: list[list], fmt: str) -> None:
    if fmt == "json":
        payload = [dict(zip(header, [_fmt(v) for v in row])) for row in rows]
        path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
    else:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])


def cmd_export(subcommand: str, config: RunConfig) -> list[Path]:
    """Write deterministic data files for one export target."""
    out = _outdir(config)
    fmt = config.output_format
    written: list[Path] = []
    for k in config.k_values:
        if subcommand == "line-zeros":
            from .critzeros import locate_line_zeros
            scan = locate_line_zeros(k)
            rows = [[k, "line", 0.5, r.location.im, r.residual,
                     r.simplicity_margin, r.bracket[0], r.bracket[1]]
                    for r in scan.records]
            if scan.endpoint_is_zero:
                rows.append([k, "endpoint", 0.5, math.sqrt(3) / 2,
                             scan.endpoint_residual, 0.0, 0.0, 0.0])
            path = out / f"line_zeros_k{k}.{fmt}"
            _write_table(path, ["k", "kind", "re", "im", "residual", "margin",
                                "bracket_lo", "bracket_hi"], rows, fmt)
            written.append(path)
        elif subcommand == "arc-zeros":
            from .critzeros import locate_arc_zeros
            scan = locate_arc_zeros(k)
            rows = [[k, "arc", r.theta, r.f_residual, r.g_sign]
                    for r in scan.interior]
            rows += [[k, "endpoint", r.theta, r.f_residual, r.g_sign]
                     for r in scan.endpoint_records]
            path = out / f"arc_zeros_k{k}.{fmt}"
            _write_table(path, ["k", "kind", "theta", "f_residual", "g_sign"],
                         rows, fmt)
            written.append(path)
        elif subcommand == "gk-curve":
            from .winding import _gk_sampler, arg_variation
            trace = arg_variation(_gk_sampler(k), PI / 3 + (1e-6 if k % 6 == 2 else 0),
                                  2 * PI / 3 - (1e-6 if k % 6 == 2 else 0),
                                  n0=max(4 * k, 64), keep_trace=True)
            rows = [[t, v.real, v.imag, a] for t, v, a in
                    zip(trace.parameter_samples, trace.values, trace.unwrapped_args)]
            path = out / f"gk_curve_k{k}.csv"
            _write_table(path, ["parameter", "re", "im", "unwrapped_arg"], rows, "csv")
            written.append(path)
        elif subcommand == "locus":
            from .phimap import trace_locus
            for cur in trace_locus(k):
                payload = [[z.real, z.imag] for z in cur.polyline]
                path = out / f"locus_k{k}_curve{cur.index}.json"
                path.write_text(json.dumps(payload) + "\n")
                written.append(path)
                mirror = [[-z.real, z.imag] for z in cur.polyline]
                mpath = out / f"locus_k{k}_curve{cur.index}_mirror.json"
                mpath.write_text(json.dumps(mirror) + "\n")
                written.append(mpath)
        elif subcommand == "trajectory":
            from .phimap import delta_trajectory
            params, zs, phis = delta_trajectory(k)
            rows = [[t, z.real, z.imag, p.real, p.imag]
                    for t, z, p in zip(params, zs, phis)]
            path = out / f"trajectory_k{k}.csv"
            _write_table(path, ["parameter", "z_re", "z_im", "phi_re", "phi_im"],
                         rows, "csv")
            written.append(path)
        elif subcommand == "vk":
            from .phimap import pole_table, v_value
            bs = list(pole_table(k, crosscheck=False).b_values)
            ts = np.linspace(math.sqrt(3) / 2, (max(bs) + 1.0) if bs else 3.0, 400)
            rows = []
            for t in ts:
                if all(abs(t - b) > 2e-2 for b in bs):
                    rows.append([t, v_value(k, float(t))])
            path = out / f"vk_k{k}.csv"
            _write_table(path, ["t", "v"], rows, "csv")
            written.append(path)
        elif subcommand == "wk":
            from .phimap import w_table
            tab = w_table(k)
            rows = [[t, w] for t, w in zip(tab.thetas, tab.w)]
            path = out / f"wk_k{k}.csv"
            _write_table(path, ["theta", "w"], rows, "csv")
            written.append(path)
        else:
            raise SystemExit(f"unknown export target {subcommand!r}")
    return written


# ------------------------------------------------------------------- main

def _add_common(p: argparse.ArgumentParser, k_min: int = 4) -> None:
    p.add_argument("--k", required=True,
                   type=lambda s: _parse_k(s, k_min),
                   help="even weight or inclusive range lo..hi")
    p.add_argument("--tol", type=float,
                   default=_env("TOL", 1e-9, float))
    p.add_argument("--precision-bits", type=int,
                   default=_env("PRECISION_BITS", 128, int))
    p.add_argument("--format", choices=("json", "csv"),
                   default=_env("FORMAT", "csv", str))
    p.add_argument("--out", default=_env("OUT", ".", str))
    p.add_argument("--jobs", type=int, default=_env("JOBS", 1, int))


def _config(args) -> RunConfig:
    return RunConfig(k_values=args.k, precision_bits=args.precision_bits,
                     tol=args.tol, output_format=args.format,
                     output_path=args.out, parallelism=args.jobs)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eiscrit",
        description="verified critical points of the normalized weight-k series")
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run the invariant suite over a weight range")
    _add_common(pv)

    pe = sub.add_parser("export", help="write plot-ready data files")
    pe.add_argument("target", choices=("line-zeros", "arc-zeros", "gk-curve",
                                       "locus", "trajectory", "vk", "wk"))
    _add_common(pe)

    ps = sub.add_parser("phi-solve", help="solve the equivariant map equation")
    _add_common(ps)
    ps.add_argument("--lambda", dest="lam", required=True,
                    help="rational target, e.g. 3/2 or -1")

    pg = sub.add_parser("gamma-count", help="count critical points in a transported domain")
    _add_common(pg)
    pg.add_argument("--gamma", required=True, help="matrix entries a,b,c,d")

    args = parser.parse_args(argv)
    config = _config(args)

    if args.command == "verify":
        code, rows = cmd_verify(config)
        if config.output_path not in (".", "-") and config.output_path:
            out = Path(config.output_path)
            if out.is_dir():
                out = out / f"report.{config.output_format}"
            with out.open("w", newline="") as fh:
                _write_report(rows, config, fh)
        _write_report(rows, config, sys.stdout)
        n_fail = sum(r["status"] != "pass" for r in rows)
        print(f"# {len(rows)} checks, {n_fail} failures", file=sys.stderr)
        return code

    if args.command == "export":
        files = cmd_export(args.target, config)
        for f in files:
            print(f)
        return 0

    if args.command == "phi-solve":
        from .phimap import solve_phi_eq
        lam = Fraction(args.lam)
        for k in config.k_values:
            sols = solve_phi_eq(k, lam)
            payload = {"k": k, "lambda": str(lam),
                       "count": len(sols),
                       "solutions": [[z.real, z.imag] for z in sols]}
            print(json.dumps(payload, sort_keys=True))
        return 0

    if args.command == "gamma-count":
        from .phimap import UnimodularMatrix, zeros_in_gamma_D
        a, b, c, d = (int(x) for x in args.gamma.split(","))
        gamma = UnimodularMatrix(a, b, c, d)
        for k in config.k_values:
            pts = zeros_in_gamma_D(k, gamma)
            payload = {"k": k, "gamma": [a, b, c, d], "count": len(pts),
                       "points": [[z.real, z.imag] for z in pts]}
            print(json.dumps(payload, sort_keys=True))
        return 0

    return 2


if __name__ == "__main__":
    raise SystemExit(main())
