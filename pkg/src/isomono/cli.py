"""Command-line interface.

Exit status: 0 on success, 2 for invalid or malformed input (including a
failed ``validate``), 3 for numerical failures. Every run writes a manifest
next to ``--output`` (``<output>.manifest.json``) or to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from . import io as fio
from .errors import InputError, IsomonoError, NumericalFailure
from .fuchsian import DEFAULT_TOL_ALG, FuchsianSystem, validate
from .transport import DEFAULT_TOL_MON, DEFAULT_TOL_ODE

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Run:
    def __init__(self, args):
        self.args = args
        self.inputs: dict = {}
        self.extra: dict = {}

    def load(self, path: str | None, what: str):
        if not path:
            raise InputError(f"--{what} is required")
        with open(path, "rb") as fh:
            self.inputs[path] = hashlib.sha256(fh.read()).hexdigest()
        return fio.read_json(path)

    def system(self) -> FuchsianSystem:
        d = self.load(self.args.input, "input")
        sys_ = fio.system_from_dict(d)
        if self.args.tol_alg is not None:
            sys_ = FuchsianSystem(sys_.points, sys_.residues, sys_.lambdas, self.args.tol_alg)
        return sys_


def parse_complex_arg(s: str) -> complex:
    s = s.strip().replace(" ", "")
    try:
        return complex(s)
    except ValueError:
        pass
    try:
        re_, im_ = s.split(",")
        return complex(float(re_), float(im_))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read a complex number from {s!r}") from None


def _tol_ode(a):
    return a.tol_ode if a.tol_ode is not None else DEFAULT_TOL_ODE


def _tol_mon(a):
    return a.tol_mon if a.tol_mon is not None else DEFAULT_TOL_MON


# ---------------------------------------------------------------- commands


def cmd_validate(run: _Run) -> tuple[str, int]:
    sys_ = run.system()
    viol = validate(sys_)
    out = {"schema_version": fio.SCHEMA_VERSION, "valid": not viol,
           "violations": [{"kind": v.kind, "index": v.index, "detail": v.detail} for v in viol]}
    return fio.dumps(out), EXIT_OK if not viol else EXIT_INPUT


def _mono_rows(rep):
    rows = []
    for k, m in enumerate(rep.matrices):
        tr = np.trace(m)
        entries = [f(m[r, c]) for r in range(2) for c in range(2) for f in (np.real, np.imag)]
        rows.append([k, *entries, tr.real, tr.imag, abs(np.linalg.det(m) - 1), rep.est_error])
    return rows


MONO_HEADER = ["index", "m11_re", "m11_im", "m12_re", "m12_im", "m21_re", "m21_im", "m22_re", "m22_im",
               "trace_re", "trace_im", "det_err", "est_error"]


def cmd_monodromy(run: _Run):
    from .transport import monodromy_rep

    sys_ = run.system()
    rep = monodromy_rep(sys_, run.args.base, _tol_ode(run.args))
    run.extra["base"] = [rep.base.real, rep.base.imag]
    run.extra["est_error"] = rep.est_error
    run.extra["within_tol_mon"] = rep.est_error < _tol_mon(run.args)
    return fio.csv_text(MONO_HEADER, _mono_rows(rep)), EXIT_OK


def cmd_flow(run: _Run):
    from .schlesinger import conserved_report, flow

    sys_ = run.system()
    dpath = fio.path_from_dict(run.load(run.args.path, "path"))
    traj = flow(sys_, dpath, _tol_ode(run.args))
    fin = sys_.finite_indices
    header = ["time"]
    for i in fin:
        header += [f"a{i}_re", f"a{i}_im"]
    for i in fin:
        header += [f"b{i}_{r}{c}_{part}" for r in (1, 2) for c in (1, 2) for part in ("re", "im")]
    header += ["eigen_drift", "trace_drift", "residue_sum_drift"]
    rows = []
    for (t, s), rep in zip(traj.samples, conserved_report(traj)):
        row = [t]
        for a in s.poles:
            row += [a.real, a.imag]
        for B in s.finite_residues:
            row += [f(B[r, c]) for r in range(2) for c in range(2) for f in (np.real, np.imag)]
        row += [rep.eigenvalue_drift, rep.trace_drift, rep.residue_sum_drift]
        rows.append(row)
    run.extra.update(traj.stats)
    return fio.csv_text(header, rows), EXIT_OK


def cmd_sov(run: _Run):
    from .sov import separated_variables

    sep = separated_variables(run.system())
    return fio.dumps(fio.sep_to_dict(sep)), EXIT_OK


def cmd_spectral(run: _Run):
    from .sov import spectral_curve

    sc = spectral_curve(run.system())
    rows = [[k, c.real, c.imag] for k, c in enumerate(sc.numerator)]
    return fio.csv_text(["power", "re", "im"], rows), EXIT_OK


def cmd_reconstruct(run: _Run):
    from .sov import reconstruct_with_report

    sep = fio.sep_from_dict(run.load(run.args.input, "input"))
    pts, lam, tol = fio.poles_from_dict(run.load(run.args.poles, "poles"))
    sys_, info = reconstruct_with_report(sep, pts, lam, run.args.tol_alg or tol)
    run.extra.update(info)
    return fio.dumps(fio.system_to_dict(sys_)), EXIT_OK


def cmd_hecke(run: _Run):
    from .hecke import PairedMove, monodromy_effect, paired_modify

    a = run.args
    sys_ = run.system()
    j = a.i if a.same_point else a.j
    if j is None:
        raise InputError("--j is required unless --same-point is given")
    new = paired_modify(sys_, a.i, j, (a.dir_i, a.dir_j))
    shifts = PairedMove(a.i, j, (a.dir_i, a.dir_j)).shifts()
    cmp = monodromy_effect(sys_, new, a.base, _tol_ode(a))
    rows = []
    for k in range(sys_.n):
        lam0, lam1 = sys_.lambdas[k], new.lambdas[k]
        ev = np.linalg.eigvals(new.residues[k])
        err = min(abs(ev[0] - lam1) + abs(ev[1] + lam1), abs(ev[1] - lam1) + abs(ev[0] + lam1))
        c = cmp[k]
        rows.append([k, lam0.real, lam0.imag, lam1.real, lam1.imag, str(shifts.get(k, 0)), err,
                     c.trace.real, c.trace.imag, c.trace_modified.real, c.trace_modified.imag,
                     c.abs_difference])
    header = ["index", "lambda_re", "lambda_im", "lambda_new_re", "lambda_new_im", "shift", "eig_err",
              "trace_re", "trace_im", "trace_new_re", "trace_new_im", "abs_trace_diff"]
    return fio.csv_text(header, rows), EXIT_OK


def cmd_pvi(run: _Run):
    from .pvi import normalize_moebius, pvi_flow, pvi_parameters, pvi_residual, s4_orbit, _is_normalized

    a = run.args
    parts = []
    if a.orbit is not None:
        orbit = s4_orbit(a.orbit)
        parts.append(fio.csv_text(["label", "re", "im"], [[lbl, v.real, v.imag] for lbl, v in orbit]))
        if a.input is None:
            return "".join(parts), EXIT_OK
    sys_ = run.system()
    if not _is_normalized(sys_):
        sys_, t, _ = normalize_moebius(sys_)
        run.extra["t"] = [t.real, t.imag]
    verts = fio.vertices_from_dict(run.load(a.path, "path"))
    res = pvi_flow(sys_, verts, _tol_ode(a), check_monodromy=not a.no_monodromy, base=a.base)
    params = None
    if a.pvi_params is not None:
        params = pvi_parameters(sys_.lambdas) if a.pvi_params == "auto" else \
            tuple(parse_complex_arg(v) for v in a.pvi_params.split(";"))
        if len(params) != 4:
            raise InputError("--pvi-params needs four values separated by ';' or 'auto'")
    header = ["s", "t_re", "t_im", "x_re", "x_im", "p_re", "p_im", "eigen_drift", "flags",
              "chart_point", "chart_branch", "chart_s_re", "chart_s_im"]
    if params is not None:
        header.append("pvi_residual")
    nan = float("nan")
    rows = []
    for row, (_, snap) in zip(res.rows, res.trajectory.samples):
        x = row.x if row.x is not None else complex(nan, nan)
        p = row.p if row.p is not None else complex(nan, nan)
        ch = row.charts[0] if row.charts else None
        s = ch.s if ch is not None and ch.s is not None else complex(nan, nan)
        line = [row.s, row.t.real, row.t.imag, x.real, x.imag, p.real, p.imag, row.eigen_drift, row.flags,
                ch.index if ch else "", ch.branch if ch else "", s.real, s.imag]
        if params is not None:
            try:
                line.append(pvi_residual(snap, params))
            except IsomonoError:
                line.append(nan)
        rows.append(line)
    if res.monodromy_drift is not None:
        run.extra["monodromy_drift"] = res.monodromy_drift
    parts.append(fio.csv_text(header, rows))
    return "".join(parts), EXIT_OK


def cmd_random(run: _Run):
    from .generate import random_system

    a = run.args
    sys_ = random_system(a.seed, a.n, (a.lam_min, a.lam_max), a.lam_imag,
                         tol_alg=a.tol_alg if a.tol_alg is not None else DEFAULT_TOL_ALG)
    return fio.dumps(fio.system_to_dict(sys_)), EXIT_OK


COMMANDS = {
    "validate": cmd_validate, "monodromy": cmd_monodromy, "flow": cmd_flow, "sov": cmd_sov,
    "spectral": cmd_spectral, "reconstruct": cmd_reconstruct, "hecke": cmd_hecke, "pvi": cmd_pvi,
    "random": cmd_random,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--tol-ode", type=float, help=f"integrator tolerance (default {DEFAULT_TOL_ODE:g})")
    common.add_argument("--tol-alg", type=float, help="algebraic tolerance (default: from the input)")
    common.add_argument("--tol-mon", type=float, help=f"monodromy tolerance (default {DEFAULT_TOL_MON:g})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--base", type=parse_complex_arg, help="base point, e.g. '0.1+0.2j' or '0.1,0.2'")
    common.add_argument("--path", help="JSON polyline file")
    common.add_argument("--orbit", type=parse_complex_arg, help="print the six cross-ratio values of X")
    p = argparse.ArgumentParser(prog="isomono", description="Rank-2 Fuchsian systems: monodromy, "
                                "isomonodromic flow, modifications and separated variables.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "hecke":
            sp.add_argument("--i", type=int, required=True)
            sp.add_argument("--j", type=int)
            sp.add_argument("--dir-i", choices=["+", "-"], default="-")
            sp.add_argument("--dir-j", choices=["+", "-"], default="+")
            sp.add_argument("--same-point", action="store_true")
        elif name == "random":
            sp.add_argument("--n", type=int, default=4)
            sp.add_argument("--lam-min", type=float, default=0.1)
            sp.add_argument("--lam-max", type=float, default=0.45)
            sp.add_argument("--lam-imag", type=float, default=0.0)
        elif name == "reconstruct":
            sp.add_argument("--poles", help="JSON file with 'points' and 'lambda'")
        elif name == "pvi":
            sp.add_argument("--pvi-params", help="'auto' or 'alpha;beta;gamma;delta' for a residual column")
            sp.add_argument("--no-monodromy", action="store_true", help="skip the endpoint monodromy check")
    return p


def _manifest(run: _Run, status: int, error: str | None, wall: float) -> dict:
    a = run.args
    return {
        "schema_version": fio.SCHEMA_VERSION,
        "command": a.command,
        "inputs": run.inputs,
        "tolerances": {"tol_ode": _tol_ode(a), "tol_alg": a.tol_alg, "tol_mon": _tol_mon(a)},
        "seed": a.seed,
        "version": __version__,
        "wall_clock_s": wall,
        "exit_code": status,
        "error": error,
        "extra": run.extra,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = _Run(args)
    t0 = time.perf_counter()
    text, status, error = "", EXIT_OK, None
    try:
        text, status = COMMANDS[args.command](run)
    except InputError as exc:
        status, error = EXIT_INPUT, f"{type(exc).__name__}: {exc}"
    except NumericalFailure as exc:
        status, error = EXIT_NUMERIC, f"NumericalFailure: {type(exc).__name__}: {exc}"
    except OSError as exc:
        status, error = EXIT_INPUT, f"{type(exc).__name__}: {exc}"
    if error:
        print(error, file=sys.stderr)
    if text:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    manifest = json.dumps(_manifest(run, status, error, time.perf_counter() - t0), indent=2, default=str)
    if args.output:
        with open(args.output + ".manifest.json", "w", encoding="utf-8") as fh:
            fh.write(manifest + "\n")
    else:
        print(manifest, file=sys.stderr)
    return status
