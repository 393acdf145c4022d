"""Command-line front end.

Usage::

    diracweyl <command> --config job.yaml [--out PATH] [--format csv|doc]
                        [--verify] [--jobs N]

Exit status is 0 on success, 2 for configuration problems and 3 when the
computation itself fails (the error class name is printed on stderr).
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, parse_config
from .core import SignatureLayout
from .errors import ConfigInvalid, DiracWeylError, NonFiniteOutput
from .gbdt import identity_residual_at, make_gbdt, sample_potential
from .linalg import opnorm
from .pipeline import roundtrip
from .spectral import bound_states, potential_identity_residual, spectrum_check
from .weyl_direct import estimate_weyl
from .weyl_inverse import (Realization, check_admissible, eval_transfer, mcmillan_reduce,
                           params_from_riccati, solve_riccati, weyl_closed_form)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULT_FORMAT = {
    "gen-potential": "csv", "weyl-eval": "csv", "direct-solve": "csv",
    "inverse": "doc", "roundtrip": "csv", "bound-states": "doc",
}

_VERIFY_ZS = (1j, 2j, 1 + 1j)


# -- formatting ---------------------------------------------------------------

def _num(x):
    x = float(x)
    if not np.isfinite(x):
        raise NonFiniteOutput("refusing to write a non-finite value")
    return "0" if x == 0 else format(x, ".17g")


def _entries(M):
    """re/im pairs of a matrix in row-major order."""
    out = []
    for c in np.asarray(M, dtype=complex).ravel():
        out += [_num(c.real), _num(c.imag)]
    return out


def _entry_names(prefix, rows, cols):
    return [f"{prefix}{r + 1}{c + 1}_{part}"
            for r in range(rows) for c in range(cols) for part in ("re", "im")]


def _csv(header, rows):
    lines = [",".join(header)] + [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            raise NonFiniteOutput("refusing to write a non-finite value")
        return 0.0 if x == 0 else x
    return obj


def _doc(payload):
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- sources ------------------------------------------------------------------

def _params(cfg):
    g = cfg.gbdt
    return make_gbdt(SignatureLayout(g["m1"], g["m2"]), g["alpha"], g["sigma0"],
                     g["theta1"], g["theta2"], tol_identity=cfg.tolerances["identity"])


def _realization(cfg):
    r = cfg.realization
    return Realization(r["C"], r["A"], r["B"])


def _solve_inverse(cfg):
    """(reduced realization, Riccati solution or None, parameters)."""
    tol = cfg.tolerances
    Rm = mcmillan_reduce(_realization(cfg), tol["rank"])
    if Rm.N == 0:
        return Rm, None, params_from_riccati(Rm, None)
    check_admissible(Rm)
    sol = solve_riccati(Rm, tol["riccati"])
    return Rm, sol, params_from_riccati(Rm, sol.X, tol["identity"])


def _any_params(cfg):
    return _params(cfg) if cfg.gbdt is not None else _solve_inverse(cfg)[2]


def _map(jobs):
    if jobs <= 1:
        return map
    pool = ThreadPoolExecutor(max_workers=jobs)

    def mapper(fn, items):
        with pool:
            return list(pool.map(fn, items))

    return mapper


# -- commands -----------------------------------------------------------------

def _params_doc(params):
    return {"m1": params.layout.m1, "m2": params.layout.m2, "n": params.n,
            "alpha": params.alpha, "sigma0": params.sigma0,
            "theta1": params.theta1, "theta2": params.theta2}


def _potential_table(pot, fmt):
    lay = pot.layout
    if fmt == "csv":
        header = ["x"] + _entry_names("v", lay.m1, lay.m2)
        return _csv(header, [[_num(x)] + _entries(v) for x, v in zip(pot.xs, pot.vs)])
    return {"x": pot.xs, "v": [np.asarray(v) for v in pot.vs]}


def _params_verification(params, xs):
    picks = xs[np.unique(np.linspace(0, xs.size - 1, min(11, xs.size)).astype(int))]
    sp = spectrum_check(params)
    return {
        "identity_residual": params.identity_residual(),
        "identity_residual_on_grid": max(identity_residual_at(params, x) for x in picks),
        "potential_identity_residual": max(potential_identity_residual(params, x) for x in picks),
        "theta_max_imag_eigenvalue": sp.max_imag if params.n else 0.0,
        "theta_spectrum_ok": sp.ok,
    }


def cmd_gen_potential(cfg, fmt, verify, jobs):
    params = _any_params(cfg)
    pot = sample_potential(params, cfg.grid["x_max"], cfg.grid["step"])
    report = _params_verification(params, pot.xs) if verify else None
    if fmt == "csv":
        return _potential_table(pot, fmt), report
    body = {"command": cfg.command, "params": _params_doc(params),
            "potential": _potential_table(pot, fmt)}
    if report is not None:
        body["verify"] = report
    return _doc(body), None


def cmd_weyl_eval(cfg, fmt, verify, jobs):
    if cfg.gbdt is not None:
        params = _params(cfg)
        lay = params.layout
        fn = lambda z: weyl_closed_form(params, z)  # noqa: E731
    else:
        R = _realization(cfg)
        lay = R.layout
        fn = lambda z: eval_transfer(R, z)  # noqa: E731
    phis = list(_map(jobs)(fn, cfg.z_points))
    if fmt == "csv":
        header = ["z_re", "z_im"] + _entry_names("phi", lay.m2, lay.m1)
        rows = [[_num(z.real), _num(z.imag)] + _entries(p) for z, p in zip(cfg.z_points, phis)]
        return _csv(header, rows), None
    return _doc({"command": cfg.command,
                 "points": [{"z": z, "phi": p} for z, p in zip(cfg.z_points, phis)]}), None


def cmd_direct_solve(cfg, fmt, verify, jobs):
    params = _any_params(cfg)
    x_max, step = cfg.grid["x_max"], cfg.grid["step"]
    pot = sample_potential(params, x_max, step)
    ests = list(_map(jobs)(lambda z: estimate_weyl(pot, z, x_max), cfg.z_points))
    lay = params.layout
    if fmt == "csv":
        header = (["z_re", "z_im"] + _entry_names("phi", lay.m2, lay.m1)
                  + ["radius_bound", "ball_radius", "grid_error", "x_used"])
        rows = [[_num(e.z.real), _num(e.z.imag)] + _entries(e.phi)
                + [_num(e.radius_bound), _num(e.ball_radius), _num(e.grid_error), _num(e.x_used)]
                for e in ests]
        return _csv(header, rows), None
    return _doc({"command": cfg.command, "estimates": [
        {"z": e.z, "phi": e.phi, "radius_bound": e.radius_bound, "ball_radius": e.ball_radius,
         "grid_error": e.grid_error, "x_used": e.x_used} for e in ests]}), None


def cmd_inverse(cfg, fmt, verify, jobs):
    Rm, sol, params = _solve_inverse(cfg)
    pot = sample_potential(params, cfg.grid["x_max"], cfg.grid["step"])
    report = None
    if verify:
        report = _params_verification(params, pot.xs)
        report["riccati_residual"] = 0.0 if sol is None else sol.residual
        report["closed_form_roundtrip"] = max(
            opnorm(weyl_closed_form(params, z) - eval_transfer(Rm, z)) for z in _VERIFY_ZS)
    if fmt == "csv":
        return _potential_table(pot, fmt), report
    body = {"command": cfg.command, "params": _params_doc(params),
            "reduced_order": Rm.N,
            "riccati_residual": 0.0 if sol is None else sol.residual,
            "potential": _potential_table(pot, fmt)}
    if report is not None:
        body["verify"] = report
    return _doc(body), None


def cmd_roundtrip(cfg, fmt, verify, jobs):
    R = _realization(cfg)
    params = _solve_inverse(cfg)[2]
    rows = roundtrip(R, cfg.z_points, cfg.grid["x_max"], cfg.grid["step"], params=params,
                     slack=cfg.tolerances["roundtrip_slack"], mapper=_map(jobs))
    lay = R.layout
    if fmt == "csv":
        header = (["z_re", "z_im"] + _entry_names("exact", lay.m2, lay.m1)
                  + _entry_names("estimate", lay.m2, lay.m1) + ["deviation", "radius_bound", "pass"])
        out = [[_num(r.z.real), _num(r.z.imag)] + _entries(r.phi_exact) + _entries(r.phi_estimate)
               + [_num(r.deviation), _num(r.radius_bound), "1" if r.passed else "0"] for r in rows]
        return _csv(header, out), None
    return _doc({"command": cfg.command, "rows": [
        {"z": r.z, "exact": r.phi_exact, "estimate": r.phi_estimate, "deviation": r.deviation,
         "radius_bound": r.radius_bound, "pass": r.passed} for r in rows]}), None


def cmd_bound_states(cfg, fmt, verify, jobs):
    params = _any_params(cfg)
    sp = spectrum_check(params)
    states = bound_states(params, cfg.grid["x_max"], cfg.grid["step"],
                          tol=cfg.tolerances["real_eigenvalue"])
    fields = ("lam", "g0_norm", "g_max", "l2_norm_estimate", "l2_bound", "tail",
              "ode_residual", "consequence_residual")
    if fmt == "csv":
        rows = [[_num(getattr(s, f)) for f in fields] for s in states]
        return _csv(list(fields), rows), None
    return _doc({"command": cfg.command,
                 "theta_eigenvalues": sp.eigenvalues, "theta_spectrum_ok": sp.ok,
                 "states": [dict({f: getattr(s, f) for f in fields}, f=s.f) for s in states]}), None


_COMMANDS = {
    "gen-potential": cmd_gen_potential, "weyl-eval": cmd_weyl_eval,
    "direct-solve": cmd_direct_solve, "inverse": cmd_inverse,
    "roundtrip": cmd_roundtrip, "bound-states": cmd_bound_states,
}


def run(cfg, fmt=None, verify=False, jobs=1):
    """Execute a parsed job; returns ``(text, verification report or None)``."""
    fmt = fmt or cfg.output_format or DEFAULT_FORMAT[cfg.command]
    return _COMMANDS[cfg.command](cfg, fmt, verify, jobs)


# -- entry point --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="diracweyl", description="Weyl functions of Dirac systems")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path)
        s.add_argument("--format", choices=("csv", "doc"))
        s.add_argument("--verify", action="store_true",
                       help="report invariant residuals (stderr for csv, embedded for doc)")
        s.add_argument("--jobs", type=int, default=1, help="worker threads for per-z work")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"ConfigInvalid: cannot read {args.config}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, command=args.command)
        if args.jobs < 1:
            raise ConfigInvalid("--jobs must be at least 1")
        out = args.out
        if out is None and cfg.output_path:
            out = args.config.parent / cfg.output_path
        body, report = run(cfg, args.format, args.verify, args.jobs)
    except ConfigInvalid as exc:
        print(f"ConfigInvalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DiracWeylError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if report is not None:
        sys.stderr.write(_doc(report))
    if out is None:
        sys.stdout.write(body)
    else:
        try:
            Path(out).write_text(body, encoding="utf-8")
        except OSError as exc:
            print(f"ConfigInvalid: cannot write {out}: {exc.strerror}", file=sys.stderr)
            return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
