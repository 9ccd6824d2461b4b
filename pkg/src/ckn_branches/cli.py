"""Command-line entry point: `python -m ckn_branches <command> ...`."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytic as an
from .analytic import ParameterError
from .continuation import SolverError
from .io import CurveTable, RunConfig, default_out_dir, range_values, read_config, write_curve

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(sp, theta=True):
    sp.add_argument("--d", type=int, required=False, help="dimension d >= 3")
    sp.add_argument("--p", type=float, required=False, help="exponent p in (2, 2*]")
    if theta:
        sp.add_argument("--theta", type=str, default="1", help="theta or comma-separated list")
    sp.add_argument("--config", type=str, help="flat key = value file; flags override it")
    sp.add_argument("--out", type=str, default=None, help="output file ('-' for stdout) or directory")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ckn-branches", description="Symmetric and non-symmetric branches of CKN extremals")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("symmetric-branch", help="closed-form symmetric curve as CSV")
    _common(sp)
    sp.add_argument("--mu", type=str, required=False, help="start:stop:step")

    sp = sub.add_parser("expansion", help="bifurcation constants as JSON")
    _common(sp, theta=False)

    sp = sub.add_parser("chi", help="solve one chi profile, CSV of (s, chi)")
    _common(sp, theta=False)
    sp.add_argument("--kind", choices=["chi_0_pm1", "chi_0_2pm3", "chi_2_2pm3"], default="chi_2_2pm3")
    sp.add_argument("--n", type=int, default=4001)

    sp = sub.add_parser("gn", help="Gagliardo-Nirenberg ground state summary as JSON")
    _common(sp, theta=False)
    sp.add_argument("--profile", type=str, help="also write the radial profile CSV here")

    sp = sub.add_parser("continue", help="continue the non-symmetric branch, CSV")
    _common(sp)
    sp.add_argument("--mu-start", type=float)
    sp.add_argument("--mu-end", type=float)
    sp.add_argument("--step", type=float, default=0.05)
    sp.add_argument("--max-step", type=float, default=1.0)
    sp.add_argument("--n-s", type=int)
    sp.add_argument("--n-zeta", type=int)
    sp.add_argument("--dump-fields", type=str, help="directory for binary field dumps")

    sp = sub.add_parser("classify", help="Scenario 1/2 report as JSON")
    _common(sp, theta=False)
    sp.add_argument("--p-star", action="store_true", help="also locate p_star(d) (slow)")
    sp.add_argument("--comparison-csv", type=str)

    sp = sub.add_parser("figure", help="data tables for a figure")
    sp.add_argument("--name", required=True, choices=sorted(FIGURES))
    sp.add_argument("--out", type=str, default=None, help="output directory")
    sp.add_argument("--config", type=str)
    return ap


# figure name -> (p, d, [(panel, theta or 'vartheta')], mu range in units of mu_FS)
FIGURES = {
    "fig1": (2.8, 5, [("fig1", 1.0)], 8.0),
    "fig2": (2.8, 5, [("fig2", 0.8)], 8.0),
    "fig3": (2.8, 5, [("fig3", 0.72)], 8.0),
    "fig4": (2.8, 5, [("fig4", 0.95)], 1.6),
    "fig5": (2.8, 5, [("fig5", 0.72)], 3.0),
    "fig6": (2.8, 5, [("fig6", "vartheta")], 1.6),
    "fig7": (3.15, 5, [("fig7l", 1.0), ("fig7c", 0.95), ("fig7r", "vartheta")], 8.0),
}
_BRANCH_CACHE: dict = {}


def _apply_config(parser, argv):
    """Load --config (if any) into subparser defaults, then parse again so flags win."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known)
        if bad:
            raise ParameterError(f"unknown config keys: {', '.join(bad)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise ParameterError(f"--{n.replace('_', '-')} is required")


def _thetas(args, p, d):
    out = []
    for t in str(args.theta).split(","):
        t = t.strip()
        out.append(an.vartheta(p, d) if t == "vartheta" else float(t))
    return tuple(out)


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _symmetric_table(mus, p, d, theta) -> CurveTable:
    t = CurveTable()
    params = an.ProblemParams(d, p, theta)
    q = Fraction(str(p))
    ratio = (q - 2) / (q + 2)
    for mu in mus:
        pt = an.symmetric_branch(float(mu), params)
        # (p-2)/(p+2) in exact rational arithmetic so that e.g. tau = mu/6 bit for bit at p = 2.8
        tau = float(Fraction(float(mu)) * ratio)
        t.append(mu, pt.lambda_theta, pt.j_theta, tau, pt.nu_star, True)
    return t


def cmd_symmetric(args):
    _need(args, "d", "p", "mu")
    th = _thetas(args, args.p, args.d)
    RunConfig(args.d, args.p, th, args.mu).validate()
    mus = range_values(args.mu)
    if mus[0] <= 0:
        raise ParameterError("mu must be positive")
    if len(th) != 1:
        raise ParameterError("symmetric-branch takes a single theta")
    table = _symmetric_table(mus, args.p, args.d, th[0])
    if args.out in (None, "-"):
        _print_table(table)
    else:
        write_curve(table, _out_path(args.out, "symmetric.csv"))
    return EXIT_OK


def _out_path(out, default_name):
    p = Path(out) if out else default_out_dir() / default_name
    if p.is_dir():
        p = p / default_name
    return p


def cmd_expansion(args):
    from .expansion import expansion_report
    _need(args, "d", "p")
    an.ProblemParams(args.d, args.p)
    rep = expansion_report(args.p, args.d)
    _emit(rep.to_json(), args.out)
    return EXIT_OK


def cmd_chi(args):
    from .spectral import default_line_grid, solve_chi
    _need(args, "d", "p")
    an.ProblemParams(args.d, args.p)
    prof = solve_chi(args.kind, args.p, args.d, default_line_grid(args.p, args.n))
    lines = ["s,chi"] + [f"{s:.17g},{v:.17g}" for s, v in zip(prof.grid.nodes, prof.values)]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_gn(args):
    from .spectral import ground_state_shoot
    _need(args, "d", "p")
    an.ProblemParams(args.d, args.p)
    gs = ground_state_shoot(args.p, args.d)
    rep = {"p": gs.p, "d": gs.d, "u0": gs.u0, "S_p": gs.S_p, "K_GN": gs.K_GN,
           "K_GN_direct": gs.K_GN_direct, "pohozaev_residual": gs.pohozaev_residual,
           "nehari_residual": gs.nehari_residual}
    _emit(json.dumps(rep, indent=2), args.out)
    if args.profile:
        lines = ["r,u"] + [f"{r:.17g},{u:.17g}" for r, u in zip(gs.r, gs.u)]
        Path(args.profile).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _branch_table(branch, theta) -> CurveTable:
    from .continuation import reparametrize
    mu, lam, J = reparametrize(branch, theta)
    t = CurveTable()
    for k, pt in enumerate(branch.points):
        t.append(mu[k], lam[k], J[k], pt.tau, pt.nu, pt.symmetric)
    return t


def cmd_continue(args):
    from .continuation import CylinderGrid, StepPolicy, continue_branch, default_cylinder_grid, dump_field
    _need(args, "d", "p", "mu_start", "mu_end")
    th = _thetas(args, args.p, args.d)
    RunConfig(args.d, args.p, th, n_s=args.n_s, n_zeta=args.n_zeta).validate()
    grid = None
    if args.n_s or args.n_zeta:
        g0 = default_cylinder_grid(args.p, args.d, args.mu_start)
        grid = CylinderGrid(g0.S, args.n_s or g0.n_s, args.n_zeta or g0.n_zeta)
    br = continue_branch(args.mu_start, args.mu_end,
                         StepPolicy(step=args.step, max_step=args.max_step), args.p, args.d, grid)
    if not br.points:
        raise SolverError("; ".join(br.diagnostics) or "empty branch")
    for d in br.diagnostics:
        logging.getLogger("ckn_branches").warning(d)
    for t in th:
        table = _branch_table(br, t)
        if len(th) == 1 and args.out == "-":
            _print_table(table)
        elif len(th) == 1 and args.out and not Path(args.out).is_dir():
            write_curve(table, args.out)
        else:
            out_dir = default_out_dir(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            write_curve(table, out_dir / f"branch_p{args.p:g}_d{args.d}_theta{t:.6g}.csv")
    if args.dump_fields:
        dd = Path(args.dump_fields)
        dd.mkdir(parents=True, exist_ok=True)
        for k, pt in enumerate(br.points):
            dump_field(pt.field, dd / f"field_{k:04d}", mu=pt.mu, p=args.p, d=args.d)
    return EXIT_OK if not br.truncated else EXIT_SOLVER


def _print_table(table: CurveTable):
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        path = write_curve(table, Path(tmp) / "t.csv")
        sys.stdout.write(path.read_text(encoding="utf-8"))


def cmd_classify(args):
    from .classify import classify_scenario, write_comparison_csv
    _need(args, "d", "p")
    an.ProblemParams(args.d, args.p)
    rep = classify_scenario(args.p, args.d, with_p_star=args.p_star)
    _emit(rep.to_json(), args.out)
    if args.comparison_csv:
        write_comparison_csv(args.p, args.d, args.comparison_csv)
    return EXIT_OK


def figure_branch(p: float, d: int, span: float):
    """Non-symmetric branch from just above mu_FS to span * mu_FS; memoized per process."""
    from .continuation import StepPolicy, continue_branch
    key = (p, d)
    mfs = an.mu_fs(p, d)
    cached = _BRANCH_CACHE.get(key)
    if cached is not None and cached.points and cached.points[-1].mu >= span * mfs * (1 - 1e-9):
        return cached
    br = continue_branch(mfs * (1 + 1e-3), span * mfs,
                         StepPolicy(step=mfs * 2e-3, max_step=0.25 * mfs, growth=1.5), p, d)
    if not br.points:
        raise SolverError("figure branch could not be started")
    _BRANCH_CACHE[key] = br
    return br


def cmd_figure(args):
    from .classify import asymptote_prefactor, gn_threshold, k_gn
    from .expansion import c_pd, theta2
    p, d, panels, span = FIGURES[args.name]
    out_dir = default_out_dir(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    br = figure_branch(p, d, max(span, 1.6))
    mfs = an.mu_fs(p, d)
    mu_max = span * mfs
    pts = [pt for pt in br.points if pt.mu <= mu_max * (1 + 1e-9)]
    sub = type(br)(p, d, pts, br.mu_bifurcation_estimate, br.diagnostics, br.truncated)
    K = k_gn(p, d)
    c, _ = c_pd(p, d)
    t2 = theta2(p, d, c)
    for name, th in panels:
        theta = an.vartheta(p, d) if th == "vartheta" else th
        sym_mu = np.linspace(mfs * 0.05, mu_max, 400)
        write_curve(_symmetric_table(sym_mu, p, d, theta), out_dir / f"{name}_symmetric.csv")
        write_curve(_branch_table(sub, theta), out_dir / f"{name}_branch.csv")
        meta = {"name": name, "p": p, "d": d, "theta": theta, "vartheta": an.vartheta(p, d),
                "mu_fs": mfs, "Lambda_fs": an.lambda_fs(p, theta, d), "theta2": t2, "c_pd": c,
                "K_GN": K, "mu_bifurcation_estimate": br.mu_bifurcation_estimate,
                "asymptote_exponent": theta - an.vartheta(p, d),
                "asymptote_prefactor": (asymptote_prefactor(theta, p, d, K)
                                        if theta > an.vartheta(p, d) + 1e-12 else None),
                "critical_level": 1.0 / K if abs(theta - an.vartheta(p, d)) < 1e-12 else None}
        if abs(theta - an.vartheta(p, d)) < 1e-12:
            res = gn_threshold(p, d, K)
            meta["Lambda_GN_star"] = res[0] if res else None
            meta["mu_GN"] = res[1] if res else None
        (out_dir / f"{name}_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "symmetric-branch": cmd_symmetric, "expansion": cmd_expansion, "chi": cmd_chi, "gn": cmd_gn,
    "continue": cmd_continue, "classify": cmd_classify, "figure": cmd_figure,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error of this command
        sys.stderr.close()
        return EXIT_OK
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SolverError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
