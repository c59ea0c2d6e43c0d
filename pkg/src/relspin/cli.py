"""Command-line interface.

Subcommands
-----------
check-operators   fixed-momentum condition battery for the three spin operators
verify-dynamics   commutator-vs-printed-equation verification per scenario
simulate          propagate a scenario and emit the trajectory CSV
sweep             rerun a scenario over a field-strength ladder and emit
                  operator-divergence metrics

Exit codes: 0 pass, 1 scientific check failure or aborted run, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dynamics import (VERIFY_GUARD, classify_residual_series, rhs, spin_expr,
                       standard_battery, total_j_identity, verify)
from .errors import (BoundaryFluxError, ConfigError, KrylovConvergenceError,
                     PreconditionError, SingularMomentumError)
from .expr import apply_expr
from .fields import UniformB, UniformE, PlaneWavePulse
from .grid import GridSpec, set_fft_workers
from .operators import SpinKind, condition_checks
from .propagate import run
from .scenario import load_scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

_CONDITION_TOL = 1e-12
_DIRAC_ANALYTIC_TOL = 1e-10


def _sample_momenta(n, pmax, params, seed):
    rng = np.random.default_rng(seed)
    mags = params.m0 * params.c * 10.0 ** rng.uniform(-3.0, np.log10(pmax), n)
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return mags[:, None] * dirs


def cmd_check_operators(args):
    from .operators import PhysParams
    params = PhysParams(m0=args.m0, c=args.c, e=args.e)
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.pmax <= 1e-3:
        print("error: --pmax must exceed the sampling floor 1e-3", file=sys.stderr)
        return EXIT_USAGE
    momenta = _sample_momenta(args.samples, args.pmax, params, args.seed)

    summary = {}
    ok = True
    for kind in (SpinKind.FW, SpinKind.PRYCE, SpinKind.DIRAC):
        worst = {"su2": 0.0, "spectrum": 0.0, "free": 0.0, "dirac_mismatch": 0.0}
        for p in momenta:
            rep = condition_checks(kind, p, params)
            worst["su2"] = max(worst["su2"], rep.su2_residual)
            worst["spectrum"] = max(worst["spectrum"], rep.spectrum_residual)
            if kind is SpinKind.DIRAC:
                analytic = [2 * params.c * np.sqrt(p[1]**2 + p[2]**2),
                            2 * params.c * np.sqrt(p[0]**2 + p[2]**2),
                            2 * params.c * np.sqrt(p[0]**2 + p[1]**2)]
                mism = max(abs(r - a) for r, a in
                           zip(rep.free_commutation_components, analytic))
                worst["dirac_mismatch"] = max(worst["dirac_mismatch"], mism)
                worst["free"] = max(worst["free"], rep.free_commutation_residual)
            else:
                worst["free"] = max(worst["free"], rep.free_commutation_residual)
        if kind is SpinKind.DIRAC:
            passed = worst["su2"] <= _CONDITION_TOL \
                and worst["spectrum"] <= _CONDITION_TOL \
                and worst["dirac_mismatch"] <= _DIRAC_ANALYTIC_TOL
        else:
            passed = all(worst[k] <= _CONDITION_TOL
                         for k in ("su2", "spectrum", "free"))
        ok = ok and passed
        summary[kind.value] = {"residuals": {k: float(v) for k, v in worst.items()},
                               "pass": bool(passed)}

    print(f"{'kind':8s} {'su2':>12s} {'spectrum':>12s} {'free-comm':>12s}  verdict")
    for kind, entry in summary.items():
        w = entry["residuals"]
        verdict = "ok" if entry["pass"] else "FAIL"
        extra = (f" (matches analytic within {w['dirac_mismatch']:.2e})"
                 if kind == "dirac" else "")
        print(f"{kind:8s} {w['su2']:12.3e} {w['spectrum']:12.3e} "
              f"{w['free']:12.3e}  {verdict}{extra}")
    doc = {"schema": "relspin-operator-check/1",
           "samples": args.samples, "pmax": args.pmax, "seed": args.seed,
           "results": summary}
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _refinement_grids(grid, levels):
    """Coarse-to-fine ladder around the scenario grid (same box)."""
    ladder = []
    n0 = grid.n[0]
    cap = 2048 if grid.dim == 1 else 64
    candidates = [n0 // 2, n0] + [n0 * 2**i for i in range(1, levels + 1)]
    for n in candidates:
        if 8 <= n <= cap:
            ladder.append(GridSpec(grid.dim, n, grid.lengths[0]))
    return ladder


def _offending_term(kind, ham, states, t=0.0):
    """Name the printed term whose removal shrinks the defect the most."""
    params = ham.params
    terms, total = rhs(kind, ham.family, ham.model, params)
    if not terms:
        return None
    s_triple = spin_expr(kind, params)
    worst_name, worst_gain = None, -np.inf
    psi = states[0]
    guard = VERIFY_GUARD
    h_psi = apply_expr(ham.total, psi, t, guard)
    for axis in range(3):
        s_h = apply_expr(s_triple[axis], h_psi, t, guard)
        h_s = apply_expr(ham.total, apply_expr(s_triple[axis], psi, t, guard),
                         t, guard)
        lhs = (s_h - h_s) * (-1j)
        rhs_field = apply_expr(total[axis], psi, t, guard)
        base = (lhs - rhs_field).norm()
        for name, triple in terms:
            without = rhs_field - apply_expr(triple[axis], psi, t, guard)
            gain = (lhs - without).norm() - base
            if gain > worst_gain:
                worst_gain, worst_name = gain, name
    return worst_name


def cmd_verify_dynamics(args):
    sc = load_scenario(args.scenario)
    if not sc.checks:
        raise ConfigError("verification.checks", "no checks requested")
    if sc.battery == "standard":
        states = standard_battery(sc.grid, sc.params, seed=sc.seed)
    else:
        states = [sc.make_state()]

    reports = []
    all_ok = True
    for kind, family in sc.checks:
        ham = sc.make_hamiltonian(family=family)
        report = verify(kind, ham, states)
        if report.classification != "holds" or args.refine:
            series = []
            for g in _refinement_grids(sc.grid, sc.refine_levels):
                if sc.battery == "standard":
                    try:
                        st = standard_battery(g, sc.params, seed=sc.seed)
                    except PreconditionError:
                        continue  # rung too coarse to host the battery
                else:
                    st = [sc.make_state()]  # state tied to scenario grid
                    if g != sc.grid:
                        continue
                h = sc.make_hamiltonian(family=family, grid=g)
                r = verify(kind, h, st)
                series.append((g.n[0], r.residual))
            report.refinement = series
            report.classification = classify_residual_series(
                [r for _, r in series] or [report.residual])
            report.term_classification = {
                n: report.classification for n in report.term_names}
            if report.classification == "non-converging":
                report.offending_term = _offending_term(kind, ham, states)
        reports.append(report)
        print(report.table())
        if report.classification == "non-converging":
            all_ok = False
            print(f"  non-converging mismatch; offending printed term: "
                  f"{report.offending_term}")

    tj = {}
    for kind in (SpinKind.FW, SpinKind.PRYCE):
        tj[kind.value] = total_j_identity(kind, states, sc.params)
        print(f"total-J identity [{kind.value}]: " +
              " ".join(f"{v:.3e}" for v in tj[kind.value]))

    doc = {"schema": "relspin-verification/1",
           "reports": [r.to_dict() for r in reports],
           "total_j": tj}
    out = args.report or sc.output.get("report")
    if out:
        with open(out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
        print(f"report written to {out}")
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


def cmd_simulate(args):
    sc = load_scenario(args.scenario)
    if sc.steps < 1:
        raise ConfigError("propagation", "simulate needs a propagation section")
    ham = sc.make_hamiltonian()
    state = sc.make_state()
    traj = run(ham, state, sc.dt, sc.steps, stride=sc.stride)
    out = args.output or sc.output.get("trajectory", "trajectory.csv")
    traj.save(out)
    print(f"{len(traj.rows)} samples -> {out}")
    return EXIT_OK


def _with_amplitude(model, value):
    if isinstance(model, UniformB):
        mag = np.linalg.norm(model.b0)
        if mag == 0:
            raise ConfigError("field.b0", "sweep needs a nonzero base field")
        return UniformB(model.b0 / mag * value, model.envelope)
    if isinstance(model, UniformE):
        mag = np.linalg.norm(model.e0)
        if mag == 0:
            raise ConfigError("field.e0", "sweep needs a nonzero base field")
        return UniformE(model.e0 / mag * value, model.envelope)
    if isinstance(model, PlaneWavePulse):
        mag = np.linalg.norm(model.e0)
        if mag == 0:
            raise ConfigError("field.e0", "sweep needs a nonzero base field")
        return PlaneWavePulse(model.e0 / mag * value, model.wavevector,
                              model.omega, model.env_center, model.env_width)
    raise ConfigError("field.type", "sweep needs a non-zero field model")


def cmd_sweep(args):
    sc = load_scenario(args.scenario)
    if sc.steps < 1:
        raise ConfigError("propagation", "sweep needs a propagation section")
    try:
        values = [float(v) for v in args.field_grid.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError("--field-grid", f"expected comma-separated numbers: {exc}")
    if not values:
        raise ConfigError("--field-grid", "needs at least one field strength")

    state = sc.make_state()
    lines = ["B0,t,d_Py,d_FW"]
    for value in values:
        model = _with_amplitude(sc.model, value)
        ham = sc.make_hamiltonian(model=model)
        traj = run(ham, state, sc.dt, sc.steps, stride=sc.stride)
        t = traj.column("t")
        d_py = np.sqrt(sum((traj.column(f"S_Py_{ax}") - traj.column(f"S_D_{ax}"))**2
                           for ax in "xyz"))
        d_fw = np.sqrt(sum((traj.column(f"S_FW_{ax}") - traj.column(f"S_Py_{ax}"))**2
                           for ax in "xyz"))
        for i in range(len(t)):
            lines.append("%.17g,%.17g,%.17g,%.17g" % (value, t[i], d_py[i], d_fw[i]))
    out = args.output or sc.output.get("sweep", "sweep.csv")
    with open(out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"sweep over {len(values)} field strengths -> {out}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="relspin",
        description="Verification lab and spectral simulator for relativistic "
                    "electron-spin dynamics")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("RELSPIN_THREADS", "1")),
                        help="FFT worker threads (env: RELSPIN_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-operators",
                       help="fixed-momentum proper-spin-operator conditions")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--pmax", type=float, default=10.0,
                   help="largest sampled |p| in units of m0 c")
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--m0", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--e", type=float, default=-1.0)
    p.add_argument("--json", help="write the machine-readable report here")
    p.set_defaults(func=cmd_check_operators)

    p = sub.add_parser("verify-dynamics",
                       help="verify printed dynamics equations against the "
                            "commutator ground truth")
    p.add_argument("--scenario", required=True)
    p.add_argument("--refine", action="store_true",
                   help="run the refinement ladder even for passing checks")
    p.add_argument("--report", help="output JSON path (overrides scenario)")
    p.set_defaults(func=cmd_verify_dynamics)

    p = sub.add_parser("simulate", help="propagate a scenario, emit CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--output", help="trajectory CSV path (overrides scenario)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep",
                       help="rerun a scenario over a field-strength ladder")
    p.add_argument("--scenario", required=True)
    p.add_argument("--field-grid", required=True,
                   help="comma-separated field strengths")
    p.add_argument("--output", help="sweep CSV path (overrides scenario)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    set_fft_workers(args.threads)
    try:
        return args.func(args)
    except (ConfigError, SingularMomentumError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BoundaryFluxError, KrylovConvergenceError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
