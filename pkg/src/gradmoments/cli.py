"""Command-line interface: ``run``, ``convergence-study``, ``matrix-study``, ``validate``.

Exit codes: 0 success, 1 failed validation or rate fit, 2 configuration error, 3 numerical abort.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

log = logging.getLogger("gradmoments")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def _set_threads(n):
    # must happen before numpy loads its BLAS
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _parser():
    p = argparse.ArgumentParser(prog="gradmoments", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="BLAS threads")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, preset=False):
        sp.add_argument("--config", type=Path, help="INI configuration file")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default $GRADMOMENTS_OUT or ./out)")
        sp.add_argument("--from-manifest", type=Path, default=None, help="re-run the configuration stored in a manifest")
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="BLAS threads")
        if preset:
            sp.add_argument("--preset", choices=["paper-desk", "paper-full"], default=None)

    sp = sub.add_parser("run", help="solve the moment system and write snapshot CSVs")
    common(sp)
    sp = sub.add_parser("convergence-study", help="reference run, M sweep, rate tables")
    common(sp, preset=True)
    sp.add_argument("--full", action="store_true", help="shorthand for --preset paper-full")
    sp.add_argument("--dvm", action="store_true", help="also compute the discrete-velocity reference report")
    sp = sub.add_parser("matrix-study", help="norms of the boundary matrices over M")
    common(sp)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--M-max", type=int, default=None)
    sp = sub.add_parser("validate", help="run the property suites")
    sp.add_argument("--suite", action="append", default=None, help="run only this suite (repeatable)")
    sp.add_argument("--list", action="store_true", help="list suites and exit")
    sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="BLAS threads")
    return p


def _outdir(args, name):
    base = args.out or Path(os.environ.get("GRADMOMENTS_OUT", "out"))
    return Path(base) / name if args.out is None else Path(base)


def _solver_config(args):
    from dataclasses import fields
    from . import config as cf
    from .output import read_manifest
    from .solver import SolverConfig

    if args.from_manifest:
        try:
            stored = read_manifest(args.from_manifest)["config"]
            names = {f.name for f in fields(SolverConfig)}
            kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in stored.items() if k in names}
            if isinstance(kw.get("kn"), str):
                kw["kn"] = float(kw["kn"])
            return SolverConfig(**kw).validate()
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise cf.ConfigError(f"cannot use manifest {args.from_manifest}: {exc}") from exc
    if args.config is None:
        raise cf.ConfigError("run needs --config or --from-manifest")
    return cf.solver_config_from(cf.load(args.config))


def cmd_run(args):
    from .output import write_csv, write_manifest
    from .solver import run

    cfg = _solver_config(args)
    out = _outdir(args, "run")
    t0 = time.perf_counter()
    traj = run(cfg)
    elapsed = time.perf_counter() - t0
    n = cfg.M + 1
    cols = [("x_center", "1")]
    for k in range(n):
        cols += [(f"lambda{k}_mean", "1"), (f"lambda{k}_slope", "1")]
    centers = traj.mesh.centers
    paths = []
    for i, t in enumerate(traj.times):
        u = traj.snapshots[i]
        rows = [[centers[e]] + [v for k in range(n) for v in (u[0, e, k], u[1, e, k])]
                for e in range(traj.mesh.n_elements)]
        paths.append(write_csv(out / f"snapshot_{i:04d}.csv", cols, rows))
    norms = traj.snapshot_norms
    paths.append(write_csv(out / "norms.csv", [("snapshot", "1"), ("time", "1"), ("l2_norm", "1")],
                           [(i, t, v) for i, (t, v) in enumerate(zip(traj.times, norms))]))
    paths.append(write_csv(out / "step_norms.csv", [("step", "1"), ("l2_norm", "1")],
                           list(enumerate(traj.step_norms))))
    write_manifest(out / "manifest.json", "run", cfg.to_dict(),
                   {"dt": traj.dt, "n_steps": traj.n_steps, "times": traj.times, "snapshot_norms": norms},
                   paths, {"run": elapsed})
    print(f"wrote {len(traj.times)} snapshots to {out}")
    return EXIT_OK


def _study_config(args):
    from . import config as cf
    from .output import read_manifest
    from .study import StudyConfig

    if args.from_manifest:
        try:
            stored = dict(read_manifest(args.from_manifest)["config"])
            stored["Ms"] = tuple(stored["Ms"])
            return StudyConfig(**stored).validate()
        except (OSError, KeyError, TypeError, ValueError) as exc:
            raise cf.ConfigError(f"cannot use manifest {args.from_manifest}: {exc}") from exc
    preset = "paper-full" if args.full else args.preset
    cp = cf.load(args.config) if args.config else None
    if cp is None and preset is None:
        preset = "paper-desk"
    cfg = cf.study_config_from(cp, preset)
    if args.dvm:
        from dataclasses import replace
        cfg = replace(cfg, dvm=True)
    return cfg


def _report_rows(rep):
    return rep.table1_rows(), rep.table2_rows()


def cmd_convergence_study(args):
    from .output import write_csv, write_manifest
    from .study import convergence_study

    cfg = _study_config(args)
    out = _outdir(args, "convergence-study")
    try:
        res = convergence_study(cfg, progress=lambda m: print(m, flush=True))
    except ValueError as exc:
        print(f"rate fit failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    paths = []
    idx_cols = [("quantity", "-"), ("k_even", "1"), ("k_odd", "1")]
    rate_cols = [("M_parity", "-"), ("omega_pre", "1"), ("omega_obs", "1"), ("delta_omega", "1")]
    reports = [("", res.report)] + ([("dvm_", res.dvm_report)] if res.dvm_report is not None else [])
    for prefix, rep in reports:
        t1, t2 = _report_rows(rep)
        paths.append(write_csv(out / f"{prefix}table1_indices.csv", idx_cols, t1))
        paths.append(write_csv(out / f"{prefix}table2_rates.csv", rate_cols, t2))
    paths.append(write_csv(out / "fig2_decay.csv",
                           [("m", "1"), ("N_m_max", "1"), ("N_t_max", "1/time"), ("N_x_max", "1/length"),
                            ("N_m_T", "1"), ("N_t_T", "1/time"), ("N_x_T", "1/length"),
                            ("kept_N", "bool"), ("kept_N_t", "bool"), ("kept_N_x", "bool")],
                           res.decay_rows()))
    paths.append(write_csv(out / "fig3_errors.csv",
                           [("M", "1"), ("E_M", "1"), ("E_M_dvm", "1"), ("int_Q_seminorm", "1"),
                            ("bound_rhs", "1"), ("projection_error", "1"), ("A1", "1/time"),
                            ("A2", "1"), ("A3", "1/time"), ("theta", "1"), ("norm_A", "1")],
                           res.error_rows()))
    results = {"omega_pre": res.report.omega_pre, "omega_obs": res.report.omega_obs,
               "delta_omega": res.report.delta, "omega_theorem": res.report.omega_theorem,
               "k": res.report.k, "k_t": res.report.k_t, "k_x": res.report.k_x,
               "q_rate": res.q_rate, "errors": res.report.errors}
    if res.dvm_report is not None:
        results["dvm"] = {"omega_pre": res.dvm_report.omega_pre, "omega_obs": res.dvm_report.omega_obs,
                          "delta_omega": res.dvm_report.delta, "errors": res.dvm_report.errors}
    write_manifest(out / "manifest.json", "convergence-study", cfg.to_dict(), results, paths, res.timings)
    r = res.report
    print(f"omega_pre={r.omega_pre:.3f} omega_obs={r.omega_obs:.3f} delta={r.delta:.3f}")
    return EXIT_OK


def cmd_matrix_study(args):
    import numpy as np
    from . import config as cf
    from .matrices import assemble, bidiagonal_unit_norm_solve, spectral_norm
    from .output import write_csv, write_manifest

    opts = cf.matrix_study_from(cf.load(args.config)) if args.config else {}
    d = args.d if args.d is not None else opts.get("d", 1)
    M_max = args.M_max if args.M_max is not None else opts.get("M_max", 50)
    if d not in (1, 2, 3):
        raise cf.ConfigError("d must be 1, 2 or 3")
    if M_max < 2:
        raise cf.ConfigError("M_max must be >= 2")
    out = _outdir(args, "matrix-study")
    rows = []
    for M in range(1, M_max + 1):
        m = assemble(d, M)
        R = m.R
        rows.append((d, M, spectral_norm(m.A_MM), spectral_norm(R), m.theta,
                     float(np.linalg.eigvalsh(0.5 * (R + R.T)).min()),
                     abs(bidiagonal_unit_norm_solve(M)[1] - 1.0)))
    cols = [("d", "1"), ("M", "1"), ("norm_A", "1"), ("norm_R", "1"), ("theta", "1"),
            ("min_eig_R", "1"), ("lemma_C1_residual", "1")]
    path = write_csv(out / f"matrix_study_d{d}.csv", cols, rows)
    write_manifest(out / "manifest.json", "matrix-study", {"d": d, "M_max": M_max}, {}, [path])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args):
    from .validation import SUITES, run_suites

    if args.list:
        print("\n".join(SUITES))
        return EXIT_OK
    try:
        checks = run_suites(args.suite)
    except KeyError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "convergence-study": cmd_convergence_study,
            "matrix-study": cmd_matrix_study, "validate": cmd_validate}


def main(argv=None):
    args = _parser().parse_args(argv)
    _set_threads(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .config import ConfigError
    from .solver import NumericalAbort

    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
