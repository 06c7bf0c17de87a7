"""End-to-end convergence study: reference run, M sweep, rates, bound and Q diagnostic."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict, replace
import logging
import math
import time

import numpy as np

from . import analysis as an
from .solver import DVMConfig, SolverConfig, dvm_run, run

__all__ = ["StudyConfig", "StudyResult", "PRESETS", "convergence_study", "dvm_decay"]

log = logging.getLogger(__name__)


@dataclass
class StudyConfig:
    M_ref: int = 80
    Ms: tuple = (5, 10, 15, 20, 25, 30, 35, 40)
    n_elements: int = 200
    t_final: float = 0.3
    kn: float = 0.1
    cfl: float = 0.5
    n_snapshots: int = 60
    center: float = 0.5
    sharpness: float = 100.0
    delta: float = 0.5  # width of the wall layer in the projection blend
    dvm: bool = False
    n_velocities: int = 64
    v_max: float = 8.0

    def validate(self):
        if len(self.Ms) < 3:
            raise ValueError("need at least three values of M for a rate")
        if max(self.Ms) >= self.M_ref:
            raise ValueError("swept M must stay below M_ref")
        if min(self.Ms) < 2:
            raise ValueError("BGK runs need M >= 2")
        return self

    def solver_config(self, M):
        return SolverConfig(M=M, kn=self.kn, n_elements=self.n_elements, cfl=self.cfl,
                            t_final=self.t_final, center=self.center, sharpness=self.sharpness,
                            n_snapshots=self.n_snapshots)

    def to_dict(self):
        d = asdict(self)
        d["Ms"] = list(self.Ms)
        return d


PRESETS = {
    "paper-desk": StudyConfig(),
    "paper-full": StudyConfig(M_ref=200, n_elements=500),
}


@dataclass
class StudyResult:
    config: StudyConfig
    series: tuple
    report: an.RateReport
    q_integrals: np.ndarray
    q_rate: float
    bounds: list
    timings: dict
    dvm_report: an.RateReport | None = None
    dvm_series: tuple | None = None
    reference: object = field(default=None, repr=False)

    def decay_rows(self):
        N, Nt, Nx = self.series
        return [(int(m), N.values[m], Nt.values[m], Nx.values[m], N.final[m], Nt.final[m], Nx.final[m],
                 int(N.mask[m]), int(Nt.mask[m]), int(Nx.mask[m])) for m in N.m]

    def error_rows(self):
        rows = []
        for i, M in enumerate(self.report.Ms):
            b = self.bounds[i]
            dvm = self.dvm_report.errors[i] if self.dvm_report is not None else math.nan
            rows.append((int(M), self.report.errors[i], dvm, self.q_integrals[i], b["total"],
                         b["projection"], b["A1"], b["A2"], b["A3"], b["theta"], b["norm_A"]))
        return rows


def _masked_series(ref, coarse):
    out = []
    for a, b in zip(an.moment_decay(ref), an.moment_decay(coarse)):
        out.append(a.with_mask(an.filter_artefacts(a, b)))
    return tuple(out)


def dvm_decay(traj, K):
    """``(N, N_t, N_x)`` of a DVM trajectory from grid moments of degree ``<= K``."""
    grid = traj.meta["grid"]
    h = traj.mesh.h
    S = traj.snapshots
    lam = grid.moments(S, K)
    lam_t = np.stack([grid.moments(traj.rhs(i), K) for i in range(len(S))])
    Nm = np.sqrt(h * np.sum(lam ** 2, axis=(1, 2)))
    Nt = np.sqrt(h * np.sum(lam_t ** 2, axis=(1, 2)))
    dx = 2.0 * math.sqrt(3.0) * lam[:, 1] / h
    Nx = np.sqrt(h * np.sum(dx * dx, axis=1))
    return (an.DecaySeries("N", Nm.max(0), Nm[-1]),
            an.DecaySeries("N_t", Nt.max(0), Nt[-1]),
            an.DecaySeries("N_x", Nx.max(0), Nx[-1]))


def convergence_study(cfg, progress=None):
    """Run the full rate study of ``cfg``; ``progress(msg)`` receives status lines."""
    cfg.validate()
    say = progress or log.info
    timings = {}
    t0 = time.perf_counter()
    ref = run(cfg.solver_config(cfg.M_ref))
    coarse = run(replace(cfg.solver_config(cfg.M_ref - 1), n_snapshots=cfg.n_snapshots))
    timings["reference"] = time.perf_counter() - t0
    say(f"reference M={cfg.M_ref} done in {timings['reference']:.1f}s")
    series = _masked_series(ref, coarse)
    del coarse

    errors, q_int, bounds, finals = [], [], [], {}
    t0 = time.perf_counter()
    fin = ref.snapshots[-1]
    provisional = an.RateReport.build(series, cfg.Ms, np.ones(len(cfg.Ms)))
    indices = {"k": provisional.k, "k_t": provisional.k_t, "k_x": provisional.k_x}
    for M in cfg.Ms:
        tr = run(cfg.solver_config(M))
        finals[M] = tr.snapshots[-1]
        errors.append(an.l2_error(fin, tr.snapshots[-1], ref.mesh.h))
        q_int.append(an.q_seminorm_history(ref, tr, cfg.kn, cfg.delta)[1])
        bounds.append(an.error_bound_rhs(ref, M, indices, cfg.kn, delta=cfg.delta))
        say(f"M={M}: E_M={errors[-1]:.4e} bound={bounds[-1]['total']:.4e}")
    timings["sweep"] = time.perf_counter() - t0
    report = an.RateReport.build(series, cfg.Ms, errors)
    q_int = np.array(q_int)
    q_rate = an.observed_rate(cfg.Ms, q_int)

    dvm_report = dvm_series = None
    if cfg.dvm:
        t0 = time.perf_counter()
        scfg = cfg.solver_config(cfg.M_ref)
        d1 = dvm_run(scfg, DVMConfig(cfg.n_velocities, cfg.v_max))
        d2 = dvm_run(scfg, DVMConfig(cfg.n_velocities - 2, cfg.v_max))
        K = cfg.M_ref
        dvm_series = tuple(a.with_mask(an.filter_artefacts(a, b))
                           for a, b in zip(dvm_decay(d1, K), dvm_decay(d2, K)))
        grid = d1.meta["grid"]
        dvm_err = [an.l2_error_dvm(d1.snapshots[-1], grid, finals[M], ref.mesh.h) for M in cfg.Ms]
        dvm_report = an.RateReport.build(dvm_series, cfg.Ms, dvm_err, reference="dvm")
        timings["dvm"] = time.perf_counter() - t0
        say(f"DVM reference done in {timings['dvm']:.1f}s")
    return StudyResult(cfg, series, report, q_int, q_rate, bounds, timings,
                       dvm_report, dvm_series, ref)
