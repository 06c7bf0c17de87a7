"""Convergence in M against a high-order reference, at reduced size.

Run with ``python docs/examples/convergence_study.py``; about a minute. The
full desk-scale study is ``gradmoments convergence-study --preset paper-desk``.

The decay of the reference moments in m gives Sobolev indices k, k_t, k_x;
from them a rate omega_pre is predicted and compared with the rate omega_obs
fitted to the errors E_M. With a reference this small the decay curves are
short and the indices, hence omega_pre, come out far too low; omega_obs is
already close to its desk-scale value.
"""
from gradmoments.study import StudyConfig, convergence_study

cfg = StudyConfig(M_ref=40, Ms=tuple(range(5, 21)), n_elements=100, n_snapshots=30)
res = convergence_study(cfg, progress=print)
r = res.report
for name, (ke, ko) in (("k", r.k), ("k_t", r.k_t), ("k_x", r.k_x)):
    print(f"{name:4s} even {ke:.3f}  odd {ko:.3f}")
print(f"omega_pre {r.omega_pre:.3f}  omega_obs {r.omega_obs:.3f}  (odd M {r.omega_obs_odd:.3f}, "
      f"even M {r.omega_obs_even:.3f})")
print(f"Q-seminorm integral decays at {res.q_rate:.3f}, twice omega_obs is {2 * r.omega_obs:.3f}")
for M, e, b in zip(r.Ms, r.errors, res.bounds):
    print(f"  M={M:2d}  E_M={e:.3e}  bound={b['total']:.3e}")
