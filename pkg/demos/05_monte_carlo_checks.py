#!/usr/bin/env python3
"""Walkthrough: Monte Carlo validation of a computed rate function.

Three checks: the sampler reproduces the convolution law (KS distance), the
functional inequality holds on a holdout corpus after calibrating its single
constant, and the diffusion with drift -grad V_nu damps the variance of a
bounded observable over time.

This demo uses reduced sample sizes; the acceptance suite runs the full ones.
"""

import numpy as np

from wpconv import lyapunov as L
from wpconv import rates as R
from wpconv import verify as V
from wpconv import presets as P

print("=" * 70)
print("MONTE CARLO VALIDATION")
print("=" * 70)

m = P.make_model("example_3_3", p=2.0)
rg = np.geomspace(1e-2, 1e10, 1601)
res = R.rate_tables(m, L.DriftConfig(case="cor_a"), r_grid=rg)

n = 10 ** 5
d = V.ks_statistic(m, seed=11, n=n)
print(f"\nsampler fidelity: KS distance {d:.5f} "
      f"(1% critical value {V.ks_critical_value(n):.5f})")

corpus = V.build_corpus(seed=7)
r_grid = np.geomspace(max(res.alpha.grid[0] * 2, 1e-6), 1e-2, 30)
rep = V.empirical_wpi(m, res.alpha, corpus, r_grid, seed=123, n=2 * 10 ** 5)
print("\nfunctional inequality on the corpus:")
print(f"  calibrated constant c = {rep.c_calibrated:.4f} "
      "(10 calibration functions)")
print(f"  holdout violations: {rep.holdout_violations} / 20 functions; "
      f"worst slack = {rep.worst_slack_sigma:.2f} CI units (must be <= 2)")

f = V.TestFunction(id="tanh", value=np.tanh,
                   gradient=lambda x: V._sech2(x), osc_bound=2.0)
t_grid = np.geomspace(0.5, 12.0, 5)
trace = V.semigroup_decay(m, f, t_grid, n_paths=96, dt=5e-3, seed=5,
                          n_inner=96)
print("\nsemigroup decay of Var(E[f(X_t) | X_0]) for f = tanh:")
for t, v, ci in zip(trace.times, trace.variance_estimates,
                    trace.confidence_halfwidths):
    bar = "#" * int(60 * v / trace.variance_estimates[0])
    print(f"  t = {t:6.2f}:  {v:.4f} +- {ci:.4f}  {bar}")

hyg = V.crosscheck_gradients(m, V.default_check_points(m, 50))
print(f"\ngradient hygiene (worst relative discrepancy vs Richardson "
      f"differences): {max(hyg['grad_V'], hyg['lap_V'], hyg['grad_V_nu']):.2e}")
