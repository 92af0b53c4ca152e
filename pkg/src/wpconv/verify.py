"""Monte Carlo validation of computed rate functions.

sample_convolution draws X + Z with X from the base measure (inverse CDF on a
tabulated body grid plus analytic log-space tail inversion, so heavy tails are
sampled without truncating representable mass) and Z from the perturbing
measure.  empirical_wpi calibrates the single constant c of

    Var(f) <= c * alpha(r) * E(|grad f|^2) + r * Osc^2(f)

on a calibration split of a bounded-function corpus and reports the slack on
the holdout split.  semigroup_decay runs nested Euler-Maruyama paths of the
diffusion with drift -grad V_nu and reports the variance of the conditional
mean of a test function over time.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import model as model_mod
from .errors import (CalibrationFailed, SamplerMisconfigured, StepSizeTooLarge,
                     UnsupportedDimension)

__all__ = [
    "TestFunction",
    "SampleBatch",
    "DecayTrace",
    "WpiReport",
    "build_corpus",
    "sample_convolution",
    "convolution_cdf",
    "ks_statistic",
    "ks_critical_value",
    "empirical_wpi",
    "semigroup_decay",
    "crosscheck_gradients",
    "default_check_points",
]

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Bounded C^1 function with an a-priori oscillation bound."""

    id: str
    value: Callable
    gradient: Callable
    osc_bound: float
    role: str = "holdout"  # calibration | holdout


def _sech2(t):
    e = np.exp(-2.0 * np.abs(t))
    return e * (2.0 / (1.0 + e)) ** 2


def _tanh_ramp(a, w):
    value = lambda x: np.tanh((x - a) / w)
    grad = lambda x: _sech2((x - a) / w) / w
    return value, grad, 2.0


def _gauss_bump(a, w):
    value = lambda x: np.exp(-((x - a) / w) ** 2)
    grad = lambda x: -2.0 * (x - a) / w ** 2 * np.exp(-((x - a) / w) ** 2)
    return value, grad, 1.0


def _smooth_step(a, w):
    value = lambda x: 0.5 * (1.0 + np.tanh((x - a) / w))
    grad = lambda x: 0.5 * _sech2((x - a) / w) / w
    return value, grad, 1.0


def build_corpus(seed=7, n_calibration=10, n_holdout=20,
                 center_range=(-20.0, 20.0), width_range=(0.5, 5.0)):
    """30 bounded functions (ramps, bumps, smoothed steps) probing bulk and
    tail; the first n_calibration carry the calibration role."""
    rng = np.random.default_rng(seed)
    makers = [_tanh_ramp, _gauss_bump, _smooth_step]
    out = []
    total = n_calibration + n_holdout
    for i in range(total):
        a = rng.uniform(*center_range)
        w = rng.uniform(*width_range)
        value, grad, osc = makers[i % len(makers)](a, w)
        role = "calibration" if i < n_calibration else "holdout"
        out.append(TestFunction(id=f"f{i:02d}", value=value, gradient=grad,
                                osc_bound=osc, role=role))
    return out


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleBatch:
    seed: int
    size: int
    points: np.ndarray
    method: str


def _mu_body_and_tail(pot):
    """Inverse-CDF data for the symmetric radial base measure in d = 1:
    a dense body grid plus a log-radius tail table reaching the float range."""
    body_hi = model_mod._profile_reach(pot, 14.0 * math.log(10.0), cap=1e6)
    xs = np.unique(np.concatenate([
        np.arange(0.0, min(50.0, body_hi), 2e-3),
        np.geomspace(max(min(50.0, body_hi) * 0.99, 1e-3), body_hi, 3000)]))
    dens = np.exp(-pot.c - pot.v0(xs))
    half_cdf = np.concatenate([[0.0], np.cumsum(
        0.5 * (dens[1:] + dens[:-1]) * np.diff(xs))])
    mass_body = half_cdf[-1]                      # one-sided body mass
    # one-sided tail table in y = log s out to the float range
    y = np.linspace(math.log(body_hi), 690.0, 4000)
    logg = pot.d * y - model_mod._v0_of_log(pot, y)
    panel = model_mod._log_panel_rule(logg, np.diff(y))
    rev = np.concatenate([[-np.inf], np.logaddexp.accumulate(panel[::-1])])[::-1]
    with np.errstate(divide="ignore"):
        tail_y = np.exp(rev - pot.c)              # one-sided tail at each y node
    return xs, half_cdf, mass_body, y, tail_y


def _sample_mu_1d(pot, rng, n):
    xs, half_cdf, mass_body, y, tail_y = _mu_body_and_tail(pot)
    total_half = mass_body + float(tail_y[0])
    u = rng.uniform(0.0, 1.0, size=n)
    signs = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    mag = np.empty(n)
    u_half = u * total_half
    body = u_half <= mass_body
    mag[body] = np.interp(u_half[body], half_cdf, xs)
    # tail: invert the (decreasing) one-sided tail table in log radius
    t_req = total_half - u_half[~body]
    t_req = np.clip(t_req, tail_y[-1], tail_y[0])
    tail_pos = np.maximum(tail_y, 1e-320)
    mag[~body] = np.exp(np.interp(-np.log(t_req), -np.log(tail_pos), y))
    return signs * mag


def _sample_source(src, rng, n):
    if src.kind in ("point_mass", "discrete_atoms"):
        cum = np.cumsum(src.weights)
        cum = cum / cum[-1]
        idx = np.searchsorted(cum, rng.uniform(size=n), side="left")
        return src.locations[idx, 0]
    if np.isfinite(src.support_radius):
        R = src.support_radius
        zz = np.linspace(-R, R, 20001)
        dens = src.density(zz)
        cdf = np.concatenate([[0.0], np.cumsum(
            0.5 * (dens[1:] + dens[:-1]) * np.diff(zz))])
        cdf = cdf / cdf[-1]
        return np.interp(rng.uniform(size=n), cdf, zz)
    # unbounded density: magnitudes through the analytic tail map
    tt = np.geomspace(1e-6, 1e12, 4000)
    tails = np.asarray(src.tail(tt), dtype=float)
    tails = np.minimum.accumulate(np.clip(tails, 1e-300, 1.0))
    u = rng.uniform(size=n)
    signs = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    mag = np.exp(np.interp(-np.log(np.clip(u, tails[-1], tails[0])),
                           -np.log(tails), np.log(tt)))
    mag[u >= tails[0]] = 0.0
    return signs * mag


def sample_convolution(model, seed, n, proposal_exponent=1.0):
    """n independent draws of X + Z; reproducible per (seed, model spec).

    d = 1 uses inverse-CDF sampling of the base measure (tabulated body plus
    analytic tail); d = 2 uses rejection from a heavy-tailed radial proposal.
    """
    rng = np.random.default_rng(np.random.PCG64(seed))
    if model.d == 1:
        x = _sample_mu_1d(model.potential, rng, n)
        z = _sample_source(model.source, rng, n)
        pts = (x + z)[:, None]
        return SampleBatch(seed=seed, size=n, points=pts, method="inverse_cdf")
    if model.d == 2:
        pts = _sample_mu_rejection_2d(model, rng, n, proposal_exponent)
        if model.source.kind in ("point_mass", "discrete_atoms"):
            cum = np.cumsum(model.source.weights)
            idx = np.searchsorted(cum / cum[-1], rng.uniform(size=n), side="left")
            z = model.source.locations[idx]
        else:
            raise UnsupportedDimension("d=2 sampling supports atom sources")
        return SampleBatch(seed=seed, size=n, points=pts + z, method="rejection")
    raise UnsupportedDimension("samplers are implemented for d <= 2")


def _sample_mu_rejection_2d(model, rng, n, q):
    pot = model.potential
    if not pot.radial:
        raise UnsupportedDimension("d=2 rejection requires a radial potential")
    d = 2
    # proposal radius density ~ s (1+s)^-(d+q+1), normalized numerically
    ss = np.geomspace(1e-4, max(model.truncation_radius, 1e3), 4000)
    gs = ss ** (d - 1) * (1.0 + ss) ** -(d + q + 1.0)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (gs[1:] + gs[:-1]) * np.diff(ss))])
    norm = cdf[-1]
    cdf = cdf / norm
    with np.errstate(divide="ignore"):
        log_ratio = (-pot.c - pot.v0(ss)) - np.log(gs / norm / ss ** (d - 1))
    logM = float(np.max(log_ratio)) + 0.05
    out = np.empty((n, d))
    filled = 0
    attempts = 0
    while filled < n:
        m = max(2 * (n - filled), 1024)
        attempts += m
        r = np.interp(rng.uniform(size=m), cdf, ss)
        th = rng.uniform(0.0, 2.0 * np.pi, size=m)
        cand = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
        g_r = np.interp(r, ss, gs) / norm / r ** (d - 1)
        log_acc = (-pot.c - pot.v0(r)) - np.log(g_r) - logM
        keep = np.log(rng.uniform(size=m)) < log_acc
        k = int(keep.sum())
        take = min(k, n - filled)
        out[filled:filled + take] = cand[keep][:take]
        filled += take
        if attempts > 200 and filled / attempts < 0.01:
            raise SamplerMisconfigured(
                f"rejection acceptance rate {filled / attempts:.4f} below 1%")
    return out


def convolution_cdf(model):
    """CDF of X + Z in d = 1, assembled from the base measure's radial tail
    (numerically exact far out) mixed over the source.  Vectorized callable."""
    if model.d != 1:
        raise UnsupportedDimension("convolution CDF implemented for d = 1")
    pot, src = model.potential, model.source
    tail_fn = model_mod.mu_tail_table(pot, 1e-8, 1e12, points_per_decade=400,
                                      far_extension=True)

    def F_mu(x):
        x = np.asarray(x, dtype=float)
        tl = tail_fn(np.abs(x))
        return np.where(x >= 0.0, 1.0 - 0.5 * tl, 0.5 * tl)

    if src.kind in ("point_mass", "discrete_atoms"):
        z = src.locations[:, 0]
        w = src.weights / src.weights.sum()

        def F(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            out = np.zeros(x.shape)
            for zi, wi in zip(z, w):
                out += wi * F_mu(x - zi)
            return out
        return F
    if np.isfinite(src.support_radius):
        nodes, wts = np.polynomial.legendre.leggauss(96)
        R = src.support_radius
        zn = nodes * R
        wn = wts * R * src.density(zn)

        def F(x):
            x = np.atleast_1d(np.asarray(x, dtype=float))
            return np.sum(wn[None, :] * F_mu(x[:, None] - zn[None, :]), axis=1)
        return F
    raise UnsupportedDimension("convolution CDF needs compact or atomic source")


def ks_statistic(model, seed, n):
    """Kolmogorov-Smirnov distance between the empirical CDF of n convolution
    samples and the quadrature CDF."""
    batch = sample_convolution(model, seed, n)
    x = np.sort(batch.points[:, 0])
    F = convolution_cdf(model)(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_critical_value(n, level=0.01):
    return math.sqrt(-0.5 * math.log(level / 2.0)) / math.sqrt(n)


# ---------------------------------------------------------------------------
# empirical functional inequality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WpiReport:
    c_calibrated: float
    n_samples: int
    seed: int
    r_grid: np.ndarray
    holdout_violations: int
    worst_slack_sigma: float     # largest slack / CI over the holdout split
    per_function: dict
    z_ci: float

    @property
    def passed(self):
        return self.holdout_violations == 0

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION,
                "c_calibrated": self.c_calibrated,
                "n_samples": self.n_samples, "seed": self.seed,
                "r_min": float(self.r_grid[0]), "r_max": float(self.r_grid[-1]),
                "n_r": int(self.r_grid.size),
                "holdout_violations": self.holdout_violations,
                "worst_slack_sigma": self.worst_slack_sigma,
                "z_ci": self.z_ci, "passed": self.passed,
                "per_function": self.per_function}


def empirical_wpi(model, alpha, corpus, r_grid, seed, n, z_ci=2.0):
    """Calibrate c on the calibration split, then test every holdout function
    at every grid r: Var(f) - c alpha(r) E(f) - r Osc^2(f) <= z_ci * CI."""
    r_grid = np.asarray(r_grid, dtype=float)
    batch = sample_convolution(model, seed, n)
    x = batch.points[:, 0]
    a_of_r = np.asarray(alpha.value_at(r_grid), dtype=float)

    stats = {}
    for f in corpus:
        vals = np.asarray(f.value(x), dtype=float)
        grads = np.asarray(f.gradient(x), dtype=float)
        centered = vals - vals.mean()
        var = float(np.sum(centered ** 2) / (len(x) - 1))
        m2 = float(np.mean(centered ** 2))
        m4 = float(np.mean(centered ** 4))
        se_var = math.sqrt(max(m4 - m2 * m2, 0.0) / len(x))
        g2 = grads ** 2
        energy = float(g2.mean())
        se_energy = float(g2.std(ddof=1)) / math.sqrt(len(x))
        stats[f.id] = {"role": f.role, "var": var, "se_var": se_var,
                       "energy": energy, "se_energy": se_energy,
                       "osc": f.osc_bound}

    c = 0.0
    for f in corpus:
        if f.role != "calibration":
            continue
        st = stats[f.id]
        need = st["var"] - r_grid * st["osc"] ** 2
        denom = a_of_r * st["energy"]
        pos = need > 0.0
        if np.any(pos & (denom <= 0.0)):
            raise CalibrationFailed(
                f"{f.id}: positive variance excess with zero energy")
        if np.any(pos):
            c = max(c, float(np.max(need[pos] / denom[pos])))

    violations = 0
    worst = -np.inf
    for f in corpus:
        st = stats[f.id]
        slack = st["var"] - c * a_of_r * st["energy"] - r_grid * st["osc"] ** 2
        se = np.sqrt(st["se_var"] ** 2 + (c * a_of_r * st["se_energy"]) ** 2)
        sigma = slack / np.maximum(se, 1e-300)
        st["max_slack"] = float(np.max(slack))
        st["max_slack_sigma"] = float(np.max(sigma))
        if f.role == "holdout":
            worst = max(worst, st["max_slack_sigma"])
            if np.any(sigma > z_ci):
                violations += 1
    return WpiReport(c_calibrated=float(c), n_samples=n, seed=seed,
                     r_grid=r_grid, holdout_violations=violations,
                     worst_slack_sigma=float(worst), per_function=stats,
                     z_ci=z_ci)


# ---------------------------------------------------------------------------
# semigroup decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayTrace:
    times: np.ndarray
    variance_estimates: np.ndarray
    confidence_halfwidths: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if np.any(np.asarray(self.confidence_halfwidths) < 0.0):
            raise ValueError("halfwidths must be nonnegative")

    def to_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "variance", "ci_halfwidth"])
            for row in zip(self.times, self.variance_estimates,
                           self.confidence_halfwidths):
                w.writerow([repr(float(v)) for v in row])


def _drift_table(model, guard):
    """Tabulated odd drift dV_nu/dx of the origin-patched model (d = 1)."""
    work = model.patched(0.1) if model.potential.smooth_radius > 0.0 else model
    xs = np.unique(np.concatenate([
        np.linspace(0.0, min(50.0, guard), 2500),
        np.geomspace(max(min(50.0, guard) * 0.99, 1e-2), guard, 800)]))
    g = np.array([model_mod.v_nu_and_grad(work, xv)[1] for xv in xs])
    return xs, g


def semigroup_decay(model, f, t_grid, n_paths, dt, seed, n_inner=256):
    """Variance of the conditional-mean estimator of f along the diffusion
    with drift -grad V_nu and diffusion sqrt(2), nested over n_paths starting
    points with n_inner inner paths each."""
    if model.d != 1:
        raise UnsupportedDimension("path simulation implemented for d = 1")
    t_grid = np.asarray(t_grid, dtype=float)
    guard = 10.0 * model.truncation_radius
    xs, gtab = _drift_table(model, guard * 1.05)
    rng = np.random.default_rng(np.random.PCG64(seed))
    starts = sample_convolution(model, seed + 1, n_paths).points[:, 0]
    pos = np.repeat(starts, n_inner)
    total = pos.size
    sq2dt = math.sqrt(2.0 * dt)

    def drift(x):
        return -np.sign(x) * np.interp(np.abs(x), xs, gtab)

    variances = []
    halfwidths = []
    t_now = 0.0
    for t_target in t_grid:
        steps = int(round((t_target - t_now) / dt))
        for _ in range(steps):
            pos = pos + drift(pos) * dt + sq2dt * rng.standard_normal(total)
        t_now += steps * dt
        if np.any(np.abs(pos) > guard):
            raise StepSizeTooLarge(
                f"path left the guarded domain (|x| > {guard:g}) at t={t_now:g}")
        vals = np.asarray(f.value(pos), dtype=float).reshape(n_paths, n_inner)
        inner_mean = vals.mean(axis=1)
        inner_var = vals.var(axis=1, ddof=1)
        grand = inner_mean.mean()
        raw = float(np.sum((inner_mean - grand) ** 2) / (n_paths - 1))
        correction = float(inner_var.mean()) / n_inner
        v_hat = max(raw - correction, 0.0)
        dev = (inner_mean - grand) ** 2
        se = float(np.std(dev, ddof=1)) / math.sqrt(n_paths)
        variances.append(v_hat)
        halfwidths.append(2.0 * se)
    return DecayTrace(times=t_grid, variance_estimates=np.array(variances),
                      confidence_halfwidths=np.array(halfwidths))


# ---------------------------------------------------------------------------
# gradient hygiene
# ---------------------------------------------------------------------------

def default_check_points(model, n=100, seed=1234, lo=1.5, hi=50.0):
    """Seeded points away from the origin cusp and the support edge."""
    rng = np.random.default_rng(seed)
    mags = rng.uniform(lo, hi, size=n)
    signs = np.sign(rng.normal(size=n))
    return signs * mags


def _richardson(fun, x, h):
    def D(step):
        return (fun(x + step) - fun(x - step)) / (2.0 * step)
    return (4.0 * D(h / 2.0) - D(h)) / 3.0


def crosscheck_gradients(model, points, h=1e-4):
    """Max relative discrepancy of each analytic derivative against
    Richardson-extrapolated central differences (d = 1)."""
    pot = model.potential
    worst = {"grad_V": 0.0, "lap_V": 0.0, "grad_V_nu": 0.0}
    for x in np.asarray(points, dtype=float):
        g = float(pot.grad_1d(x))
        g_fd = _richardson(lambda y: float(pot.value(abs(y))), x, h)
        worst["grad_V"] = max(worst["grad_V"],
                              abs(g - g_fd) / max(abs(g_fd), 1e-12))
        lap = float(pot.laplacian(abs(x)))
        lap_fd = _richardson(lambda y: float(pot.grad_1d(y)), x, h)
        worst["lap_V"] = max(worst["lap_V"],
                             abs(lap - lap_fd) / max(abs(lap_fd), 1e-12))
        gn = model_mod.v_nu_and_grad(model, x)[1]
        gn_fd = _richardson(lambda y: model_mod.v_nu(model, y), x, h)
        worst["grad_V_nu"] = max(worst["grad_V_nu"],
                                 abs(gn - gn_fd) / max(abs(gn_fd), 1e-12))
    worst["n_points"] = int(np.asarray(points).size)
    worst["schema_version"] = SCHEMA_VERSION
    return worst
