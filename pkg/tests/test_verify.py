import math

import numpy as np
import pytest
from scipy import integrate

from wpconv import model as M
from wpconv import lyapunov as L
from wpconv import rates as R
from wpconv import verify as V
from wpconv import presets as P
from wpconv.errors import StepSizeTooLarge


@pytest.fixture(scope="module")
def m33():
    return P.make_model("example_3_3", p=2.0)


@pytest.fixture(scope="module")
def alpha_33(m33):
    rg = np.geomspace(1e-2, 1e10, 1601)
    return R.rate_tables(m33, L.DriftConfig(case="cor_a", sigma=1.0), r_grid=rg)


TANH = V.TestFunction(id="tanh", value=np.tanh,
                      gradient=lambda x: V._sech2(x), osc_bound=2.0)


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------

def test_corpus_composition_and_bounds():
    corpus = V.build_corpus(seed=7)
    assert len(corpus) == 30
    assert sum(f.role == "calibration" for f in corpus) == 10
    assert sum(f.role == "holdout" for f in corpus) == 20
    x = np.linspace(-200.0, 200.0, 4001)
    for f in corpus:
        assert np.all(np.abs(f.value(x)) <= f.osc_bound + 1e-12)
        assert np.max(f.value(x)) - np.min(f.value(x)) <= f.osc_bound + 1e-12


def test_corpus_gradients_match_fd():
    corpus = V.build_corpus(seed=7)
    xs = np.linspace(-30.0, 30.0, 101)
    h = 1e-6
    for f in corpus[::5]:
        fd = (f.value(xs + h) - f.value(xs - h)) / (2 * h)
        np.testing.assert_allclose(f.gradient(xs), fd, rtol=1e-6, atol=1e-9)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sampler_reproducible(m33):
    b1 = V.sample_convolution(m33, 99, 5000)
    b2 = V.sample_convolution(m33, 99, 5000)
    assert np.array_equal(b1.points, b2.points)
    b3 = V.sample_convolution(m33, 100, 5000)
    assert not np.array_equal(b1.points, b3.points)


def test_sampler_gaussian_second_moment():
    """Quadrature oracle: E[X^2] for the quadratic well equals the integral
    of x^2 exp(-V), computed independently."""
    m = M.ConvolutionModel(M.quadratic_potential(), M.point_mass())
    oracle = integrate.quad(
        lambda x: x * x * math.exp(-m.potential.value(abs(x))),
        -10.0, 10.0)[0]
    n = 10 ** 6
    x = V.sample_convolution(m, 42, n).points[:, 0]
    se = np.std(x ** 2) / math.sqrt(n)
    assert abs(x.var() - oracle) <= 3.0 * se
    assert oracle == pytest.approx(0.5, rel=1e-10)


def test_sampler_two_atom_symmetry():
    m = M.ConvolutionModel(M.quadratic_potential(), M.symmetric_pair(1.0))
    n = 200_000
    pts = V.sample_convolution(m, 1, n).points[:, 0]
    se = pts.std() / math.sqrt(n)
    assert abs(pts.mean()) <= 4.0 * se


def test_sampler_rejection_d2():
    m = M.ConvolutionModel(M.log_potential(3.0, d=2), M.point_mass(d=2))
    pts = V.sample_convolution(m, 3, 50_000).points
    r2 = (pts ** 2).sum(axis=1)
    oracle = integrate.quad(
        lambda s: s ** 2 * 2 * np.pi * s * math.exp(-m.potential.c)
        * (1 + s) ** -5.0, 0, np.inf)[0]
    se = r2.std() / math.sqrt(len(r2))
    assert abs(r2.mean() - oracle) <= 4.0 * se


def test_ks_two_atom_model():
    m = M.ConvolutionModel(M.quadratic_potential(), M.symmetric_pair(1.0))
    d = V.ks_statistic(m, 7, 10 ** 5)
    assert d < V.ks_critical_value(10 ** 5)


def test_convolution_cdf_against_direct_quadrature():
    m = M.ConvolutionModel(M.quadratic_potential(), M.symmetric_pair(1.0))
    F = V.convolution_cdf(m)
    for x0 in [-2.0, 0.0, 0.7, 3.0]:
        oracle = integrate.quad(lambda t: M.p_nu(m, t), -12.0, x0, limit=200)[0]
        # tail-table interpolation bounds the CDF error near the bulk
        assert F(np.array([x0]))[0] == pytest.approx(oracle, abs=2e-5)
    xs = np.linspace(-8, 8, 200)
    vals = F(xs)
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[0] < 1e-6 and vals[-1] > 1 - 1e-6


# ---------------------------------------------------------------------------
# empirical functional inequality
# ---------------------------------------------------------------------------

def test_wpi_constant_function_trivial(m33, alpha_33):
    const = V.TestFunction(id="const", value=lambda x: np.ones_like(x),
                           gradient=lambda x: np.zeros_like(x),
                           osc_bound=1.0, role="holdout")
    corpus = V.build_corpus(seed=7)[:10] + [const]
    r_grid = np.geomspace(1e-5, 1e-2, 10)
    rep = V.empirical_wpi(m33, alpha_33.alpha, corpus, r_grid, seed=5, n=20_000)
    st = rep.per_function["const"]
    assert st["var"] <= 1e-25
    assert st["max_slack"] <= 0.0


def test_wpi_holdout_passes_at_moderate_n(m33, alpha_33):
    corpus = V.build_corpus(seed=7)
    r_grid = np.geomspace(max(alpha_33.alpha.grid[0] * 2, 1e-6),
                          min(alpha_33.alpha.grid[-1] * 0.5, 1e-2), 25)
    rep = V.empirical_wpi(m33, alpha_33.alpha, corpus, r_grid, seed=123,
                          n=200_000)
    assert rep.holdout_violations == 0
    assert rep.c_calibrated > 0.0
    d = rep.to_dict()
    assert d["passed"] and d["n_samples"] == 200_000


def test_wpi_variance_sanity_and_energy_positivity(m33, alpha_33):
    corpus = V.build_corpus(seed=7)
    r_grid = np.geomspace(1e-5, 1e-2, 8)
    rep = V.empirical_wpi(m33, alpha_33.alpha, corpus, r_grid, seed=11, n=50_000)
    for f in corpus:
        st = rep.per_function[f.id]
        assert st["var"] <= 0.25 * st["osc"] ** 2 * (1.0 + 1e-3)
        assert st["energy"] >= 0.0


def test_wpi_large_r_dominates(m33, alpha_33):
    """Once r >= 1/4, the oscillation term alone bounds any variance."""
    corpus = V.build_corpus(seed=7)
    r_grid = np.array([0.25 * f.osc_bound ** 0 for f in corpus[:1]]) * 0 + 0.3
    rep = V.empirical_wpi(m33, alpha_33.alpha, corpus, np.array([0.3]),
                          seed=2, n=20_000)
    for f in corpus:
        assert rep.per_function[f.id]["max_slack"] <= 0.0


# ---------------------------------------------------------------------------
# decay
# ---------------------------------------------------------------------------

def test_decay_constant_function_is_zero(m33):
    const = V.TestFunction(id="const", value=lambda x: np.ones_like(x),
                           gradient=lambda x: np.zeros_like(x), osc_bound=1.0)
    tr = V.semigroup_decay(m33, const, np.array([0.5, 1.0]), n_paths=16,
                           dt=0.01, seed=3, n_inner=16)
    assert np.all(tr.variance_estimates <= 1e-25)


def test_decay_trace_decreases(m33):
    tr = V.semigroup_decay(m33, TANH, np.array([0.5, 2.0, 6.0]), n_paths=96,
                           dt=5e-3, seed=9, n_inner=96)
    v = tr.variance_estimates
    ci = tr.confidence_halfwidths
    assert np.all(np.diff(v) <= 2.0 * (ci[1:] + ci[:-1]))
    assert v[-1] < v[0]


def test_decay_reproducible(m33):
    t = np.array([0.25, 0.5])
    a = V.semigroup_decay(m33, TANH, t, n_paths=16, dt=0.01, seed=21, n_inner=8)
    b = V.semigroup_decay(m33, TANH, t, n_paths=16, dt=0.01, seed=21, n_inner=8)
    np.testing.assert_array_equal(a.variance_estimates, b.variance_estimates)


def test_decay_explosion_guard():
    m = M.ConvolutionModel(M.quadratic_potential(), M.point_mass())
    with pytest.raises(StepSizeTooLarge):
        V.semigroup_decay(m, TANH, np.array([50.0]), n_paths=8, dt=1.5,
                          seed=3, n_inner=8)


def test_decay_heavier_tails_decay_slower():
    """Paired traces with shared seeds: the lighter-tailed well (p = 4) damps
    the conditional mean faster than the heavy one (p = 1) at matched times."""
    m_heavy = P.make_model("example_3_3", p=1.0)
    m_light = P.make_model("example_3_3", p=4.0)
    t = np.array([1.0, 3.0, 6.0])
    kw = dict(n_paths=96, dt=5e-3, seed=17, n_inner=96)
    tr_h = V.semigroup_decay(m_heavy, TANH, t, **kw)
    tr_l = V.semigroup_decay(m_light, TANH, t, **kw)
    gap = tr_h.variance_estimates - tr_l.variance_estimates
    ci = tr_h.confidence_halfwidths + tr_l.confidence_halfwidths
    assert np.all(gap >= -ci)
    assert gap[-1] > 0.0


def test_decay_trace_csv(tmp_path, m33):
    tr = V.semigroup_decay(m33, TANH, np.array([0.25, 0.5]), n_paths=8,
                           dt=0.01, seed=4, n_inner=8)
    pth = tmp_path / "decay.csv"
    tr.to_csv(pth)
    rows = pth.read_text().strip().splitlines()
    assert rows[0] == "t,variance,ci_halfwidth"
    assert len(rows) == 3


# ---------------------------------------------------------------------------
# gradient hygiene
# ---------------------------------------------------------------------------

def test_crosscheck_quadratic_laplacian():
    m = M.ConvolutionModel(M.quadratic_potential(), M.point_mass())
    rep = V.crosscheck_gradients(m, V.default_check_points(m, 20, seed=5))
    assert rep["lap_V"] <= 1e-8
    assert rep["grad_V"] <= 1e-8


def test_crosscheck_loglog_potential():
    m = P.make_model("example_3_4", p=2.0)
    pts = V.default_check_points(m, 100, seed=77, lo=1.0, hi=100.0)
    rep = V.crosscheck_gradients(m, pts)
    assert rep["grad_V"] <= 1e-6
    assert rep["grad_V_nu"] <= 1e-6


def test_crosscheck_lattice_grad_v_nu():
    m31 = P.make_model("example_3_1", p=1.0)
    rep = V.crosscheck_gradients(m31, np.array([-50.0, -10.0, -2.0, 2.0, 10.0, 50.0]))
    assert rep["grad_V_nu"] <= 1e-6
