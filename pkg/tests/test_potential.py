import numpy as np
import pytest

from oracles import fd_gradient, fd_hessian, rel_err

from slowfast import (AssumptionConstants, DomainError, EmptySearch,
                      NoConvergence, PotentialSpec, SamplingPlan, SearchBox,
                      check_assumptions, find_global_minima, make_drift,
                      make_example_u1, make_example_u3, make_quadratic_bowl)
from slowfast.errors import SlowFastError

ALL_MODELS = ["u1", "u2", "u3", "bowl", "asym_well"]


@pytest.fixture
def model(request, u1, u2, u3, bowl, asym_well):
    return {"u1": u1, "u2": u2, "u3": u3, "bowl": bowl,
            "asym_well": asym_well}[request.param]


@pytest.mark.parametrize("model", ALL_MODELS, indirect=True)
def test_gradient_matches_finite_differences(model):
    rng = np.random.default_rng(42)
    n = 1000
    xs = rng.uniform(-3, 3, size=n)
    ys = rng.uniform(-3, 3, size=(n, model.m))
    for x, y in zip(xs, ys):
        g = np.atleast_1d(model.grad_y(x, y)).reshape(model.m)
        gf = fd_gradient(model, x, y)
        assert rel_err(g, gf).max() <= 1e-5


@pytest.mark.parametrize("model", ALL_MODELS, indirect=True)
def test_hessian_matches_finite_differences(model):
    rng = np.random.default_rng(43)
    n = 1000
    xs = rng.uniform(-3, 3, size=n)
    ys = rng.uniform(-3, 3, size=(n, model.m))
    for x, y in zip(xs, ys):
        # the tilted example is only C^2 at the half-line boundary, where
        # differencing the gradient across it is allowed a looser band
        tol = 1e-4
        if model.name == "example_2_3" and abs(y[0]) <= 1e-3:
            tol = 1e-3
        h = model.hess_y(x, y).reshape(model.m, model.m)
        hf = fd_hessian(model, x, y)
        assert rel_err(h, hf).max() <= tol
        assert np.abs(h - h.T).max() <= 1e-9


@pytest.mark.parametrize("model", ALL_MODELS, indirect=True)
def test_coercivity_probe_along_rays(model):
    rng = np.random.default_rng(7)
    rp = model.declared.r_prime
    for _ in range(20):
        d = rng.standard_normal(model.m)
        d /= np.linalg.norm(d)
        x = rng.uniform(-2, 2)
        vals = [model.eval(x, r * d) for r in (2 * rp, 4 * rp, 8 * rp)]
        assert vals[0] < vals[1] < vals[2]


def test_example_u1_values(u1):
    assert u1.eval(0.0, 0.0) == pytest.approx(1.0, abs=1e-12)
    ms = find_global_minima(u1, 0.0)
    assert ms.L == 2
    assert np.allclose(np.sort(ms.ys.ravel()),
                       [-np.sqrt(0.5), np.sqrt(0.5)], atol=1e-9)
    assert np.allclose(ms.values, 0.75, atol=1e-12)
    h = u1.hess_y(0.0, np.sqrt(0.5))
    assert float(np.squeeze(h)) == pytest.approx(4.0, abs=1e-9)


def test_example_u1_minima_symmetry(u1):
    for x in np.linspace(-3, 3, 11):
        ms = find_global_minima(u1, x)
        assert ms.L == 2
        assert abs(ms.ys[0, 0] + ms.ys[1, 0]) <= 1e-10


def test_example_u2_merging(u2):
    ms0 = find_global_minima(u2, 0.0)
    assert ms0.L == 1
    assert abs(ms0.ys[0, 0]) <= 1e-10
    assert ms0.values[0] == pytest.approx(1.0, abs=1e-12)
    assert abs(ms0.hess_dets[0]) <= 1e-10 and not ms0.hess_pd[0]
    ms1 = find_global_minima(u2, 1.0)
    assert ms1.L == 2
    assert np.allclose(np.sort(ms1.ys.ravel()),
                       [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-9)


def test_example_u3_minima_structure(u3):
    ms0 = find_global_minima(u3, 0.0)
    assert ms0.L == 2
    assert np.allclose(np.sort(ms0.ys.ravel()),
                       [-np.sqrt(0.5), np.sqrt(0.5)], atol=1e-9)
    ms1 = find_global_minima(u3, 1.0)
    assert ms1.L == 1 and ms1.ys[0, 0] < 0
    msm = find_global_minima(u3, -1.0)
    assert msm.L == 1 and msm.ys[0, 0] > 0


def test_example_u3_zero_phi_equals_u1(u1):
    u3z = make_example_u3(phi=lambda x: np.zeros_like(np.asarray(x, float)))
    rng = np.random.default_rng(5)
    xs = rng.uniform(-5, 5, 10000)
    ys = rng.uniform(-25, 25, 10000)
    a = u3z.eval(xs, ys)
    b = u1.eval(xs, ys)
    assert np.abs(a - b).max() <= 1e-12


def test_example_u3_rejects_bad_phi():
    with pytest.raises(DomainError):
        make_example_u3(phi=lambda x: -np.ones_like(np.asarray(x, float)))
    with pytest.raises(DomainError):
        make_example_u3(phi=lambda x: np.asarray(x, float) + 0.5)


def test_find_minima_quadratic_bowl(bowl):
    ms = find_global_minima(bowl, 0.0)
    assert ms.L == 1
    assert abs(ms.ys[0, 0]) <= 1e-12
    assert ms.hess_dets[0] == pytest.approx(1.0, abs=1e-12)
    assert ms.hess_pd[0]


@pytest.mark.parametrize("model", ALL_MODELS, indirect=True)
def test_find_minima_grid_doubling_invariance(model):
    rp = model.declared.r_prime
    half = 1.25 * rp + 0.5
    for x in (-1.3, 0.0, 0.7):
        a = find_global_minima(model, x, SearchBox((-half,), (half,), 301))
        b = find_global_minima(model, x, SearchBox((-half,), (half,), 602))
        assert a.L == b.L
        assert np.abs(np.sort(a.ys.ravel()) - np.sort(b.ys.ravel())).max() \
            <= 1e-8


def test_minima_set_invariants(u1):
    ms = find_global_minima(u1, 0.4)
    assert ms.L == len(ms.values) >= 1
    vmin = ms.values.min()
    assert np.all(ms.values <= vmin + ms.tie_tol * max(1.0, abs(vmin)))
    for i in range(ms.L):
        for j in range(i + 1, ms.L):
            assert np.linalg.norm(ms.ys[i] - ms.ys[j]) >= ms.dedupe_radius


def test_empty_search_box(u1):
    with pytest.raises(EmptySearch):
        find_global_minima(u1, 0.0, SearchBox((5.0,), (8.0,), 31))


def test_no_convergence_on_concave_landscape():
    def neg(x, y):
        y = np.asarray(y, dtype=float)
        if y.ndim and y.shape[-1] == 1:
            y = y[..., 0]
        return -(y ** 2)

    spec = PotentialSpec(
        d=1, m=1,
        eval=neg,
        grad_y=lambda x, y: -2.0 * np.asarray(y, float).reshape(
            np.asarray(y, float).shape[:-1] + (1,))
        if np.asarray(y).ndim else -2.0 * np.asarray(y, float),
        hess_y=lambda x, y: np.full(
            np.asarray(y, float).shape[:-1] + (1, 1), -2.0),
        declared=None, name="concave")
    with pytest.raises((NoConvergence, EmptySearch)):
        find_global_minima(spec, 0.0, SearchBox((-1.0,), (1.0,), 41))


def test_assumption_constants_validation():
    with pytest.raises(DomainError):
        AssumptionConstants(k1=-1.0)
    with pytest.raises(DomainError):
        AssumptionConstants(eta=1.0)
    with pytest.raises(DomainError):
        AssumptionConstants(r=2.0, r_prime=1.0)


def test_check_assumptions_u1_paper_constants(u1, cos_drift):
    # with the generous radius the convexity condition holds comfortably
    consts = AssumptionConstants(k1=0.0, k2=64.0, k3=1.0, big_m=2e5,
                                 r=20.0, r_prime=21.0, k4=1.0, eta=2.0)
    rep = check_assumptions(u1, cos_drift, seed=1, constants=consts)
    assert rep.convexity_violation_max == 0.0
    assert rep.coercivity_ok
    assert rep.k1_ok and rep.k2_ok and rep.drift_bound_ok


@pytest.mark.parametrize("model", ALL_MODELS, indirect=True)
def test_check_assumptions_declared_constants_hold(model, cos_drift):
    rep = check_assumptions(model, cos_drift, seed=3)
    assert rep.convexity_violation_max == 0.0
    assert rep.inner_bound_ok
    assert rep.k2_ok
    assert rep.coercivity_ok
    if model.name != "quadratic_bowl":
        assert rep.ultra_ok


def test_bowl_fails_smoothing_condition(bowl):
    # quadratic confinement is only hypercontractive: the smoothed
    # log-Sobolev quantity grows without bound, and the audit says so
    rep = check_assumptions(bowl, seed=4)
    assert not rep.ultra_ok


def test_check_assumptions_bowl_gamma_zero(bowl):
    rep = check_assumptions(bowl, seed=2)
    assert np.all(rep.g_curve <= 0.0)
    assert rep.gamma_hat == 0.0


def test_gamma_estimate_stable_under_refinement(u1):
    plan1 = SamplingPlan(n_pairs_per_r=300, n_r=50)
    plan2 = SamplingPlan(n_pairs_per_r=600, n_r=50)
    g1 = check_assumptions(u1, seed=10, plan=plan1).gamma_hat
    g2 = check_assumptions(u1, seed=11, plan=plan2).gamma_hat
    assert g1 > 0 and g2 > 0
    assert abs(g1 - g2) <= 0.10 * max(g1, g2)


def test_drift_spec_sampled_invariants():
    rng = np.random.default_rng(0)
    for name in ("cos", "sin", "cos_over_sqrt", "sin_over_sqrt"):
        b = make_drift(name)
        xs = rng.uniform(-5, 5, 10000)
        ys = rng.uniform(-5, 5, 10000)
        vals = np.abs(np.atleast_2d(b.eval(xs, ys)))
        assert vals.max() <= b.bound * (1 + 1e-12)
        xs2 = rng.uniform(-5, 5, 10000)
        quot = np.abs(b.eval(xs, ys) - b.eval(xs2, ys)).ravel() \
            / np.maximum(np.abs(xs - xs2), 1e-9)
        assert quot.max() <= b.k1 * (1 + 1e-6) + 1e-12


def test_unknown_model_and_drift_rejected():
    with pytest.raises(SlowFastError):
        make_drift("nope")
    from slowfast import make_model
    with pytest.raises(SlowFastError):
        make_model("nope")


def test_quadratic_bowl_m2_hessian_symmetric():
    b2 = make_quadratic_bowl(curvature=2.0, m=2)
    h = b2.hess_y(0.0, np.array([0.3, -0.4])).reshape(2, 2)
    assert np.allclose(h, 2.0 * np.eye(2))
