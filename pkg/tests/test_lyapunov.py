import math

import numpy as np
import pytest

from gsde import (
    GSdeSystem,
    LyapunovSpec,
    ShellRegion,
    UncertaintySet,
    check_generator_bound,
    check_radial_unboundedness,
    estimate_one_sided_lipschitz,
    evaluate_generator,
    example1_linear,
    exponential_certificate,
    gain_rule_one_sided,
)
from gsde.casebook import lorenz_drift, power_norm_spec
from gsde.errors import ConfigurationError, DomainError
from oracles import classical_generator, corner_max_generator, random_linear_system


def test_example_system_generator_value_at_basis_vector():
    b = example1_linear()
    lv = evaluate_generator(b.system, b.lyapunov, b.uncertainty, np.array([1.0, 0.0, 0.0]))
    assert lv == pytest.approx(-107.5, abs=1e-12)


def test_fixed_volatility_reduces_to_classical_generator():
    rng = np.random.default_rng(101)
    for _ in range(100):
        d = int(rng.integers(2, 4))
        m = int(rng.integers(1, 4))
        model = random_linear_system(rng, d, m)
        s2 = rng.uniform(0.2, 3.0, m)
        u = UncertaintySet.diagonal(s2, s2)
        x = rng.standard_normal(d)
        lv = evaluate_generator(model["system"], model["spec"], u, x)
        assert lv == pytest.approx(classical_generator(model, s2, x), abs=1e-10)


def test_uncertain_volatility_matches_corner_maximization():
    rng = np.random.default_rng(103)
    for _ in range(100):
        d = int(rng.integers(2, 4))
        m = int(rng.integers(1, 4))
        model = random_linear_system(rng, d, m)
        lo = rng.uniform(0.2, 1.5, m)
        hi = lo + rng.uniform(0.0, 2.0, m)
        u = UncertaintySet.diagonal(lo, hi)
        x = rng.standard_normal(d)
        lv = evaluate_generator(model["system"], model["spec"], u, x)
        assert lv == pytest.approx(corner_max_generator(model, lo, hi, x), abs=1e-9)


def test_finite_difference_agrees_with_analytic():
    rng = np.random.default_rng(107)
    model = random_linear_system(rng, 3, 2)
    u = UncertaintySet.diagonal([0.5, 1.0], [2.0, 3.0])
    spec_fd = LyapunovSpec(V=model["spec"].V, use_finite_difference=True)
    for _ in range(1000):
        x = rng.standard_normal(3) * rng.uniform(0.5, 3.0)
        lv_a = evaluate_generator(model["system"], model["spec"], u, x)
        lv_fd = evaluate_generator(model["system"], spec_fd, u, x)
        assert lv_fd == pytest.approx(lv_a, rel=1e-4, abs=1e-6)


def test_spec_level_derivative_cross_check():
    spec = power_norm_spec(2.0)
    fd = LyapunovSpec(V=spec.V, use_finite_difference=True)
    rng = np.random.default_rng(109)
    for _ in range(50):
        x = rng.standard_normal(3) * rng.uniform(0.5, 5.0)
        g_a = spec.gradient(x, 0.0)
        g_f = fd.gradient(x, 0.0)
        assert np.allclose(g_f, g_a, rtol=1e-5, atol=1e-7)
        h_a = spec.hessian(x, 0.0)
        h_f = fd.hessian(x, 0.0)
        assert np.allclose(h_f, h_a, rtol=1e-4, atol=1e-5)


def test_generator_scales_linearly_with_candidate():
    rng = np.random.default_rng(113)
    model = random_linear_system(rng, 3, 2)
    u = UncertaintySet.diagonal([0.5, 1.0], [2.0, 3.0])
    P = model["P"]
    for c in (0.0, 0.5, 2.0, 7.5):
        scaled = LyapunovSpec(
            V=lambda x, t: c * float(x @ P @ x),
            grad_V=lambda x, t: 2.0 * c * P @ x,
            hess_V=lambda x, t: 2.0 * c * P,
            time_independent=True,
        )
        for _ in range(20):
            x = rng.standard_normal(3)
            base = evaluate_generator(model["system"], model["spec"], u, x)
            assert evaluate_generator(model["system"], scaled, u, x) == pytest.approx(
                c * base, rel=1e-12, abs=1e-12
            )


def test_generator_bound_check_passes_for_stable_candidate():
    b = example1_linear()
    report = check_generator_bound(
        b.system, b.lyapunov, b.uncertainty, ShellRegion(0.1, 10.0, 2000, seed=1)
    )
    assert report.passed
    assert report.worst_margin <= 1e-9
    assert "sample density" in report.notes


def test_generator_bound_check_fails_for_uncontrolled_drift():
    # the drift alone (no noise, no variation drift) is unstable: the margin
    # goes positive near the leading eigendirection
    from gsde.casebook import EX1_A

    sys_drift = GSdeSystem(
        d=3,
        m=1,
        f=lambda x, t: x @ EX1_A.T,
        g=lambda x, t: np.zeros(x.shape + (1,)),
    )
    spec = power_norm_spec(2.0, eta_coefficient=1.0)  # eta = |x|^2
    u = UncertaintySet.scalar(3.5, 4.0)
    report = check_generator_bound(sys_drift, spec, u, ShellRegion(0.5, 2.0, 2000, seed=2))
    assert not report.passed
    assert report.worst_margin > 0
    e1 = np.array([1.0, 0.0, 0.0])
    lv_e1 = evaluate_generator(sys_drift, spec, u, e1)
    assert lv_e1 + 1.0 > 0  # margin at the basis vector itself is positive


def test_generator_bound_requires_eta():
    b = example1_linear()
    bare = LyapunovSpec(V=b.lyapunov.V, grad_V=b.lyapunov.grad_V, hess_V=b.lyapunov.hess_V,
                        time_independent=True)
    with pytest.raises(ConfigurationError):
        check_generator_bound(b.system, bare, b.uncertainty, ShellRegion(0.1, 1.0, 10))


def test_radial_unboundedness_cases():
    quad = power_norm_spec(2.0)
    assert check_radial_unboundedness(quad, [1.0, 10.0, 100.0], d=3)

    lam, p = 0.7, 1.5
    exp_spec = LyapunovSpec(
        V=lambda x, t: math.exp(lam * t) * float(np.linalg.norm(x)) ** p
    )
    assert check_radial_unboundedness(
        exp_spec, [1.0, 10.0, 100.0], t_samples=(0.0, 1.0, 5.0), d=3
    )

    bounded = LyapunovSpec(V=lambda x, t: math.sin(np.linalg.norm(x)) ** 2)
    assert not check_radial_unboundedness(bounded, [1.0, 10.0, 100.0], d=3)

    with pytest.raises(DomainError):
        check_radial_unboundedness(quad, [1.0, 1.0], d=3)


def test_exponential_certificate_pass_and_fail():
    b = example1_linear()
    region = ShellRegion(0.1, 10.0, 2000, seed=3)
    ok = exponential_certificate(
        b.system, b.exponential_spec(1.5), b.uncertainty, 1.5, 2.0, region
    )
    assert ok.passed and ok.rate == pytest.approx(-0.75)

    bad = exponential_certificate(
        b.system, b.exponential_spec(10.0), b.uncertainty, 10.0, 2.0, region
    )
    assert not bad.passed and bad.rate is None
    assert bad.worst_generator_margin > 0


def test_exponential_certificate_fails_for_null_system():
    null = GSdeSystem(
        d=3,
        m=1,
        f=lambda x, t: np.zeros_like(x),
        g=lambda x, t: np.zeros(x.shape + (1,)),
    )
    b = example1_linear()
    cert = exponential_certificate(
        null, b.exponential_spec(1.0), b.uncertainty, 1.0, 2.0,
        ShellRegion(0.5, 2.0, 500, seed=4),
    )
    # LV = lambda e^{lambda t}|x|^2 > 0 kills the generator hypothesis
    assert not cert.passed
    assert cert.worst_generator_margin > 0


def test_gain_rule():
    u40 = UncertaintySet.scalar(40.0, 50.0)
    assert gain_rule_one_sided(10.0, u40) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert 5.0 > gain_rule_one_sided(10.0, u40)
    assert gain_rule_one_sided(1e-12, u40) == pytest.approx(0.0, abs=1e-5)
    with pytest.raises(DomainError):
        gain_rule_one_sided(10.0, UncertaintySet.scalar(0.0, 50.0))
    # widening a scalar set across more channels scales the denominator
    got = gain_rule_one_sided(10.0, u40, m=4)
    assert got == pytest.approx(math.sqrt(10.0 / 80.0), rel=1e-12)


def test_one_sided_lipschitz_estimates():
    region = ShellRegion(0.5, 5.0, 10_000, seed=5)
    assert estimate_one_sided_lipschitz(
        lambda x, t: -x, region, d=3
    ) == pytest.approx(-1.0, abs=1e-12)

    from gsde.casebook import EX1_A

    est = estimate_one_sided_lipschitz(lambda x, t: EX1_A @ x, region, d=3)
    assert est <= 18.0 + 1e-9  # a lower bound on the top eigenvalue
    assert est > 17.5

    lorenz = lorenz_drift(10.0, 10.0, 8.0 / 3.0)
    big = ShellRegion(0.5, 50.0, 10_000, seed=6)
    est_l = estimate_one_sided_lipschitz(lorenz, big, d=3)
    assert est_l <= 10.0  # the analytic one-sided constant
    assert est_l > 5.0  # and the sampled bound comes close to the true 5.47


def test_candidate_nonnegative_with_symmetric_hessian():
    rng = np.random.default_rng(127)
    for spec in (power_norm_spec(2.0), power_norm_spec(2.0 / 25.0), power_norm_spec(0.49)):
        for _ in range(100):
            x = rng.standard_normal(3) * rng.uniform(0.3, 8.0)
            assert spec.value(x, 0.0) >= 0.0
            H = spec.hessian(x, 0.0)
            assert np.allclose(H, H.T, atol=1e-12)


def test_shell_region_sampling():
    region = ShellRegion(0.5, 5.0, 2000, seed=0)
    pts = region.sample(3)
    radii = np.linalg.norm(pts, axis=1)
    assert radii.min() >= 0.5 and radii.max() <= 5.0
    assert np.array_equal(pts, ShellRegion(0.5, 5.0, 2000, seed=0).sample(3))
    with pytest.raises(ConfigurationError):
        ShellRegion(0.0, 1.0, 10)
    with pytest.raises(ConfigurationError):
        ShellRegion(2.0, 1.0, 10)
