import math

import numpy as np
import pytest

from powerbias.dist import (
    DomainError,
    Exponential,
    Gamma,
    Normal,
    PointMass,
    Rademacher,
    UniformInterval,
    expect,
)
from powerbias.rng import stream
from powerbias.stein import (
    BATTERY,
    CENTERED_EXPONENTIAL,
    ResidualEstimate,
    TestFunction,
    battery_function,
    equilibrium_identity_residual,
    exp_stein_residual,
    jackknife,
    normal_stein_residual,
    square_bias_identity_residual,
)
from powerbias.transforms import equilibrium_rep, zero_bias_rep

N = 100_000
ident, square, sine = battery_function("x"), battery_function("x^2"), battery_function("sin")

# Values below were computed once with scipy.integrate.quad (an independent
# QUADPACK integrator) and frozen.
E_COS_NORMAL = 0.6065306597126334  # E cos W = E W sin W, W ~ N(0, 1)
E_W_SIN_W_NORMAL = 0.6065306597126335
S1_UNIFORM_SIN = 0.6023373578795137  # both sides for W ~ U(0, 1), f = sin
EQ_GAMMA2_SIN = 0.5000000000000002  # both sides for W ~ Gamma(2, 1), f = sin


def test_battery_shape():
    assert [f.name for f in BATTERY] == ["x", "x^2", "sin", "cos", "tanh", "clipped-cubic"]
    x = np.linspace(-1.0, 1.0, 201)
    for f in BATTERY:
        h = 1e-6
        numeric = (f.f(x + h) - f.f(x - h)) / (2 * h)
        assert np.allclose(numeric, f.f_prime(x), atol=1e-6)
        assert np.all(np.abs(f.f_prime(x)) <= f.derivative_bound + 1e-12)


def test_clipped_cubic_bound_on_line():
    f = battery_function("clipped-cubic")
    x = np.linspace(-10, 10, 2001)
    assert np.max(np.abs(f.f_prime(x))) <= f.derivative_bound


def test_bad_test_function():
    with pytest.raises(ValueError):
        TestFunction("bad", np.sin, np.cos, 0.0)


def test_jackknife_of_mean_matches_block_standard_error():
    x = np.random.default_rng(0).standard_normal(20_000)
    est, se = jackknife([x], lambda m: m)
    assert est == pytest.approx(x.mean())
    assert se == pytest.approx(1 / math.sqrt(x.size), rel=0.4)


def test_residual_estimate_z():
    assert ResidualEstimate(0.0, 0.0).z == 0.0
    assert ResidualEstimate(1.0, 0.0).z == math.inf
    assert ResidualEstimate(1e-15, 1e-17, atol=1e-14).z == 0.0
    assert ResidualEstimate(-2.0, 0.5).z == 4.0
    est, se = ResidualEstimate(0.25, 0.5)
    assert (est, se) == (0.25, 0.5)


def test_normal_stein_quadrature_oracle():
    d = Normal(0.0, 1.0)
    assert expect(d, np.cos) == pytest.approx(E_COS_NORMAL, rel=1e-9)
    assert expect(d, lambda w: w * np.sin(w)) == pytest.approx(E_W_SIN_W_NORMAL, rel=1e-9)
    assert E_COS_NORMAL == pytest.approx(math.exp(-0.5), rel=1e-14)


@pytest.mark.parametrize("f", BATTERY, ids=lambda f: f.name)
def test_normal_stein_accepts_normal(f):
    assert normal_stein_residual(Normal(0.0, 1.0), f, stream(42, 1), N).within(4.0)


def test_normal_stein_examples():
    est = normal_stein_residual(Normal(0.0, 1.0), ident, stream(1), N)
    assert abs(est.estimate) < 4 * est.stderr
    est = normal_stein_residual(Exponential(1.0), ident, stream(1), N)
    # 1 - E W^2 = -1
    assert abs(est.estimate + 1.0) < 4 * est.stderr


def test_normal_stein_distinguishes_centered_exponential():
    zs = [normal_stein_residual(CENTERED_EXPONENTIAL, f, stream(42, 2), N).z for f in BATTERY]
    assert max(zs) > 10


def test_exp_stein_examples():
    est = exp_stein_residual(Exponential(1.0), ident, stream(2), N)
    assert est.within(4.0)
    est = exp_stein_residual(Exponential(1.0), sine, stream(2), N)
    assert est.within(4.0)
    assert expect(Exponential(1.0), np.cos) == pytest.approx(0.5, rel=1e-10)
    est = exp_stein_residual(UniformInterval(0.0, 1.0), ident, stream(2), N)
    assert est.estimate == pytest.approx(0.5, abs=4 * est.stderr)
    with pytest.raises(DomainError):
        exp_stein_residual(Normal(0.0, 1.0), ident, stream(2), N)


@pytest.mark.parametrize("d", [Exponential(1.0), Gamma(2.0, 1.0), UniformInterval(0.0, 1.0), Normal(0.0, 1.0),
                               Rademacher()], ids=repr)
@pytest.mark.parametrize("f", BATTERY, ids=lambda f: f.name)
def test_square_bias_identity_unconditional(d, f):
    assert square_bias_identity_residual(d, f, stream(42, 3), N).within(4.0)


def test_square_bias_examples():
    est = square_bias_identity_residual(Exponential(1.0), ident, stream(4), N)
    assert est.z == 0.0  # both sides are 2 E W^2 on the same draws
    est = square_bias_identity_residual(Exponential(1.0), square, stream(4), N)
    assert est.within(4.0)


def test_square_bias_uniform_sin_quadrature_oracle():
    d = UniformInterval(0.0, 1.0)
    lhs = 2.0 * expect(d, lambda w: w * w) * expect(zero_bias_rep(d), np.cos)
    rhs = expect(d, lambda w: w * np.sin(w) - w * np.sin(-w))
    assert lhs == pytest.approx(S1_UNIFORM_SIN, rel=1e-8)
    assert rhs == pytest.approx(S1_UNIFORM_SIN, rel=1e-8)
    assert S1_UNIFORM_SIN == pytest.approx(2 * (math.sin(1) - math.cos(1)), rel=1e-14)


@pytest.mark.parametrize("d", [Exponential(1.0), Gamma(2.0, 1.0), UniformInterval(0.0, 1.0), PointMass(1.0)],
                         ids=repr)
@pytest.mark.parametrize("f", BATTERY, ids=lambda f: f.name)
def test_equilibrium_identity(d, f):
    assert equilibrium_identity_residual(d, f, stream(42, 5), N).within(4.0)


def test_equilibrium_examples():
    est = equilibrium_identity_residual(PointMass(1.0), square, stream(6), N)
    assert abs(est.estimate) < 4 * est.stderr
    est = equilibrium_identity_residual(Exponential(1.0), ident, stream(6), N)
    assert est.z == 0.0
    with pytest.raises(DomainError):
        equilibrium_identity_residual(Normal(0.0, 1.0), ident, stream(6), N)


def test_equilibrium_gamma_sin_quadrature_oracle():
    d = Gamma(2.0, 1.0)
    lhs = expect(d, lambda w: w) * expect(equilibrium_rep(d), np.cos)
    rhs = expect(d, np.sin)
    assert lhs == pytest.approx(EQ_GAMMA2_SIN, rel=1e-8)
    assert rhs == pytest.approx(EQ_GAMMA2_SIN, rel=1e-8)
