"""Monte Carlo Stein residuals and the two bias identities behind the normal
and exponential fixed-point characterizations.

Each estimator returns a :class:`ResidualEstimate` whose standard error comes
from a delete-one-block jackknife over :data:`JACKKNIFE_BLOCKS` contiguous
blocks, so ratio statistics (products of means) are handled uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from powerbias.dist import DistSpec, DomainError, Exponential, Shifted, sample
from powerbias.rng import RngStream
from powerbias.transforms import power_bias

Fn = Callable[[np.ndarray], np.ndarray]

JACKKNIFE_BLOCKS = 20
Z_ACCEPT = 4.0
Z_DISTINGUISH = 10.0
BATTERY_VERSION = 1

CENTERED_EXPONENTIAL = Shifted(Exponential(1.0), -1.0)


@dataclass(frozen=True)
class TestFunction:
    """Absolutely continuous ``f`` with ``|f'| <= derivative_bound`` on the tested range."""

    __test__ = False  # not a pytest class

    name: str
    f: Fn
    f_prime: Fn
    derivative_bound: float

    def __post_init__(self):
        if not self.derivative_bound > 0:
            raise ValueError("derivative_bound must be positive")


def _clipped_cubic(x):
    return np.clip(x, -2.0, 2.0) ** 3


def _clipped_cubic_prime(x):
    return np.where(np.abs(x) < 2.0, 3.0 * x * x, 0.0)


# f(x) = x and x**2 have unbounded derivatives on the real line; they are kept
# because the identities still hold whenever the moments involved are finite,
# and the bound recorded is the one on [-1, 1].
BATTERY: tuple[TestFunction, ...] = (
    TestFunction("x", lambda x: x, lambda x: np.ones_like(x), 1.0),
    TestFunction("x^2", lambda x: x * x, lambda x: 2.0 * x, 2.0),
    TestFunction("sin", np.sin, np.cos, 1.0),
    TestFunction("cos", np.cos, lambda x: -np.sin(x), 1.0),
    TestFunction("tanh", np.tanh, lambda x: 1.0 / np.cosh(x) ** 2, 1.0),
    TestFunction("clipped-cubic", _clipped_cubic, _clipped_cubic_prime, 12.0),
)


def battery_function(name: str) -> TestFunction:
    for tf in BATTERY:
        if tf.name == name:
            return tf
    raise KeyError(f"no test function named {name!r}")


@dataclass(frozen=True)
class ResidualEstimate:
    """Monte Carlo estimate with jackknife standard error.

    ``atol`` absorbs floating-point rounding when both sides are computed
    from the same draws and agree exactly in exact arithmetic.
    """

    estimate: float
    stderr: float
    atol: float = 0.0

    @property
    def z(self) -> float:
        excess = max(abs(self.estimate) - self.atol, 0.0)
        if excess == 0.0:
            return 0.0
        return float(excess / self.stderr) if self.stderr > 0 else math.inf

    def within(self, k: float = Z_ACCEPT) -> bool:
        return self.z <= k

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def jackknife(columns: list[np.ndarray], stat: Callable[..., float],
              blocks: int = JACKKNIFE_BLOCKS) -> tuple[float, float]:
    """Delete-one-block jackknife for ``stat(*column_means)``.

    All columns share one block partition of their (common) length.
    """
    n = columns[0].size
    if any(c.size != n for c in columns):
        raise ValueError("jackknife columns must have equal length")
    if n < blocks:
        raise ValueError(f"need at least {blocks} draws, got {n}")
    edges = np.linspace(0, n, blocks + 1).astype(int)
    sums = np.array([[c[a:b].sum() for a, b in zip(edges[:-1], edges[1:])] for c in columns])
    sizes = np.diff(edges)
    full = stat(*(sums.sum(axis=1) / n))
    loo = np.array([stat(*((sums.sum(axis=1) - sums[:, j]) / (n - sizes[j]))) for j in range(blocks)])
    se = math.sqrt((blocks - 1) / blocks * float(np.sum((loo - loo.mean()) ** 2)))
    return float(full), se


def _rounding_tol(*cols: np.ndarray) -> float:
    return 64 * np.finfo(float).eps * max(float(np.mean(np.abs(c))) for c in cols)


def normal_stein_residual(d: DistSpec, f: TestFunction, stream: RngStream, n: int) -> ResidualEstimate:
    """Estimate ``E f'(W) - E W f(W)`` for ``W ~ d``."""
    w = sample(d, stream, n).values
    g = f.f_prime(w) - w * f.f(w)
    est, se = jackknife([g], lambda m: m)
    return ResidualEstimate(est, se)


def exp_stein_residual(d: DistSpec, f: TestFunction, stream: RngStream, n: int) -> ResidualEstimate:
    """Estimate ``E f'(W) - E f(W) + f(0)`` for nonnegative ``W ~ d``."""
    if d.support[0] < 0:
        raise DomainError(f"exponential Stein residual needs nonnegative support, {d!r} has {d.support}")
    w = sample(d, stream, n).values
    g = f.f_prime(w) - f.f(w) + float(f.f(np.array(0.0)))
    est, se = jackknife([g], lambda m: m)
    return ResidualEstimate(est, se)


def square_bias_identity_residual(d: DistSpec, f: TestFunction, stream: RngStream, n: int) -> ResidualEstimate:
    """Estimate ``2 E W^2 E f'(V W^(2)) - (E W f(W) - E W f(-W))``.

    ``V`` is uniform on (-1, 1) and independent of the square-biased draw.
    ``E W^2`` and the right side share one sample of ``W``.
    """
    w = sample(d, stream, n).values
    w2 = sample(power_bias(d, 2.0), stream, n).values
    v = 2.0 * stream.generator.random(n) - 1.0
    sq = w * w
    lhs_deriv = f.f_prime(v * w2)
    rhs = w * f.f(w) - w * f.f(-w)
    est, se = jackknife([sq, lhs_deriv, rhs], lambda a, b, c: 2.0 * a * b - c)
    return ResidualEstimate(est, se, _rounding_tol(2.0 * sq * lhs_deriv, rhs))


def equilibrium_identity_residual(d: DistSpec, f: TestFunction, stream: RngStream, n: int) -> ResidualEstimate:
    """Estimate ``E W E f'(U W^(1)) - E f(W) + f(0)`` for nonnegative ``W``."""
    if d.support[0] < 0:
        raise DomainError(f"equilibrium identity needs nonnegative support, {d!r} has {d.support}")
    w = sample(d, stream, n).values
    w1 = sample(power_bias(d, 1.0), stream, n).values
    u = stream.generator.random(n)
    lhs_deriv = f.f_prime(u * w1)
    rhs = f.f(w) - float(f.f(np.array(0.0)))
    est, se = jackknife([w, lhs_deriv, rhs], lambda a, b, c: a * b - c)
    return ResidualEstimate(est, se, _rounding_tol(w * lhs_deriv, rhs))
