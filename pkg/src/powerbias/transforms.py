"""Distributional transforms: power bias, powers, scaling and the uniform-product
representations of the zero-bias and equilibrium maps.

Results are kept in the normal form ``Scaled(Biased(PowerOf(base)))`` (each
layer optional) using the rewrite rules

* ``(cX)^(a) = c X^(a)``
* ``(X^(a))^(b) = X^(a+b)``
* ``(X^(a))^p = (X^p)^(a/p)`` for ``p > 0``
* ``(cX)^p = c^p X^p``

and known closed forms, so equivalent compositions compare equal.
"""

from __future__ import annotations

import math

from powerbias.dist import (
    Biased,
    DegenerateError,
    DistSpec,
    DomainError,
    Exponential,
    Gamma,
    InfiniteMomentError,
    Maxwell,
    Normal,
    PointMass,
    PowerOf,
    Rademacher,
    Scaled,
    UniformInterval,
    UniformProduct,
    analytic_moment,
    closed_form_bias,
    moment,
)

__all__ = ["power_bias", "zero_bias_rep", "equilibrium_rep", "power_of", "scale", "uniform_product"]


def scale(d: DistSpec, c: float) -> DistSpec:
    """Law of ``c * X``."""
    if not (math.isfinite(c) and c > 0):
        raise DomainError(f"scale factor must be positive, got {c}")
    if c == 1:
        return d
    if isinstance(d, Scaled):
        return scale(d.base, d.c * c)
    if isinstance(d, Normal):
        return Normal(d.mu * c, d.sigma * c)
    if isinstance(d, Exponential):
        return Exponential(d.rate / c)
    if isinstance(d, Gamma):
        return Gamma(d.r, d.scale * c)
    if isinstance(d, UniformInterval):
        return UniformInterval(d.a * c, d.b * c)
    if isinstance(d, PointMass):
        return PointMass(d.x * c)
    if isinstance(d, Maxwell):
        return Maxwell(d.scale * c, d.symmetric)
    return Scaled(d, c)


def power_of(d: DistSpec, p: float) -> DistSpec:
    """Law of ``X**p`` (signed power for odd integer ``p``)."""
    if not math.isfinite(p) or p == 0:
        raise DomainError(f"power must be finite and nonzero, got {p}")
    if p == 1:
        return d
    if isinstance(d, PointMass):
        if d.x == 0 and p < 0:
            raise DomainError("negative power of the point mass at 0")
        if d.x < 0 and not (float(p).is_integer() and int(p) % 2):
            raise DomainError(f"power {p} of a negative point mass")
        return PointMass(math.copysign(abs(d.x) ** p, d.x))
    if isinstance(d, Rademacher) and float(p).is_integer() and int(p) % 2:
        return d
    if isinstance(d, Scaled):
        return scale(power_of(d.base, p), d.c**p)
    if isinstance(d, PowerOf):
        PowerOf(d, p)  # validates the outer power against the inner support
        return power_of(d.base, d.p * p)
    if isinstance(d, Biased) and p > 0:
        PowerOf(d, p)
        return power_bias(power_of(d.base, p), d.alpha / p)
    return PowerOf(d, p)


def power_bias(d: DistSpec, alpha: float) -> DistSpec:
    """The ``alpha``-power bias of ``d``.

    Raises :class:`InfiniteMomentError` naming the moment when ``E|X|^alpha``
    diverges.
    """
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"bias exponent must be positive, got {alpha}")
    if isinstance(d, Scaled):
        return scale(power_bias(d.base, alpha), d.c)
    if isinstance(d, Biased):
        return power_bias(d.base, d.alpha + alpha)
    exact = closed_form_bias(d, alpha)
    if exact is not None:
        return _normal_form(exact)
    mu = analytic_moment(d, alpha)
    if mu is None:
        mu = moment(d, alpha)
    if not math.isfinite(mu):
        raise InfiniteMomentError(f"E|X|^{alpha} is infinite for {d!r}")
    return Biased(d, alpha)


def _normal_form(d: DistSpec) -> DistSpec:
    if isinstance(d, Scaled):
        return scale(_normal_form(d.base), d.c)
    if isinstance(d, PowerOf):
        return power_of(_normal_form(d.base), d.p)
    return d


def uniform_product(y: DistSpec, symmetric: bool) -> DistSpec:
    """Law of ``V * Y`` with ``V`` uniform on (-1, 1) or (0, 1); folds atoms."""
    if isinstance(y, Scaled):
        return scale(uniform_product(y.base, symmetric), y.c)
    if isinstance(y, PointMass):
        if y.x == 0:
            raise DegenerateError("uniform product with the point mass at 0 is degenerate")
        if symmetric:
            return UniformInterval(-abs(y.x), abs(y.x))
        return UniformInterval(min(0.0, y.x), max(0.0, y.x))
    if isinstance(y, Rademacher) and symmetric:
        return UniformInterval(-1.0, 1.0)
    return UniformProduct(y, symmetric)


def zero_bias_rep(d: DistSpec) -> DistSpec:
    """Law of ``V * W^(2)`` with ``V`` uniform on (-1, 1).

    For laws symmetric about 0 this is the zero-bias law; for others it is
    still the object appearing in the square-bias identity.
    """
    if isinstance(d, PointMass) and d.x == 0:
        raise DegenerateError("zero-bias representation of the point mass at 0 is undefined")
    return uniform_product(power_bias(d, 2.0), symmetric=True)


def equilibrium_rep(d: DistSpec) -> DistSpec:
    """Law of ``U * W^(1)`` with ``U`` uniform on (0, 1); ``d`` must be nonnegative."""
    if d.support[0] < 0:
        raise DomainError(f"equilibrium representation needs nonnegative support, {d!r} has {d.support}")
    if isinstance(d, PointMass) and d.x == 0:
        raise DegenerateError("equilibrium representation of the point mass at 0 is undefined")
    return uniform_product(power_bias(d, 1.0), symmetric=False)
