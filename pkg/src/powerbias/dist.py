"""Symbolic univariate distributions.

Every distribution is an immutable dataclass. The module-level functions
:func:`pdf`, :func:`cdf`, :func:`sample`, :func:`expect`, :func:`moment` and
:func:`laplace` dispatch on the variant. Expectations of continuous laws are
computed with the adaptive quadrature in :mod:`powerbias.quadrature`; these
serve as the numerical oracle for closed-form values elsewhere.

Composite variants (:class:`Scaled`, :class:`Shifted`, :class:`PowerOf`,
:class:`Biased`, :class:`UniformProduct`) resolve densities by change of
variables and expectations by pulling the test function back to the base.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from typing import Any, Callable, ClassVar, Sequence

import numpy as np
from scipy import optimize, special

from powerbias.quadrature import Piece, integrate_pieces

__all__ = [
    "DistSpec", "Normal", "Exponential", "Gamma", "Beta", "UniformInterval",
    "PointMass", "Rademacher", "Maxwell", "PowerOf", "Scaled", "Shifted",
    "Biased", "UniformProduct", "Empirical",
    "DistributionError", "NoDensityError", "InfiniteMomentError", "DomainError",
    "DegenerateError", "SamplingError",
    "pdf", "cdf", "sample", "expect", "moment", "analytic_moment", "laplace",
    "closed_form_bias", "equivalent", "from_dict", "from_json",
]

Fn = Callable[[np.ndarray], np.ndarray]

DEFAULT_TOL = {"epsabs": 1e-10, "epsrel": 1e-8}
LAPLACE_TOL = {"epsabs": 1e-15, "epsrel": 5e-14}
CAP_QUANTILE = 1.0 - 1e-6
MAX_REJECTION_ROUNDS = 10**6


class DistributionError(ValueError):
    """Invalid parameters or an operation a distribution does not support."""


class NoDensityError(DistributionError):
    pass


class InfiniteMomentError(DistributionError):
    pass


class DomainError(DistributionError):
    pass


class DegenerateError(DistributionError):
    pass


class SamplingError(RuntimeError):
    pass


def _positive(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DistributionError(f"{name} must be a finite positive number, got {value!r}")


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DistributionError(f"{name} must be finite, got {value!r}")


def _cut(pieces: list[Piece], points: Sequence[float]) -> list[Piece]:
    out = []
    for piece in pieces:
        inner = sorted({p for p in points if piece.a < p < piece.b})
        if not inner:
            out.append(piece)
            continue
        edges = [piece.a, *inner, piece.b]
        for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
            keep = piece.exponent is not None and (
                (piece.at == "a" and i == 0) or (piece.at == "b" and i == len(edges) - 2)
            )
            out.append(Piece(lo, hi, piece.scale, piece.exponent if keep else None, piece.at))
    return out


class DistSpec:
    """Base class for all distribution variants."""

    discrete: ClassVar[bool] = False

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def is_discrete(self) -> bool:
        return self.discrete

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        raise NoDensityError(f"{type(self).__name__} has no density")

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cdf_left(self, x: np.ndarray) -> np.ndarray:
        return self._cdf(x)

    def _sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def _pieces(self) -> list[Piece]:
        raise NoDensityError(f"{type(self).__name__} has no quadrature plan")

    def _expect(self, g: Fn, points: Sequence[float], tol: dict) -> float:
        res = integrate_pieces(lambda x: g(x) * self._pdf(x), _cut(self._pieces(), points), **tol)
        if not res.converged:
            raise _NotConverged(res.value, res.error)
        return res.value

    def analytic_moment(self, alpha: float) -> float | None:
        return None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": type(self).__name__}
        for f in fields(self):
            if not f.init:
                continue
            value = getattr(self, f.name)
            if isinstance(value, DistSpec):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class _NotConverged(ArithmeticError):
    def __init__(self, value: float, error: float):
        super().__init__(f"quadrature did not converge (value={value!r}, error={error!r})")
        self.value = value
        self.error = error


# ---------------------------------------------------------------------------
# primitive families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Normal(DistSpec):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        _finite("mu", self.mu)
        _positive("sigma", self.sigma)

    @property
    def support(self):
        return (-math.inf, math.inf)

    def _pdf(self, x):
        z = (x - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def _cdf(self, x):
        return special.ndtr((x - self.mu) / self.sigma)

    def _sample(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)

    def _pieces(self):
        m, s = self.mu, self.sigma
        return [Piece(-math.inf, m - 4 * s, s), Piece(m - 4 * s, m), Piece(m, m + 4 * s),
                Piece(m + 4 * s, math.inf, s)]

    def analytic_moment(self, alpha):
        if self.mu != 0:
            return None
        if alpha <= -1:
            return math.inf
        return self.sigma**alpha * 2 ** (alpha / 2) * math.exp(special.gammaln((alpha + 1) / 2)) / math.sqrt(math.pi)


@dataclass(frozen=True)
class Exponential(DistSpec):
    rate: float = 1.0

    def __post_init__(self):
        _positive("rate", self.rate)

    @property
    def support(self):
        return (0.0, math.inf)

    def _pdf(self, x):
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0)), 0.0)

    def _cdf(self, x):
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0)), 0.0)

    def _sample(self, rng, n):
        return rng.standard_exponential(n) / self.rate

    def _pieces(self):
        m = 1.0 / self.rate
        return [Piece(0.0, m), Piece(m, math.inf, m)]

    def analytic_moment(self, alpha):
        if alpha <= -1:
            return math.inf
        return math.exp(special.gammaln(1 + alpha)) / self.rate**alpha


@dataclass(frozen=True)
class Gamma(DistSpec):
    """Gamma law with shape ``r`` and scale ``scale``."""

    r: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        _positive("r", self.r)
        _positive("scale", self.scale)

    @property
    def support(self):
        return (0.0, math.inf)

    def _pdf(self, x):
        r, th = self.r, self.scale
        y = np.maximum(x, 0) / th
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = special.xlogy(r - 1, y) - y - special.gammaln(r) - math.log(th)
        return np.where(x > 0, np.exp(logp), 0.0)

    def _cdf(self, x):
        return special.gammainc(self.r, np.maximum(x, 0) / self.scale)

    def _sample(self, rng, n):
        return rng.standard_gamma(self.r, n) * self.scale

    def _pieces(self):
        r, th = self.r, self.scale
        if r < 1:
            return [Piece(0.0, th, exponent=r - 1), Piece(th, math.inf, th)]
        return [Piece(0.0, th * r), Piece(th * r, math.inf, th * max(1.0, math.sqrt(r)))]

    def analytic_moment(self, alpha):
        if self.r + alpha <= 0:
            return math.inf
        return self.scale**alpha * math.exp(special.gammaln(self.r + alpha) - special.gammaln(self.r))


@dataclass(frozen=True)
class Beta(DistSpec):
    r: float = 1.0
    s: float = 1.0

    def __post_init__(self):
        _positive("r", self.r)
        _positive("s", self.s)

    @property
    def support(self):
        return (0.0, 1.0)

    def _pdf(self, x):
        r, s = self.r, self.s
        inside = (x > 0) & (x < 1)
        y = np.where(inside, x, 0.5)
        logp = (r - 1) * np.log(y) + (s - 1) * np.log1p(-y) - special.betaln(r, s)
        return np.where(inside, np.exp(logp), 0.0)

    def _cdf(self, x):
        return special.betainc(self.r, self.s, np.clip(x, 0.0, 1.0))

    def _sample(self, rng, n):
        return rng.beta(self.r, self.s, n)

    def _pieces(self):
        return [Piece(0.0, 0.5, exponent=self.r - 1 if self.r < 1 else None),
                Piece(0.5, 1.0, exponent=self.s - 1 if self.s < 1 else None, at="b")]

    def _expect(self, g, points, tol):
        # The right half is integrated in t = 1 - x so that a singular factor
        # t**(s-1) is evaluated without cancellation near x = 1.
        r, s = self.r, self.s
        norm = special.betaln(r, s)

        def right(t):
            t = np.asarray(t, dtype=float)
            inside = (t > 0) & (t <= 0.5)
            y = np.where(inside, t, 0.25)
            dens = np.exp((s - 1) * np.log(y) + (r - 1) * np.log1p(-y) - norm)
            return np.where(inside, g(1.0 - t) * dens, 0.0)

        left = _cut([Piece(0.0, 0.5, exponent=r - 1 if r < 1 else None)], points)
        mirrored = _cut([Piece(0.0, 0.5, exponent=s - 1 if s < 1 else None)], [1.0 - p for p in points])
        total = 0.0
        for f, pieces in ((lambda x: g(x) * self._pdf(x), left), (right, mirrored)):
            res = integrate_pieces(f, pieces, **tol)
            if not res.converged:
                raise _NotConverged(res.value, res.error)
            total += res.value
        return total

    def analytic_moment(self, alpha):
        if alpha <= -self.r:
            return math.inf
        r, s = self.r, self.s
        return math.exp(special.gammaln(r + alpha) + special.gammaln(r + s)
                        - special.gammaln(r + alpha + s) - special.gammaln(r))


@dataclass(frozen=True)
class UniformInterval(DistSpec):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        _finite("a", self.a)
        _finite("b", self.b)
        if not self.a < self.b:
            raise DistributionError(f"UniformInterval needs a < b, got ({self.a}, {self.b})")

    @property
    def support(self):
        return (self.a, self.b)

    def _pdf(self, x):
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def _cdf(self, x):
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _sample(self, rng, n):
        return self.a + (self.b - self.a) * rng.random(n)

    def _pieces(self):
        if self.a < 0 < self.b:
            return [Piece(self.a, 0.0), Piece(0.0, self.b)]
        return [Piece(self.a, self.b)]

    def analytic_moment(self, alpha):
        a, b = self.a, self.b

        def prim(u: float) -> float:
            # integral of t**alpha over [0, u], u >= 0
            if u == 0:
                return 0.0
            return math.log(u) if alpha == -1 else u ** (alpha + 1) / (alpha + 1)

        if a < 0 < b or a == 0 or b == 0:
            if alpha <= -1:
                return math.inf
            return (prim(max(-a, 0.0)) + prim(max(b, 0.0))) / (b - a)
        lo, hi = (a, b) if a > 0 else (-b, -a)
        if alpha == -1:
            return math.log(hi / lo) / (b - a)
        return (hi ** (alpha + 1) - lo ** (alpha + 1)) / ((alpha + 1) * (b - a))


@dataclass(frozen=True)
class PointMass(DistSpec):
    x: float = 0.0
    discrete: ClassVar[bool] = True

    def __post_init__(self):
        _finite("x", self.x)

    @property
    def support(self):
        return (self.x, self.x)

    def _cdf(self, x):
        return np.where(x >= self.x, 1.0, 0.0)

    def _cdf_left(self, x):
        return np.where(x > self.x, 1.0, 0.0)

    def _sample(self, rng, n):
        return np.full(n, float(self.x))

    def _expect(self, g, points, tol):
        return float(np.asarray(g(np.array([float(self.x)])))[0])

    def analytic_moment(self, alpha):
        if self.x != 0:
            return abs(self.x) ** alpha
        if alpha > 0:
            return 0.0
        return 1.0 if alpha == 0 else math.inf


@dataclass(frozen=True)
class Rademacher(DistSpec):
    discrete: ClassVar[bool] = True

    @property
    def support(self):
        return (-1.0, 1.0)

    def _cdf(self, x):
        return np.where(x >= 1, 1.0, np.where(x >= -1, 0.5, 0.0))

    def _cdf_left(self, x):
        return np.where(x > 1, 1.0, np.where(x > -1, 0.5, 0.0))

    def _sample(self, rng, n):
        return (2 * rng.integers(0, 2, n) - 1).astype(float)

    def _expect(self, g, points, tol):
        return float(np.mean(np.asarray(g(np.array([-1.0, 1.0])))))

    def analytic_moment(self, alpha):
        return 1.0


@dataclass(frozen=True)
class Maxwell(DistSpec):
    """Law of ``scale * |Z|`` for ``Z`` a standard normal 3-vector.

    With ``symmetric=True`` the law gets an independent random sign, which is
    the square-bias of a centered normal.
    """

    scale: float = 1.0
    symmetric: bool = False

    def __post_init__(self):
        _positive("scale", self.scale)

    @property
    def support(self):
        return (-math.inf if self.symmetric else 0.0, math.inf)

    def _pdf(self, x):
        z = x / self.scale
        dens = z * z * np.exp(-0.5 * z * z) * math.sqrt(2 / math.pi) / self.scale
        if self.symmetric:
            return 0.5 * dens
        return np.where(x >= 0, dens, 0.0)

    def _radial_cdf(self, x):
        z = np.maximum(x, 0) / self.scale
        return special.erf(z / math.sqrt(2)) - math.sqrt(2 / math.pi) * z * np.exp(-0.5 * z * z)

    def _cdf(self, x):
        if self.symmetric:
            return 0.5 + 0.5 * np.sign(x) * self._radial_cdf(np.abs(x))
        return self._radial_cdf(x)

    def _sample(self, rng, n):
        radius = self.scale * np.sqrt(np.sum(rng.standard_normal((n, 3)) ** 2, axis=1))
        if self.symmetric:
            radius *= 2 * rng.integers(0, 2, n) - 1
        return radius

    def _pieces(self):
        s = self.scale
        right = [Piece(0.0, 2 * s), Piece(2 * s, math.inf, s)]
        if self.symmetric:
            return [Piece(-math.inf, -2 * s, s), Piece(-2 * s, 0.0)] + right
        return right

    def analytic_moment(self, alpha):
        if alpha <= -3:
            return math.inf
        return self.scale**alpha * 2 ** (alpha / 2) * math.exp(
            special.gammaln((3 + alpha) / 2) - special.gammaln(1.5))


@dataclass(frozen=True)
class Empirical(DistSpec):
    """Uniform law on a finite list of observed values."""

    values: tuple[float, ...]
    discrete: ClassVar[bool] = True
    _sorted: np.ndarray = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DistributionError("Empirical needs at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise DistributionError("Empirical values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_sorted", np.sort(np.array(vals)))

    @property
    def support(self):
        return (float(self._sorted[0]), float(self._sorted[-1]))

    def _cdf(self, x):
        return np.searchsorted(self._sorted, x, side="right") / self._sorted.size

    def _cdf_left(self, x):
        return np.searchsorted(self._sorted, x, side="left") / self._sorted.size

    def _sample(self, rng, n):
        return np.asarray(self.values)[rng.integers(0, len(self.values), n)]

    def _expect(self, g, points, tol):
        return float(np.mean(np.asarray(g(np.asarray(self.values)))))

    def analytic_moment(self, alpha):
        v = np.abs(self._sorted)
        if alpha < 0 and np.any(v == 0):
            return math.inf
        return float(np.mean(v**alpha))


# ---------------------------------------------------------------------------
# composite variants
# ---------------------------------------------------------------------------


def _is_odd_integer(p: float) -> bool:
    return float(p).is_integer() and int(p) % 2 == 1


def _signed_power(x: np.ndarray, p: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** p


@dataclass(frozen=True)
class Scaled(DistSpec):
    base: DistSpec
    c: float

    def __post_init__(self):
        _positive("c", self.c)

    @property
    def is_discrete(self):
        return self.base.is_discrete

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo * self.c, hi * self.c)

    def _pdf(self, x):
        return self.base._pdf(x / self.c) / self.c

    def _cdf(self, x):
        return self.base._cdf(x / self.c)

    def _cdf_left(self, x):
        return self.base._cdf_left(x / self.c)

    def _sample(self, rng, n):
        return self.c * self.base._sample(rng, n)

    def _expect(self, g, points, tol):
        c = self.c
        return self.base._expect(lambda x: g(c * x), [p / c for p in points], tol)

    def analytic_moment(self, alpha):
        m = self.base.analytic_moment(alpha)
        return None if m is None else self.c**alpha * m


@dataclass(frozen=True)
class Shifted(DistSpec):
    base: DistSpec
    loc: float

    def __post_init__(self):
        _finite("loc", self.loc)

    @property
    def is_discrete(self):
        return self.base.is_discrete

    @property
    def support(self):
        lo, hi = self.base.support
        return (lo + self.loc, hi + self.loc)

    def _pdf(self, x):
        return self.base._pdf(x - self.loc)

    def _cdf(self, x):
        return self.base._cdf(x - self.loc)

    def _cdf_left(self, x):
        return self.base._cdf_left(x - self.loc)

    def _sample(self, rng, n):
        return self.base._sample(rng, n) + self.loc

    def _expect(self, g, points, tol):
        loc = self.loc
        return self.base._expect(lambda x: g(x + loc), [p - loc for p in points], tol)


@dataclass(frozen=True)
class PowerOf(DistSpec):
    """Law of ``X**p``; signed bases need odd integer ``p``."""

    base: DistSpec
    p: float

    def __post_init__(self):
        _finite("p", self.p)
        if self.p == 0:
            raise DomainError("power p must be nonzero")
        lo, _ = self.base.support
        if self.p < 0:
            if lo < 0:
                raise DomainError(f"negative power {self.p} needs a nonnegative base")
            if self.base.is_discrete and self.base._cdf(np.zeros(1))[0] > 0:
                raise DomainError("negative power of a law with an atom at 0")
        elif lo < 0 and not _is_odd_integer(self.p):
            raise DomainError(f"power {self.p} of a law with negative support is only defined for odd integers")

    @property
    def is_discrete(self):
        return self.base.is_discrete

    @property
    def support(self):
        lo, hi = self.base.support
        if self.p > 0:
            ends = _signed_power(np.array([lo, hi]), self.p)
            return (float(ends[0]), float(ends[1]))
        return (hi**self.p if math.isfinite(hi) else 0.0, lo**self.p if lo > 0 else math.inf)

    def _inverse(self, y: np.ndarray) -> np.ndarray:
        return _signed_power(y, 1.0 / self.p)

    def _pdf(self, y):
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            x = self._inverse(y)
            jac = np.abs(y) ** (1.0 / p - 1.0) / abs(p)
            dens = self.base._pdf(x) * jac
        ok = np.isfinite(dens) & (np.abs(y) > 0)
        if p < 0:
            ok &= y > 0
        return np.where(ok, dens, 0.0)

    def _cdf(self, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.p > 0:
                return self.base._cdf(self._inverse(y))
            yy = np.maximum(y, 0.0)
            return np.where(y > 0, 1.0 - self.base._cdf_left(self._inverse(yy)), 0.0)

    def _sample(self, rng, n):
        x = self.base._sample(rng, n)
        return _signed_power(x, self.p) if self.p > 0 else x**self.p

    def _expect(self, g, points, tol):
        p = self.p
        pts = [float(_signed_power(np.array(q), 1.0 / p)) for q in points if q > 0 or p > 0]
        if p > 0:
            return self.base._expect(lambda x: g(_signed_power(x, p)), pts, tol)
        return self.base._expect(lambda x: g(np.where(x > 0, np.abs(x) ** p, 0.0)), pts, tol)

    def analytic_moment(self, alpha):
        return self.base.analytic_moment(alpha * self.p)


@dataclass(frozen=True)
class Biased(DistSpec):
    """``alpha``-power bias: law reweighted by ``|x|**alpha / E|X|**alpha``.

    The normalizing moment ``mu`` is computed once at construction.
    """

    base: DistSpec
    alpha: float
    cap_quantile: float = field(default=CAP_QUANTILE, compare=False, repr=False)
    max_rounds: int = field(default=MAX_REJECTION_ROUNDS, compare=False, repr=False)
    mu: float = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        _positive("alpha", self.alpha)
        if not 0 < self.cap_quantile <= 1:
            raise DistributionError("cap_quantile must lie in (0, 1]")
        mu = analytic_moment(self.base, self.alpha)
        if mu is None:
            mu = moment(self.base, self.alpha)
        if not math.isfinite(mu):
            raise InfiniteMomentError(f"E|X|^{self.alpha} is infinite for {self.base!r}")
        if mu <= 0:
            raise DegenerateError(f"E|X|^{self.alpha} is zero for {self.base!r}")
        object.__setattr__(self, "mu", float(mu))

    def to_dict(self):
        out = {"type": "Biased", "base": self.base.to_dict(), "alpha": self.alpha}
        if self.cap_quantile != CAP_QUANTILE:
            out["cap_quantile"] = self.cap_quantile
        if self.max_rounds != MAX_REJECTION_ROUNDS:
            out["max_rounds"] = self.max_rounds
        return out

    @property
    def is_discrete(self):
        return self.base.is_discrete

    @property
    def support(self):
        return self.base.support

    def _pdf(self, x):
        return np.abs(x) ** self.alpha * self.base._pdf(x) / self.mu

    def _weighted_mass(self, t: float, strict: bool) -> float:
        a = self.alpha
        if strict:
            ind = lambda x: np.abs(x) ** a * (x < t)
        else:
            ind = lambda x: np.abs(x) ** a * (x <= t)
        return _expect_checked(self.base, ind, [t, 0.0], DEFAULT_TOL) / self.mu

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.array([self._weighted_mass(float(t), False) for t in x.ravel()])
        return np.clip(out, 0.0, 1.0).reshape(x.shape)

    def _cdf_left(self, x):
        if not self.base.is_discrete:
            return self._cdf(x)
        x = np.asarray(x, dtype=float)
        out = np.array([self._weighted_mass(float(t), True) for t in x.ravel()])
        return np.clip(out, 0.0, 1.0).reshape(x.shape)

    def _expect(self, g, points, tol):
        a = self.alpha
        return self.base._expect(lambda x: np.abs(x) ** a * g(x), [*points, 0.0], tol) / self.mu

    def analytic_moment(self, alpha):
        m = self.base.analytic_moment(alpha + self.alpha)
        return None if m is None else m / self.mu

    def _sample(self, rng, n):
        exact = closed_form_bias(self.base, self.alpha)
        if exact is not None:
            return exact._sample(rng, n)
        if isinstance(self.base, Empirical):
            vals = np.asarray(self.base.values)
            w = np.abs(vals) ** self.alpha
            return vals[rng.choice(vals.size, size=n, p=w / w.sum())]
        return self._rejection(rng, n)

    def _envelope(self) -> float:
        lo, hi = self.base.support
        if math.isfinite(lo) and math.isfinite(hi):
            return max(abs(lo), abs(hi)) ** self.alpha
        if self.cap_quantile >= 1:
            raise SamplingError("unbounded support needs cap_quantile < 1 for rejection sampling")
        tail = 1.0 - self.cap_quantile

        def excess(q: float) -> float:
            inside = self.base._cdf(np.array([q]))[0] - self.base._cdf_left(np.array([-q]))[0]
            return (1.0 - inside) - tail

        hi_q = 1.0
        while excess(hi_q) > 0:
            hi_q *= 2.0
            if hi_q > 1e300:
                raise SamplingError("could not bracket the envelope quantile")
        q = optimize.brentq(excess, 0.0, hi_q, xtol=1e-12, rtol=1e-12) if excess(0.0) > 0 else hi_q
        return max(q**self.alpha, self.mu)

    def _rejection(self, rng, n):
        cap = self._envelope()
        rate = min(1.0, self.mu / cap)
        out: list[np.ndarray] = []
        have = proposed = rounds = 0
        while have < n:
            if rounds >= self.max_rounds:
                raise SamplingError(
                    f"rejection sampler for {self!r} hit its cap of {self.max_rounds} rounds: "
                    f"accepted {have}/{n} of {proposed} proposals "
                    f"(observed acceptance {have / max(proposed, 1):.3g}, expected {rate:.3g})")
            m = min(int((n - have) / rate * 1.1) + 64, 10**7)
            x = self.base._sample(rng, m)
            u = rng.random(m)
            keep = x[u * cap < np.minimum(np.abs(x) ** self.alpha, cap)]
            out.append(keep[: n - have])
            have += min(keep.size, n - have)
            proposed += m
            rounds += 1
        return np.concatenate(out)


@dataclass(frozen=True)
class UniformProduct(DistSpec):
    """Law of ``V * Y`` with ``V`` independent of ``Y``.

    ``V`` is uniform on (-1, 1) when ``symmetric`` is true, else on (0, 1).
    """

    base: DistSpec
    symmetric: bool = True

    @property
    def support(self):
        lo, hi = self.base.support
        if self.symmetric:
            m = max(abs(lo), abs(hi))
            return (-m, m)
        return (min(lo, 0.0), max(hi, 0.0))

    def _uniform_cdf(self, u):
        return np.clip((u + 1) / 2, 0, 1) if self.symmetric else np.clip(u, 0, 1)

    def _pdf(self, x):
        x = np.asarray(x, dtype=float)
        dv = 0.5 if self.symmetric else 1.0

        def at(t: float) -> float:
            def g(y):
                with np.errstate(divide="ignore", invalid="ignore"):
                    u = t / y
                    inside = (u > -1) & (u < 1) if self.symmetric else (u > 0) & (u < 1)
                    return np.where(inside & (y != 0), dv / np.abs(y), 0.0)
            return _expect_checked(self.base, g, [t, -t], {"epsabs": 1e-10, "epsrel": 1e-7})

        return np.array([at(float(t)) for t in x.ravel()]).reshape(x.shape)

    def _cdf(self, x):
        x = np.asarray(x, dtype=float)

        def at(t: float) -> float:
            def g(y):
                with np.errstate(divide="ignore", invalid="ignore"):
                    u = t / y
                    f = self._uniform_cdf(u)
                    return np.where(y > 0, f, np.where(y < 0, 1.0 - f, float(t >= 0)))
            return _expect_checked(self.base, g, [t, -t], {"epsabs": 1e-10, "epsrel": 1e-7})

        return np.clip(np.array([at(float(t)) for t in x.ravel()]), 0, 1).reshape(x.shape)

    def _sample(self, rng, n):
        y = self.base._sample(rng, n)
        v = rng.random(n)
        return (2 * v - 1) * y if self.symmetric else v * y

    def _expect(self, g, points, tol):
        lo = -1.0 if self.symmetric else 0.0
        inner_tol = {"epsabs": tol["epsabs"] * 1e-2, "epsrel": tol["epsrel"] * 1e-2}

        def over_v(ys):
            out = np.empty(ys.shape)
            for i, y in enumerate(ys.ravel()):
                # g(v * y) may jump where v * y hits one of the given points
                cuts = sorted({lo, 0.0, 1.0, *(p / y for p in points if y != 0 and lo < p / y < 1)})
                pieces = [Piece(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
                res = integrate_pieces(lambda v: g(v * y), pieces, **inner_tol)
                out.ravel()[i] = res.value / (1.0 - lo)
            return out

        outer = [*points, *(-p for p in points)] if self.symmetric else list(points)
        return self.base._expect(over_v, outer, tol)

    def analytic_moment(self, alpha):
        if alpha <= -1:
            return math.inf
        m = self.base.analytic_moment(alpha)
        return None if m is None else m / (1 + alpha)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def pdf(d: DistSpec, x):
    """Density of ``d`` at ``x`` (scalar or array); 0 outside the support."""
    if d.is_discrete:
        raise NoDensityError(f"{d!r} is discrete and has no density")
    arr = np.asarray(x, dtype=float)
    out = np.asarray(d._pdf(arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def cdf(d: DistSpec, x):
    """Right-continuous distribution function of ``d`` at ``x``."""
    arr = np.asarray(x, dtype=float)
    out = np.asarray(d._cdf(arr), dtype=float)
    return float(out) if out.ndim == 0 else out


def sample(d: DistSpec, stream, n: int):
    """Draw ``n`` i.i.d. values of ``d`` from ``stream``; returns a SampleBatch."""
    from powerbias.rng import SampleBatch

    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    values = np.asarray(d._sample(stream.generator, int(n)), dtype=float)
    return SampleBatch(dist=d, seed=stream.seed, stream_id=stream.stream_id, values=values)


def _expect_checked(d: DistSpec, g: Fn, points: Sequence[float], tol: dict) -> float:
    try:
        return d._expect(g, points, tol)
    except _NotConverged as exc:
        raise ArithmeticError(str(exc)) from None


def expect(d: DistSpec, g: Fn, *, points: Sequence[float] = (), tol: dict | None = None) -> float:
    """``E g(X)`` for ``X ~ d``; ``g`` must be vectorized.

    ``points`` lists locations where ``g`` has kinks or jumps.
    """
    return _expect_checked(d, g, list(points), tol or DEFAULT_TOL)


def analytic_moment(d: DistSpec, alpha: float) -> float | None:
    """Closed-form ``E|X|**alpha``, ``inf`` if divergent, ``None`` if unknown."""
    return d.analytic_moment(alpha)


def _shell(d: DistSpec, alpha: float, lo: float, hi: float) -> float:
    def g(x):
        ax = np.abs(x)
        return np.where((ax >= lo) & (ax < hi), ax**alpha, 0.0)
    try:
        return d._expect(g, [lo, hi, -lo, -hi], DEFAULT_TOL)
    except _NotConverged as exc:
        return exc.value


def _diverges(d: DistSpec, alpha: float) -> bool:
    lo, hi = d.support
    checks = []
    if math.isinf(lo) or math.isinf(hi):
        checks.append([_shell(d, alpha, 2.0**k, 2.0 ** (k + 1)) for k in range(30, 38)])
    if alpha < 0 and lo <= 0 <= hi:
        checks.append([_shell(d, alpha, 2.0 ** -(k + 1), 2.0**-k) for k in range(30, 38)])
    for shells in checks:
        first, last = shells[0], shells[-1]
        if not math.isfinite(last) or (last > 1e-300 and last >= 0.5 * first):
            return True
    return False


def moment(d: DistSpec, alpha: float, *, tol: dict | None = None) -> float:
    """Absolute moment ``E|X|**alpha`` by quadrature (exact sums for atoms).

    Raises :class:`InfiniteMomentError` when a tail test shows divergence.
    """
    a = float(alpha)
    if isinstance(d, UniformProduct):
        if a <= -1:
            raise InfiniteMomentError(f"E|V|^{a} diverges for the uniform factor")
        return moment(d.base, a, tol=tol) / (1 + a)
    with np.errstate(divide="ignore"):
        try:
            value = d._expect(lambda x: np.abs(x) ** a, [0.0], tol or DEFAULT_TOL)
        except _NotConverged as exc:
            if _diverges(d, a):
                raise InfiniteMomentError(f"E|X|^{a} diverges for {d!r}") from None
            raise ArithmeticError(f"moment quadrature failed for {d!r}: {exc}") from None
    if not math.isfinite(value):
        raise InfiniteMomentError(f"E|X|^{a} diverges for {d!r}")
    return value


def laplace(d: DistSpec, lam: float, *, tol: dict | None = None) -> float:
    """Laplace transform ``E exp(-lam X)`` of a law on ``[0, inf)``."""
    if d.support[0] < 0:
        raise DomainError(f"Laplace transform needs nonnegative support, {d!r} has {d.support}")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    if lam == 0:
        return 1.0
    return _expect_checked(d, lambda x: np.exp(-lam * x), [], tol or LAPLACE_TOL)


def closed_form_bias(d: DistSpec, alpha: float) -> DistSpec | None:
    """Exact variant for the ``alpha``-power bias of ``d`` when one is known."""
    if isinstance(d, Gamma):
        return Gamma(d.r + alpha, d.scale)
    if isinstance(d, Exponential):
        return Gamma(1.0 + alpha, 1.0 / d.rate)
    if isinstance(d, Beta):
        return Beta(d.r + alpha, d.s)
    if isinstance(d, PointMass):
        if d.x == 0:
            raise DegenerateError("power bias of the point mass at 0 is undefined")
        return d
    if isinstance(d, Rademacher):
        return d
    if isinstance(d, Normal) and d.mu == 0 and alpha == 2:
        return Maxwell(d.sigma, symmetric=True)
    if isinstance(d, UniformInterval) and d.a == 0:
        return Scaled(Beta(1.0 + alpha, 1.0), d.b)
    if isinstance(d, Scaled):
        inner = closed_form_bias(d.base, alpha)
        return None if inner is None else Scaled(inner, d.c)
    if isinstance(d, PowerOf) and d.p > 0:
        inner = closed_form_bias(d.base, alpha * d.p)
        return None if inner is None else PowerOf(inner, d.p)
    return None


# ---------------------------------------------------------------------------
# serialization and comparison
# ---------------------------------------------------------------------------

_VARIANTS: dict[str, type] = {
    cls.__name__: cls
    for cls in (Normal, Exponential, Gamma, Beta, UniformInterval, PointMass, Rademacher,
                Maxwell, PowerOf, Scaled, Shifted, Biased, UniformProduct, Empirical)
}


def from_dict(data: dict[str, Any]) -> DistSpec:
    """Inverse of :meth:`DistSpec.to_dict`."""
    if not isinstance(data, dict) or "type" not in data:
        raise DistributionError(f"expected an object with a 'type' tag, got {data!r}")
    kind = data["type"]
    if kind not in _VARIANTS:
        raise DistributionError(f"unknown distribution type {kind!r}")
    kwargs = {}
    for key, value in data.items():
        if key == "type":
            continue
        if key == "base":
            value = from_dict(value)
        elif key == "values":
            value = tuple(value)
        kwargs[key] = value
    try:
        return _VARIANTS[kind](**kwargs)
    except TypeError as exc:
        raise DistributionError(f"bad parameters for {kind}: {exc}") from None


def from_json(text: str) -> DistSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DistributionError(f"malformed distribution JSON: {exc}") from None
    return from_dict(data)


def _normalized(d: DistSpec) -> DistSpec:
    if isinstance(d, Exponential):
        return Gamma(1.0, 1.0 / d.rate)
    if isinstance(d, UniformInterval) and d.a == 0:
        return Scaled(Beta(1.0, 1.0), d.b)
    if isinstance(d, Scaled) and d.c == 1:
        return _normalized(d.base)
    return d


def equivalent(a: DistSpec, b: DistSpec, rel: float = 1e-12) -> bool:
    """Structural equality up to float rounding and trivially equal forms."""
    a, b = _normalized(a), _normalized(b)
    if type(a) is not type(b):
        return False
    for f in fields(a):
        if not f.init or not f.compare:
            continue
        x, y = getattr(a, f.name), getattr(b, f.name)
        if isinstance(x, DistSpec):
            if not equivalent(x, y, rel):
                return False
        elif isinstance(x, float) or isinstance(y, float):
            if not math.isclose(x, y, rel_tol=rel, abs_tol=rel):
                return False
        elif x != y:
            return False
    return True
