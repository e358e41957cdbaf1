"""Beta-gamma algebra, the gamma fixed-point check, moment ladders with the
Carleman sums, the Laplace-transform ODE, and the beta-mixture scan for sums
of i.i.d. nonnegative variables."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln

from powerbias.dist import Beta, DistSpec, DomainError, Gamma, sample
from powerbias.metrics import DEFAULT_ALPHA, CheckReport, Subtest, ks_two_sample
from powerbias.rng import RngStream
from powerbias.transforms import power_bias

MAX_LOG = math.log(np.finfo(float).max)
ODE_STEP = 1e-5


def beta_moment(r: float, s: float, alpha: float) -> float:
    """``E B^alpha`` for ``B ~ Beta(r, s)``, evaluated through log-gamma."""
    if not (r > 0 and s > 0):
        raise DomainError(f"beta parameters must be positive, got r={r}, s={s}")
    if not alpha > -r:
        raise DomainError(f"E B^alpha diverges for alpha={alpha} <= -r={-r}")
    return float(np.exp(gammaln(r + alpha) + gammaln(r + s) - gammaln(r + alpha + s) - gammaln(r)))


# ---------------------------------------------------------------------------
# gamma fixed point
# ---------------------------------------------------------------------------


def gamma_fixed_point_check(r: float, s: float, p: float, candidate: DistSpec, stream: RngStream, n: int,
                            *, alpha: float = DEFAULT_ALPHA) -> CheckReport:
    """KS test of ``W`` against ``B^p W^(s/p)`` with ``B ~ Beta(r, s)`` independent.

    The report also records the scale ``c`` implied by the first moment if
    ``W`` were ``c G_r^p``.
    """
    for name, v in (("r", r), ("s", s), ("p", p)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    biased = power_bias(candidate, s / p)
    w = sample(candidate, stream, n).values
    product = sample(Beta(r, s), stream, n).values ** p * sample(biased, stream, n).values
    ks = ks_two_sample(w, product, alpha)
    c_est = float(np.mean(w)) * math.exp(gammaln(r) - gammaln(r + p))
    row = Subtest("W vs B^p W^(s/p)", ks.statistic, ks.threshold, ks=ks, detail={"c_estimate": c_est})
    params = {"r": r, "s": s, "p": p, "candidate": candidate.to_dict()}
    return CheckReport("gamma-fixed-point", params, stream.seed, n, [row], alpha=alpha)


def beta_gamma_product_check(r: float, s: float, stream: RngStream, n: int,
                             *, alpha: float = DEFAULT_ALPHA) -> Subtest:
    """KS test of ``B_{r,s} G_{r+s}`` against ``G_r``."""
    prod = sample(Beta(r, s), stream, n).values * sample(Gamma(r + s), stream, n).values
    ks = ks_two_sample(prod, sample(Gamma(r), stream, n), alpha)
    return Subtest(f"B({r:g},{s:g}) G({r + s:g}) vs G({r:g})", ks.statistic, ks.threshold, ks=ks)


def gamma_sum_check(a: float, b: float, stream: RngStream, n: int, *, alpha: float = DEFAULT_ALPHA) -> Subtest:
    """KS test of ``G_a + G_b`` (independent) against ``G_{a+b}``."""
    total = sample(Gamma(a), stream, n).values + sample(Gamma(b), stream, n).values
    ks = ks_two_sample(total, sample(Gamma(a + b), stream, n), alpha)
    return Subtest(f"G({a:g}) + G({b:g}) vs G({a + b:g})", ks.statistic, ks.threshold, ks=ks)


# ---------------------------------------------------------------------------
# moment ladders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentSeq:
    """``a_0..a_K`` with ``a_k = E X^(k s)``, stored as logarithms."""

    r: float
    s: float
    a1: float
    log_terms: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.log_terms) - 1

    @property
    def terms(self) -> tuple[float, ...]:
        if max(self.log_terms) > MAX_LOG:
            raise OverflowError(f"moment a_k exceeds the float range (log a_K = {self.log_terms[-1]:.1f})")
        return tuple(math.exp(t) for t in self.log_terms)

    @classmethod
    def from_terms(cls, r: float, s: float, terms: Iterable[float]) -> "MomentSeq":
        vals = [float(t) for t in terms]
        if len(vals) < 2 or vals[0] != 1.0 or min(vals) <= 0:
            raise DomainError("terms must start at a_0 = 1 and be strictly positive")
        return cls(r, s, vals[1], tuple(math.log(t) for t in vals))


def moment_sequence(r: float, s: float, a1: float, K: int) -> MomentSeq:
    """Moments of ``c G_r^(1/s)`` raised to ``k s``, with ``c`` fixed by ``a_1``.

    ``a_k = (a1 Gamma(r) / Gamma(r+s))^k Gamma(r + s k) / Gamma(r)``.
    """
    if not (r > 0 and s > 0 and a1 > 0):
        raise DomainError(f"r, s, a1 must be positive, got {r}, {s}, {a1}")
    if K < 1:
        raise DomainError(f"K must be >= 1, got {K}")
    k = np.arange(K + 1, dtype=float)
    base = math.log(a1) + gammaln(r) - gammaln(r + s)
    logs = k * base + gammaln(r + s * k) - gammaln(r)
    logs[0] = 0.0
    if not np.all(np.isfinite(logs)):
        raise OverflowError(f"log-moments are not representable for K={K}")
    return MomentSeq(float(r), float(s), float(a1), tuple(float(x) for x in logs))


def recursion_residual(ms: MomentSeq) -> float:
    """``max_k |a_k - E B^(ks) a_(k+1) / a_1| / a_k`` over ``k < K``."""
    if ms.K < 2:
        raise DomainError("recursion residual needs K >= 2")
    la = ms.log_terms
    worst = 0.0
    for k in range(ms.K):
        log_rhs = math.log(beta_moment(ms.r, ms.s, k * ms.s)) + la[k + 1] - la[1]
        worst = max(worst, abs(math.expm1(log_rhs - la[k])))
    return worst


def carleman_partial_sums(ms: MomentSeq, K: int) -> list[float]:
    """Partial sums ``S_1..S_K`` of ``a_(2k)^(-1/(2k))``."""
    if 2 * K > ms.K:
        raise DomainError(f"need terms up to a_{2 * K}, sequence stops at a_{ms.K}")
    k = np.arange(1, K + 1)
    return [float(x) for x in np.cumsum(np.exp(-np.asarray(ms.log_terms)[2 * k] / (2 * k)))]


# ---------------------------------------------------------------------------
# Laplace ODE
# ---------------------------------------------------------------------------


def laplace_ode_residual(phi: Callable[[float], float], n: int, lambda_grid: Iterable[float]) -> float:
    """``max |phi'(l) - (phi(l)^n - phi(l)) / ((n-1) l)|`` over the grid.

    ``phi'`` is a central difference with step ``1e-5 * l``. ``l = 0`` is
    skipped with a warning; check ``phi(0) = 1`` separately.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    grid = [float(l) for l in lambda_grid]
    if any(l < 0 for l in grid):
        raise DomainError("lambda grid must be nonnegative")
    if any(l == 0 for l in grid):
        warnings.warn("lambda = 0 removed from the grid; the ODE is singular there", stacklevel=2)
        grid = [l for l in grid if l > 0]
    if not grid:
        raise DomainError("lambda grid has no positive points")
    worst = 0.0
    for lam in grid:
        h = ODE_STEP * lam
        deriv = (phi(lam + h) - phi(lam - h)) / (2 * h)
        val = phi(lam)
        worst = max(worst, abs(deriv - (val**n - val) / ((n - 1) * lam)))
    return worst


# ---------------------------------------------------------------------------
# beta-mixture scan
# ---------------------------------------------------------------------------


LADDER_MOMENTS = 6


def conjecture_scan(a: float, n: int, candidate: DistSpec, stream: RngStream, samples: int,
                    *, alpha: float = DEFAULT_ALPHA) -> CheckReport:
    """Evidence for ``Y =d V (Y_1 + ... + Y_n)`` with ``V ~ Beta(a, (n-1) a)``.

    The decision is a two-sample KS test. Ratios of the empirical moments
    ``E Y^k`` to the gamma ladder with the same mean are reported for
    ``k = 1..6`` as detail only.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if candidate.support[0] < 0:
        raise DomainError(f"candidate must be nonnegative, {candidate!r} has support {candidate.support}")
    y = sample(candidate, stream, samples).values
    total = sample(candidate, stream, n * samples).values.reshape(samples, n).sum(axis=1)
    v = sample(Beta(a, (n - 1) * a), stream, samples).values
    ks = ks_two_sample(y, v * total, alpha)
    ladder = moment_sequence(a, 1.0, float(np.mean(y)), LADDER_MOMENTS).terms
    ratios = {f"k={k}": float(np.mean(y**k) / ladder[k]) for k in range(1, LADDER_MOMENTS + 1)}
    row = Subtest("Y vs V*(Y1+...+Yn)", ks.statistic, ks.threshold, ks=ks, detail={"moment_ratios": ratios})
    params = {"a": a, "n": n, "candidate": candidate.to_dict()}
    return CheckReport("conjecture", params, stream.seed, samples, [row], alpha=alpha)
