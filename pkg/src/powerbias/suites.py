"""Named verification suites.

Each suite maps ``(params, seed, samples, chunks)`` to a :class:`CheckReport`.
Default runs include negative controls (rows with ``expect="above"`` or a
"passes" count) so a suite only passes when the instrument both accepts the
true law and rejects a wrong one. Passing ``candidate`` switches the
fixed-point suites to a single-candidate run that passes iff the candidate
satisfies the identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from powerbias import beta_gamma as bg
from powerbias import geometry, stein
from powerbias.dist import (
    DistSpec,
    DistributionError,
    Empirical,
    Exponential,
    Gamma,
    Normal,
    PointMass,
    Rademacher,
    UniformInterval,
    from_dict,
    laplace,
    moment,
)
from powerbias.metrics import (
    DEFAULT_ALPHA,
    CheckReport,
    Subtest,
    ecdf_table,
    ks_one_sample,
    ks_two_sample,
)
from powerbias.rng import RngStream, derive_seed, parallel_sample, stream
from powerbias.transforms import equilibrium_rep, power_of, scale, zero_bias_rep

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 100_000
DEFAULT_CHUNKS = 8
SUB_SEEDS = 5
LOGNORMAL_SIZE = 10_000


class UsageError(ValueError):
    """Unknown suite, unknown parameter or malformed parameter value."""


# ---------------------------------------------------------------------------
# candidates
# ---------------------------------------------------------------------------


def _lognormal(seed: int) -> Empirical:
    rng = stream(derive_seed(seed, "lognormal-surrogate")).generator
    return Empirical(tuple(np.exp(rng.standard_normal(LOGNORMAL_SIZE))))


NAMED = {
    "normal": lambda seed: Normal(0.0, 1.0),
    "uniform": lambda seed: UniformInterval(-math.sqrt(3.0), math.sqrt(3.0)),
    "uniform01": lambda seed: UniformInterval(0.0, 1.0),
    "pointmass1": lambda seed: PointMass(1.0),
    "exponential": lambda seed: Exponential(1.0),
    "centered-exponential": lambda seed: stein.CENTERED_EXPONENTIAL,
    "rademacher": lambda seed: Rademacher(),
    "lognormal": _lognormal,
}


def resolve_candidate(value: Any, seed: int) -> DistSpec:
    """A named candidate (see :data:`NAMED`) or a serialized distribution."""
    if isinstance(value, DistSpec):
        return value
    if isinstance(value, str) and value in NAMED:
        return NAMED[value](seed)
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            raise UsageError(f"unknown candidate {value!r}; expected one of {sorted(NAMED)} or a JSON object") from None
    if isinstance(value, dict):
        try:
            return from_dict(value)
        except (DistributionError, KeyError, TypeError) as exc:
            raise UsageError(f"bad candidate {value!r}: {exc}") from None
    raise UsageError(f"bad candidate {value!r}")


def _label(value: Any) -> Any:
    return value.to_dict() if isinstance(value, DistSpec) else value


# ---------------------------------------------------------------------------
# run context
# ---------------------------------------------------------------------------


@dataclass
class Context:
    suite: str
    seed: int
    n: int
    chunks: int = DEFAULT_CHUNKS
    alpha: float = DEFAULT_ALPHA
    workers: int | None = None
    plot: bool = False
    rows: list[Subtest] = field(default_factory=list)

    def stream(self, *labels: object) -> RngStream:
        return stream(derive_seed(self.seed, self.suite, *labels))

    def draw(self, d: DistSpec, *labels: object, n: int | None = None) -> np.ndarray:
        """Chunked draw; depends on ``(seed, labels, n, chunks)`` only."""
        return parallel_sample(d, derive_seed(self.seed, self.suite, *labels), n or self.n,
                               self.chunks, self.workers).values

    def ks_row(self, name: str, x, y, **kw) -> Subtest:
        ks = ks_two_sample(x, y, self.alpha) if not isinstance(y, DistSpec) else ks_one_sample(x, y, self.alpha)
        row = Subtest(name, ks.statistic, ks.threshold, ks=ks, **kw)
        if self.plot:
            row.plot = ecdf_table(x, y)
        return self.add(row)

    def add(self, row: Subtest) -> Subtest:
        self.rows.append(row)
        return row

    def extend(self, prefix: str, report: CheckReport) -> None:
        for row in report.subtests:
            row.name = f"{prefix}: {row.name}"
            self.rows.append(row)


def _z_row(name: str, est: stein.ResidualEstimate) -> Subtest:
    return Subtest(name, est.z, stein.Z_ACCEPT, detail={"estimate": est.estimate, "stderr": est.stderr})


def _control_row(name: str, rows: list[Subtest]) -> Subtest:
    """Negative control from a check's KS rows: largest statistic must exceed its threshold."""
    worst = max(rows, key=lambda r: r.statistic / r.threshold)
    return Subtest(name, worst.statistic, worst.threshold, expect="above")


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def _archimedes(ctx: Context, params: dict) -> None:
    slabs, bins = int(params.get("slabs", 8)), int(params.get("bins", 16))
    pts = geometry.sphere_sample(ctx.stream("sphere"), ctx.n)
    ctx.ks_row("height vs Uniform(-1,1)", pts[:, 0], geometry.V_LAW)
    stat, thr, df = geometry.slab_angle_chisquare(pts, slabs, bins, ctx.alpha)
    ctx.add(Subtest(f"angle uniform within {slabs} slabs x {bins} bins", stat, thr, detail={"df": df}))
    gauss = geometry.gaussian_sphere_sample(ctx.stream("gaussian-sphere"), ctx.n)
    for axis in range(3):
        ctx.ks_row(f"coordinate {axis} vs normalized Gaussian", pts[:, axis], gauss[:, axis])
    rots = geometry.random_rotations(ctx.stream("rotations"), ctx.n)
    ctx.ks_row("Haar image of e1, first coordinate", rots[:, 0, 0], geometry.V_LAW)


def _herschel_maxwell(ctx: Context, params: dict) -> None:
    rotations = int(params.get("rotations", 5))
    if "dist" in params:
        d = resolve_candidate(params["dist"], ctx.seed)
        ctx.extend("candidate", geometry.rotation_invariance_check(d, ctx.stream("candidate"), ctx.n,
                                                                   rotations=rotations, alpha=ctx.alpha))
        return
    for label, d in (("Normal(0,1)", Normal(0.0, 1.0)), ("Normal(0,2)", Normal(0.0, 2.0))):
        ctx.extend(label, geometry.rotation_invariance_check(d, ctx.stream(label), ctx.n,
                                                             rotations=rotations, alpha=ctx.alpha))
    cube = geometry.rotation_invariance_check(UniformInterval(-1.0, 1.0), ctx.stream("cube"), ctx.n,
                                              rotations=rotations, alpha=ctx.alpha)
    ctx.add(_control_row("uniform cube rejected", cube.subtests))


def _maxwell_projection(ctx: Context, params: dict) -> None:
    if "dist" in params:
        d = resolve_candidate(params["dist"], ctx.seed)
        ctx.extend("candidate", geometry.maxwell_projection_check(d, ctx.stream("candidate"), ctx.n, alpha=ctx.alpha))
        return
    for label, d in (("Normal(0,1)", Normal(0.0, 1.0)), ("Normal(0,3)", Normal(0.0, 3.0))):
        ctx.extend(label, geometry.maxwell_projection_check(d, ctx.stream(label), ctx.n, alpha=ctx.alpha))
    expo = geometry.maxwell_projection_check(Exponential(1.0), ctx.stream("exponential"), ctx.n, alpha=ctx.alpha)
    ctx.add(_control_row("Exponential(1) rejected", expo.subtests))


# ---------------------------------------------------------------------------
# Stein residuals
# ---------------------------------------------------------------------------


def _battery(ctx: Context, label: str, d: DistSpec, estimator) -> list[stein.ResidualEstimate]:
    return [estimator(d, f, ctx.stream(label, f.name), ctx.n) for f in stein.BATTERY]


def _stein_suite(estimator, default: DistSpec, control: DistSpec, control_name: str):
    def run(ctx: Context, params: dict) -> None:
        d = resolve_candidate(params["candidate"], ctx.seed) if "candidate" in params else default
        for f, est in zip(stein.BATTERY, _battery(ctx, "target", d, estimator)):
            ctx.add(_z_row(f"f={f.name}", est))
        if "candidate" in params:
            return
        zs = _battery(ctx, "control", control, estimator)
        worst = max(range(len(zs)), key=lambda i: zs[i].z)
        ctx.add(Subtest(f"{control_name} distinguished", zs[worst].z, stein.Z_DISTINGUISH, expect="above",
                        detail={"function": stein.BATTERY[worst].name}))

    return run


LEMMA_S1_BATTERY = (Exponential(1.0), Gamma(2.0, 1.0), UniformInterval(0.0, 1.0), Normal(0.0, 1.0), Rademacher())
LEMMA_EQ_BATTERY = (Exponential(1.0), Gamma(2.0, 1.0), UniformInterval(0.0, 1.0), PointMass(1.0))


def _lemma_suite(estimator, battery):
    def run(ctx: Context, params: dict) -> None:
        dists = [resolve_candidate(params["candidate"], ctx.seed)] if "candidate" in params else battery
        for d in dists:
            for f, est in zip(stein.BATTERY, _battery(ctx, repr(d), d, estimator)):
                ctx.add(_z_row(f"{d!r} f={f.name}", est))

    return run


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------


def _fixed_point_failures(ctx: Context, d: DistSpec, rep: DistSpec, label: str) -> tuple[int, list[float]]:
    fails, stats = 0, []
    for j in range(SUB_SEEDS):
        ks = ks_two_sample(ctx.draw(d, label, j, "W"), ctx.draw(rep, label, j, "rep"), ctx.alpha)
        fails += ks.rejects
        stats.append(ks.statistic)
    return fails, stats


def _fixed_point_suite(transform: Callable[[DistSpec], DistSpec], default: str, control: str):
    """At most one of the sub-seed KS tests may reject for the law to pass;
    the control must be rejected in at least ``SUB_SEEDS - 1`` of them."""

    def run(ctx: Context, params: dict) -> None:
        names = [params["candidate"]] if "candidate" in params else [default]
        for name in names:
            d = resolve_candidate(name, ctx.seed)
            fails, stats = _fixed_point_failures(ctx, d, transform(d), "candidate")
            ctx.add(Subtest(f"{_name(name)}: sub-seed KS rejections", fails, 1,
                            detail={"ks_statistics": stats}))
        if "candidate" in params:
            return
        d = resolve_candidate(control, ctx.seed)
        fails, stats = _fixed_point_failures(ctx, d, transform(d), "control")
        ctx.add(Subtest(f"{control}: sub-seed KS acceptances", SUB_SEEDS - fails, 1,
                        detail={"ks_statistics": stats}))

    return run


def _name(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(_label(value), sort_keys=True)


GAMMA_TRIPLES = ((0.5, 1.0, 0.5), (1.0, 1.0, 1.0), (2.0, 3.0, 1.0))


def _gamma_fixed_point(ctx: Context, params: dict) -> None:
    if "candidate" in params:
        r, s, p = (float(params.get(k, 1.0)) for k in ("r", "s", "p"))
        d = resolve_candidate(params["candidate"], ctx.seed)
        ctx.extend(_name(params["candidate"]), bg.gamma_fixed_point_check(r, s, p, d, ctx.stream("candidate"), ctx.n,
                                                                          alpha=ctx.alpha))
        return
    for r, s, p in GAMMA_TRIPLES:
        for c in (1.0, 2.0):
            d = scale(power_of(Gamma(r), p), c)
            rep = bg.gamma_fixed_point_check(r, s, p, d, ctx.stream(r, s, p, c), ctx.n, alpha=ctx.alpha)
            ctx.extend(f"(r,s,p)=({r:g},{s:g},{p:g}) c={c:g}", rep)
    for control in ("uniform01", "pointmass1"):
        d = resolve_candidate(control, ctx.seed)
        rep = bg.gamma_fixed_point_check(1.0, 1.0, 1.0, d, ctx.stream(control), ctx.n, alpha=ctx.alpha)
        ctx.add(_control_row(f"{control} rejected", rep.subtests))


# ---------------------------------------------------------------------------
# beta-gamma algebra and moments
# ---------------------------------------------------------------------------


def _beta_gamma(ctx: Context, params: dict) -> None:
    for r, s in ((1.0, 1.0), (0.5, 1.0), (2.0, 3.0)):
        ctx.add(bg.beta_gamma_product_check(r, s, ctx.stream("product", r, s), ctx.n, alpha=ctx.alpha))
    for a, b in ((1.0, 1.0), (0.5, 0.5)):
        ctx.add(bg.gamma_sum_check(a, b, ctx.stream("sum", a, b), ctx.n, alpha=ctx.alpha))


LADDER_TOL = 1e-9


def _moment_ladder(ctx: Context, params: dict) -> None:
    K = int(params.get("K", 6))
    ms = bg.moment_sequence(1.0, 1.0, 1.0, K)
    exact = [float(math.factorial(k)) for k in range(K + 1)]
    err = max(abs(t - e) / e for t, e in zip(ms.terms, exact))
    ctx.add(Subtest(f"moment_sequence(1,1,1,{K}) = k!", err, LADDER_TOL))
    quad = [moment(Exponential(1.0), float(k)) for k in range(1, K + 1)]
    err = max(abs(t - q) / q for t, q in zip(ms.terms[1:], quad))
    ctx.add(Subtest("matches Exponential(1) moments by quadrature", err, 1e-7))
    for r, s in ((1.0, 1.0), (0.5, 1.0), (2.0, 3.0)):
        res = bg.recursion_residual(bg.moment_sequence(r, s, 1.0, K))
        ctx.add(Subtest(f"recursion residual (r,s)=({r:g},{s:g})", res, LADDER_TOL))
    bumped = list(ms.terms)
    bumped[3] *= 1.01
    res = bg.recursion_residual(bg.MomentSeq.from_terms(1.0, 1.0, bumped))
    ctx.add(Subtest("1% perturbation of a_3 detected", res, 1e-3, expect="above"))


def _carleman(ctx: Context, params: dict) -> None:
    K = int(params.get("K", 100))
    ms = bg.moment_sequence(float(params.get("r", 1.0)), float(params.get("s", 1.0)), float(params.get("a1", 1.0)), 2 * K)
    sums = bg.carleman_partial_sums(ms, K)
    steps = int(np.sum(np.diff(sums) <= 0))
    ctx.add(Subtest("non-increasing steps", steps, 0, detail={"S_10": sums[min(9, K - 1)], f"S_{K}": sums[-1]}))
    ctx.add(Subtest(f"S_{K} / S_10", sums[-1] / sums[min(9, K - 1)], 2.0, expect="above"))


ODE_GRID = tuple(float(x) for x in np.geomspace(0.01, 10.0, 200))
ODE_TOL = 1e-8


def _laplace_ode(ctx: Context, params: dict) -> None:
    for n, c in ((2, 1.0), (3, 1.0), (3, 2.0)):
        def phi(lam, n=n, c=c):
            return (1.0 + c * lam) ** (-1.0 / (n - 1))

        ctx.add(Subtest(f"(1+{c:g} l)^(-1/{n - 1}) solves the n={n} equation",
                        bg.laplace_ode_residual(phi, n, ODE_GRID), ODE_TOL))
    gam = scale(Gamma(0.5), 2.0)
    coarse = ODE_GRID[::10]
    ctx.add(Subtest("quadrature Laplace transform of 2 G_(1/2), n=3",
                    bg.laplace_ode_residual(lambda lam: laplace(gam, lam), 3, coarse), 1e-6))
    ctx.add(Subtest("phi(0) = 1", abs(laplace(gam, 0.0) - 1.0), 1e-12))
    ctx.add(Subtest("exp(-l) is not a solution, n=3",
                    bg.laplace_ode_residual(lambda lam: math.exp(-lam), 3, ODE_GRID), 0.01, expect="above"))


CONJECTURE_CASES = ((0.5, 3, Gamma(0.5, 2.0)), (2.0, 2, Gamma(2.0, 1.0)), (1.0, 4, Gamma(1.0, 1.0)))


def _conjecture(ctx: Context, params: dict) -> None:
    if "candidate" in params or "a" in params or "n" in params:
        a, n = float(params.get("a", 1.0)), int(params.get("n", 2))
        name = params.get("candidate", "gamma")
        d = Gamma(a) if name == "gamma" else resolve_candidate(name, ctx.seed)
        ctx.extend(f"a={a:g} n={n} {_name(name)}", bg.conjecture_scan(a, n, d, ctx.stream("candidate"), ctx.n,
                                                                        alpha=ctx.alpha))
        return
    for a, n, d in CONJECTURE_CASES:
        ctx.extend(f"a={a:g} n={n} {d!r}", bg.conjecture_scan(a, n, d, ctx.stream(a, n), ctx.n, alpha=ctx.alpha))
    rep = bg.conjecture_scan(1.0, 2, resolve_candidate("lognormal", ctx.seed), ctx.stream("lognormal"), ctx.n,
                             alpha=ctx.alpha)
    ctx.add(_control_row("a=1 n=2 lognormal rejected", rep.subtests))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


Runner = Callable[[Context, dict], None]

SUITES: dict[str, tuple[Runner, frozenset[str]]] = {
    "archimedes": (_archimedes, frozenset({"slabs", "bins"})),
    "herschel-maxwell": (_herschel_maxwell, frozenset({"dist", "rotations"})),
    "maxwell-projection": (_maxwell_projection, frozenset({"dist"})),
    "stein-normal": (_stein_suite(stein.normal_stein_residual, Normal(0.0, 1.0), stein.CENTERED_EXPONENTIAL,
                                  "centered Exponential(1)"), frozenset({"candidate"})),
    "stein-exp": (_stein_suite(stein.exp_stein_residual, Exponential(1.0), UniformInterval(0.0, 1.0),
                               "Uniform(0,1)"), frozenset({"candidate"})),
    "lemma-s1": (_lemma_suite(stein.square_bias_identity_residual, LEMMA_S1_BATTERY), frozenset({"candidate"})),
    "lemma-equilibrium": (_lemma_suite(stein.equilibrium_identity_residual, LEMMA_EQ_BATTERY), frozenset({"candidate"})),
    "gaussian-fixed-point": (_fixed_point_suite(zero_bias_rep, "normal", "uniform"), frozenset({"candidate"})),
    "exponential-fixed-point": (_fixed_point_suite(equilibrium_rep, "exponential", "uniform01"),
                                frozenset({"candidate"})),
    "gamma-fixed-point": (_gamma_fixed_point, frozenset({"candidate", "r", "s", "p"})),
    "beta-gamma": (_beta_gamma, frozenset()),
    "moment-ladder": (_moment_ladder, frozenset({"K"})),
    "carleman": (_carleman, frozenset({"K", "r", "s", "a1"})),
    "laplace-ode": (_laplace_ode, frozenset()),
    "conjecture": (_conjecture, frozenset({"a", "n", "candidate"})),
}

SUITE_NAMES = tuple(SUITES) + ("all",)


def run_suite(name: str, params: dict | None = None, seed: int = DEFAULT_SEED, samples: int = DEFAULT_SAMPLES,
              chunks: int = DEFAULT_CHUNKS, *, alpha: float = DEFAULT_ALPHA, workers: int | None = None,
              plot: bool = False) -> CheckReport:
    """Run a named suite; ``"all"`` runs every suite with a derived sub-seed."""
    params = dict(params or {})
    if samples < 20:
        raise UsageError(f"samples must be at least 20, got {samples}")
    if chunks < 1:
        raise UsageError(f"chunks must be >= 1, got {chunks}")
    if not 0 < alpha < 1:
        raise UsageError(f"alpha must be in (0, 1), got {alpha}")
    if name == "all":
        if params:
            raise UsageError("suite 'all' takes no parameters")
        children = [run_suite(s, {}, derive_seed(seed, s), samples, chunks, alpha=alpha, workers=workers, plot=plot)
                    for s in SUITES]
        rows = []
        for child in children:
            for row in child.subtests:
                flat = Subtest(f"{child.suite}: {row.name}", row.statistic, row.threshold, row.expect,
                               row.threshold_adjusted, row.detail, row.ks, row.plot)
                rows.append(flat)
        return CheckReport("all", {}, seed, samples, rows, chunks=chunks, alpha=alpha, children=children)
    if name not in SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITE_NAMES)}")
    runner, allowed = SUITES[name]
    unknown = set(params) - allowed
    if unknown:
        raise UsageError(f"suite {name!r} does not accept {sorted(unknown)}; allowed: {sorted(allowed) or 'none'}")
    ctx = Context(name, seed, samples, chunks, alpha, workers, plot)
    try:
        runner(ctx, params)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"suite {name!r} rejected params {params}: {exc}") from exc
    report = CheckReport(name, {k: _label(v) for k, v in params.items()}, seed, samples, ctx.rows,
                         chunks=chunks, alpha=alpha)
    return report.apply_bonferroni()
