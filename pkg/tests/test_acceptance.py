"""Acceptance criteria, one test per criterion, at n = 100000 and seed 42.

Each test records a one-line PASS/FAIL verdict; the lines are printed in the
pytest terminal summary and when this file is run as a script.
"""

from __future__ import annotations

import time

from powerbias.cli import render_json
from powerbias.dist import Normal
from powerbias.metrics import ks_two_sample
from powerbias.rng import derive_seed, parallel_sample
from powerbias.suites import SUB_SEEDS, run_suite

SEED = 42
N = 100_000
CHUNKS = 4
TIME_LIMIT = 30.0

VERDICTS: dict[int, str] = {}


def record(number: int, text: str, ok: bool) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {text}"
    VERDICTS[number] = line
    print(line)
    assert ok, line


_cache: dict[str, tuple[object, float]] = {}


def suite(name: str, **params):
    key = name + repr(sorted(params.items()))
    if key not in _cache:
        start = time.perf_counter()
        rep = run_suite(name, params, SEED, N, CHUNKS)
        _cache[key] = (rep, time.perf_counter() - start)
    return _cache[key]


def rows(report, prefix: str = ""):
    return [r for r in report.subtests if r.name.startswith(prefix)]


def test_criterion_01_gaussian_fixed_point():
    rep, secs = suite("gaussian-fixed-point")
    row = rows(rep, "normal:")[0]
    passes = SUB_SEEDS - int(row.statistic)
    record(1, f"Normal(0,1) vs V*W^(2): {passes}/{SUB_SEEDS} sub-seeds pass KS at 1e-3 ({secs:.1f}s)",
           passes >= 4 and secs < TIME_LIMIT)


def test_criterion_02_uniform_is_not_a_fixed_point():
    rep, secs = suite("gaussian-fixed-point")
    row = rows(rep, "uniform:")[0]
    fails = SUB_SEEDS - int(row.statistic)
    record(2, f"variance-one uniform vs V*W^(2): rejected in {fails}/{SUB_SEEDS} sub-seeds", fails >= 4)


def test_criterion_03_normal_stein_operator():
    rep, secs = suite("stein-normal")
    battery = rows(rep, "f=")
    worst = max(r.statistic for r in battery)
    control = rows(rep, "centered")[0]
    ok = all(r.passed for r in battery) and control.statistic > 10 and secs < TIME_LIMIT
    record(3, f"Normal(0,1) max |z| = {worst:.2f} < 4 over {len(battery)} functions; "
              f"centered Exp max |z| = {control.statistic:.1f} > 10", ok)


def test_criterion_04_square_bias_identity():
    rep, secs = suite("lemma-s1")
    worst = max(r.statistic for r in rep.subtests)
    dists = {r.name.split(" f=")[0] for r in rep.subtests}
    ok = len(dists) == 5 and all(r.passed for r in rep.subtests) and secs < TIME_LIMIT
    record(4, f"square-bias identity: max |z| = {worst:.2f} < 4 over {len(rep.subtests)} (law, f) pairs "
              f"incl. Exponential(1)", ok)


def test_criterion_05_exponential_fixed_point():
    rep, secs = suite("exponential-fixed-point")
    row = rows(rep, "exponential:")[0]
    eq, secs_eq = suite("lemma-equilibrium")
    worst = max(r.statistic for r in eq.subtests)
    ok = row.passed and all(r.passed for r in eq.subtests) and max(secs, secs_eq) < TIME_LIMIT
    record(5, f"U*W^(1) vs Exp(1): {SUB_SEEDS - int(row.statistic)}/{SUB_SEEDS} sub-seeds pass; "
              f"equilibrium identity max |z| = {worst:.2f} < 4", ok)


def test_criterion_06_gamma_fixed_point():
    rep, secs = suite("gamma-fixed-point")
    gamma_rows = rows(rep, "(r,s,p)")
    controls = [r for r in rep.subtests if r.expect == "above"]
    ok = len(gamma_rows) == 6 and all(r.passed for r in gamma_rows) and len(controls) == 2 \
        and all(r.passed for r in controls) and secs < TIME_LIMIT
    record(6, f"{sum(r.passed for r in gamma_rows)}/6 gamma (r,s,p,c) cases pass; "
              f"uniform and point mass rejected: {[r.passed for r in controls]}", ok)


def test_criterion_07_archimedes():
    rep, secs = suite("archimedes")
    height = rows(rep, "height")[0]
    slab = rows(rep, "angle uniform within 8 slabs x 16 bins")[0]
    ok = height.passed and slab.passed and secs < TIME_LIMIT
    record(7, f"height KS {height.statistic:.4f} <= {height.threshold:.4f}; "
              f"slab chi-square {slab.statistic:.1f} <= {slab.threshold:.1f}", ok)


def test_criterion_08_rotation_invariance():
    rep, secs = suite("herschel-maxwell")
    gauss = rows(rep, "Normal(0,1)")
    cube = rows(rep, "uniform cube")[0]
    ok = len(gauss) == 15 and all(r.passed for r in gauss) and cube.passed and secs < TIME_LIMIT
    record(8, f"Gaussian: {sum(r.passed for r in gauss)}/15 rotated marginals pass; "
              f"cube max KS {cube.statistic:.4f} > {cube.threshold:.4f}", ok)


def test_criterion_09_moment_ladder():
    rep, secs = suite("moment-ladder")
    exact = rows(rep, "moment_sequence")[0]
    rec = rows(rep, "recursion")
    ok = exact.statistic <= 1e-9 and len(rec) == 3 and all(r.statistic <= 1e-9 for r in rec)
    record(9, f"k! ladder rel. error {exact.statistic:.1e}; recursion residuals "
              f"{', '.join(f'{r.statistic:.1e}' for r in rec)} <= 1e-9", ok)


def test_criterion_10_laplace_ode():
    rep, secs = suite("laplace-ode")
    solutions = rows(rep, "(1+")
    non = rows(rep, "exp(-l)")[0]
    ok = len(solutions) == 3 and all(r.statistic <= 1e-8 for r in solutions) and non.statistic > 0.01
    record(10, f"closed-form residuals {', '.join(f'{r.statistic:.1e}' for r in solutions)} <= 1e-8; "
               f"exp(-l) residual {non.statistic:.3f} > 0.01", ok)


def test_criterion_11_carleman():
    rep, secs = suite("carleman")
    ratio = rows(rep, "S_100")[0]
    steps = rows(rep, "non-increasing")[0]
    ok = ratio.statistic > 2 and steps.statistic == 0
    record(11, f"S_100 / S_10 = {ratio.statistic:.4f} > 2; non-increasing steps = {int(steps.statistic)}", ok)


def test_criterion_12_conjecture():
    rep, secs = suite("conjecture")
    gamma = [r for r in rep.subtests if r.expect == "below"]
    lognormal = rows(rep, "a=1 n=2 lognormal")[0]
    ok = len(gamma) == 3 and all(r.passed for r in gamma) and lognormal.passed and secs < TIME_LIMIT
    record(12, f"{sum(r.passed for r in gamma)}/3 gamma cases pass; lognormal KS "
               f"{lognormal.statistic:.4f} > {lognormal.threshold:.4f}", ok)


def test_criterion_13_reproducibility():
    start = time.perf_counter()
    one = render_json(run_suite("all", {}, SEED, N, CHUNKS, workers=1))
    two = render_json(run_suite("all", {}, SEED, N, CHUNKS, workers=CHUNKS))
    secs = time.perf_counter() - start
    record(13, f"suite 'all' with 1 and {CHUNKS} workers: byte-identical JSON ({len(one)} bytes, {secs:.1f}s)",
           one == two)


def test_criterion_14_null_calibration():
    rejections = 0
    for i in range(200):
        x = parallel_sample(Normal(0.0, 1.0), derive_seed(SEED, "null", i, "x"), N, CHUNKS)
        y = parallel_sample(Normal(0.0, 1.0), derive_seed(SEED, "null", i, "y"), N, CHUNKS)
        rejections += ks_two_sample(x, y, 1e-3).rejects
    record(14, f"{rejections}/200 null two-sample KS runs rejected at 1e-3 (limit 2)", rejections <= 2)


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
