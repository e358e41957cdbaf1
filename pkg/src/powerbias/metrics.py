"""Distances, decision thresholds and the verification report type."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from powerbias.dist import DistSpec, cdf

SCHEMA_VERSION = 1
DEFAULT_ALPHA = 1e-3


def _values(x) -> np.ndarray:
    arr = np.asarray(getattr(x, "values", x), dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("sample must be nonempty")
    return arr


def ks_critical_value(alpha: float) -> float:
    """Asymptotic Kolmogorov critical value ``c(alpha) = sqrt(-ln(alpha/2) / 2)``."""
    return math.sqrt(-math.log(alpha / 2.0) / 2.0)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    threshold: float
    n: int
    m: int | None = None

    @property
    def rejects(self) -> bool:
        return self.statistic > self.threshold

    def threshold_at(self, alpha: float) -> float:
        if self.m is None:
            return ks_critical_value(alpha) / math.sqrt(self.n)
        return ks_critical_value(alpha) * math.sqrt((self.n + self.m) / (self.n * self.m))


def ks_two_sample(x, y, alpha: float = DEFAULT_ALPHA) -> KSResult:
    """Two-sample Kolmogorov-Smirnov statistic and its level-``alpha`` threshold."""
    a, b = np.sort(_values(x)), np.sort(_values(y))
    n, m = a.size, b.size
    grid = np.concatenate([a, b])
    d = np.max(np.abs(np.searchsorted(a, grid, side="right") / n - np.searchsorted(b, grid, side="right") / m))
    return KSResult(float(d), ks_critical_value(alpha) * math.sqrt((n + m) / (n * m)), n, m)


def ks_one_sample(x, d: DistSpec, alpha: float = DEFAULT_ALPHA) -> KSResult:
    """One-sample KS statistic of ``x`` against the CDF of ``d``."""
    a = np.sort(_values(x))
    n = a.size
    f = np.asarray(cdf(d, a), dtype=float)
    i = np.arange(1, n + 1)
    stat = max(np.max(i / n - f), np.max(f - (i - 1) / n))
    return KSResult(float(stat), ks_critical_value(alpha) / math.sqrt(n), n)


def _quantile_subsample(sorted_x: np.ndarray, size: int) -> np.ndarray:
    idx = np.floor((np.arange(size) + 0.5) * sorted_x.size / size).astype(int)
    return sorted_x[idx]


def wasserstein1(x, y) -> float:
    """Mean absolute difference of sorted samples.

    Unequal sizes are reduced to the smaller size by taking evenly spaced
    order statistics of the larger sample.
    """
    a, b = np.sort(_values(x)), np.sort(_values(y))
    if a.size > b.size:
        a = _quantile_subsample(a, b.size)
    elif b.size > a.size:
        b = _quantile_subsample(b, a.size)
    return float(np.mean(np.abs(a - b)))


def chi2_threshold(df: int, alpha: float = DEFAULT_ALPHA) -> float:
    return float(stats.chi2.isf(alpha, df))


def ecdf_table(x, reference, points: int = 256) -> list[tuple[float, float, float]]:
    """Rows ``(t, empirical CDF of x, reference CDF)`` on a quantile grid of ``x``.

    ``reference`` is a distribution or a second sample.
    """
    a = np.sort(_values(x))
    grid = np.unique(np.quantile(a, np.linspace(0, 1, points)))
    emp = np.searchsorted(a, grid, side="right") / a.size
    if isinstance(reference, DistSpec):
        ref = np.asarray(cdf(reference, grid), dtype=float)
    else:
        b = np.sort(_values(reference))
        ref = np.searchsorted(b, grid, side="right") / b.size
    return [(float(t), float(e), float(r)) for t, e, r in zip(grid, emp, ref)]


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class Subtest:
    """One decision inside a suite.

    ``expect="below"`` passes when ``statistic <= threshold``; ``"above"``
    passes when ``statistic > threshold`` (power checks).
    """

    name: str
    statistic: float
    threshold: float
    expect: str = "below"
    threshold_adjusted: float | None = None
    detail: dict[str, Any] = field(default_factory=dict)
    ks: KSResult | None = field(default=None, repr=False)
    plot: list | None = field(default=None, repr=False)

    def decide(self, threshold: float) -> bool:
        if self.expect == "below":
            return bool(self.statistic <= threshold)
        return bool(self.statistic > threshold)

    @property
    def passed(self) -> bool:
        return self.decide(self.threshold)

    @property
    def passed_adjusted(self) -> bool:
        return self.decide(self.threshold if self.threshold_adjusted is None else self.threshold_adjusted)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "statistic": _num(self.statistic),
            "threshold": _num(self.threshold),
            "pass": self.passed,
            "expect": self.expect,
        }
        if self.threshold_adjusted is not None:
            out["threshold_bonferroni"] = _num(self.threshold_adjusted)
            out["pass_bonferroni"] = self.passed_adjusted
        if self.detail:
            out["detail"] = self.detail
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Subtest":
        return cls(
            name=data["name"],
            statistic=float(data["statistic"]),
            threshold=float(data["threshold"]),
            expect=data.get("expect", "below"),
            threshold_adjusted=None if data.get("threshold_bonferroni") is None else float(data["threshold_bonferroni"]),
            detail=data.get("detail", {}),
        )


def _num(x: float) -> float | str:
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


@dataclass
class CheckReport:
    """Outcome of one verification suite.

    ``statistic`` counts failed subtests and ``threshold`` is the number
    tolerated (0), so ``passed`` is ``statistic <= threshold``.
    """

    suite: str
    params: dict[str, Any]
    seed: int
    n: int
    subtests: list[Subtest]
    chunks: int = 1
    alpha: float = DEFAULT_ALPHA
    children: list["CheckReport"] = field(default_factory=list)

    @property
    def statistic(self) -> float:
        return float(sum(not s.passed for s in self.subtests))

    @property
    def threshold(self) -> float:
        return 0.0

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold

    @property
    def passed_adjusted(self) -> bool:
        return all(s.passed_adjusted for s in self.subtests)

    def apply_bonferroni(self) -> "CheckReport":
        """Fill adjusted thresholds for KS subtests at ``alpha / m``."""
        ks_rows = [s for s in self.subtests if s.ks is not None]
        if ks_rows:
            level = self.alpha / len(ks_rows)
            for s in ks_rows:
                s.threshold_adjusted = s.ks.threshold_at(level)
        return self

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "params": self.params,
            "seed": self.seed,
            "samples": self.n,
            "chunks": self.chunks,
            "alpha": self.alpha,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "pass": self.passed,
            "pass_bonferroni": self.passed_adjusted,
            "subtests": [s.to_dict() for s in self.subtests],
        }
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CheckReport":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {data.get('schema_version')!r}")
        return cls(
            suite=data["suite"],
            params=data["params"],
            seed=data["seed"],
            n=data["samples"],
            subtests=[Subtest.from_dict(s) for s in data["subtests"]],
            chunks=data["chunks"],
            alpha=data["alpha"],
            children=[cls.from_dict(c) for c in data.get("children", [])],
        )
