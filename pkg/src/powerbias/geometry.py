"""Uniform points on the unit sphere, Haar rotations, and the rotation /
projection characterizations of the centered Gaussian in three dimensions."""

from __future__ import annotations

import math

import numpy as np

from powerbias.dist import DistSpec, UniformInterval, sample
from powerbias.metrics import (
    DEFAULT_ALPHA,
    CheckReport,
    Subtest,
    chi2_threshold,
    ks_two_sample,
)
from powerbias.rng import RngStream

Vec3 = np.ndarray  # shape (3,) or (n, 3)
RotationMatrix = np.ndarray  # shape (3, 3), orthogonal with det +1

V_LAW = UniformInterval(-1.0, 1.0)


def sphere_sample(stream: RngStream, n: int) -> np.ndarray:
    """``n`` uniform points on the unit sphere as an ``(n, 3)`` array.

    The first coordinate is the uniform height ``V`` on (-1, 1); the other two
    place the point at an independent uniform angle around that axis.
    """
    rng = stream.generator
    v = 2.0 * rng.random(n) - 1.0
    theta = 2.0 * math.pi * rng.random(n)
    rho = np.sqrt(1.0 - v * v)
    return np.column_stack([v, rho * np.cos(theta), rho * np.sin(theta)])


def gaussian_sphere_sample(stream: RngStream, n: int) -> np.ndarray:
    """Uniform sphere points as normalized standard normal 3-vectors."""
    z = stream.generator.standard_normal((n, 3))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for unit quaternions ``(w, x, y, z)``; shape ``(..., 3, 3)``."""
    w, x, y, z = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
    ], -2)


def random_rotations(stream: RngStream, k: int) -> np.ndarray:
    """``k`` independent Haar-distributed rotations, shape ``(k, 3, 3)``."""
    q = stream.generator.standard_normal((k, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return quaternion_to_matrix(q)


def random_rotation(stream: RngStream) -> RotationMatrix:
    return random_rotations(stream, 1)[0]


def slab_angle_chisquare(points: np.ndarray, slabs: int = 8, bins: int = 16,
                         alpha: float = DEFAULT_ALPHA) -> tuple[float, float, int]:
    """Chi-square test that the angle around the first axis is uniform within
    each of ``slabs`` equal-width slabs of the first coordinate.

    Returns ``(statistic, threshold, degrees_of_freedom)``; slab totals are
    conditioned on, so there are ``slabs * (bins - 1)`` degrees of freedom.
    """
    v = points[:, 0]
    angle = np.mod(np.arctan2(points[:, 2], points[:, 1]), 2 * math.pi)
    slab = np.clip(((v + 1.0) / 2.0 * slabs).astype(int), 0, slabs - 1)
    cell = np.clip((angle / (2 * math.pi) * bins).astype(int), 0, bins - 1)
    counts = np.zeros((slabs, bins))
    np.add.at(counts, (slab, cell), 1.0)
    expected = counts.sum(axis=1, keepdims=True) / bins
    mask = expected[:, 0] > 0
    stat = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
    df = int(mask.sum()) * (bins - 1)
    return stat, chi2_threshold(df, alpha), df


def _iid_vectors(d: DistSpec, stream: RngStream, n: int) -> np.ndarray:
    return sample(d, stream, 3 * n).values.reshape(n, 3)


def rotation_invariance_check(d: DistSpec, stream: RngStream, n: int, *, rotations: int = 5,
                              alpha: float = DEFAULT_ALPHA) -> CheckReport:
    """Compare each coordinate of ``R X`` with fresh draws of ``d``.

    ``X`` has i.i.d. coordinates from ``d``; a fresh Haar rotation and fresh
    batch are used for each of ``rotations`` repetitions. Passes when every
    marginal two-sample KS test stays below its threshold.
    """
    rows = []
    for j in range(rotations):
        rot = random_rotation(stream)
        rotated = _iid_vectors(d, stream, n) @ rot.T
        for axis in range(3):
            ref = sample(d, stream, n)
            ks = ks_two_sample(rotated[:, axis], ref, alpha)
            rows.append(Subtest(f"rotation {j} coordinate {axis}", ks.statistic, ks.threshold, ks=ks))
    report = CheckReport("rotation-invariance", {"dist": d.to_dict(), "rotations": rotations},
                         stream.seed, n, rows, alpha=alpha)
    return report.apply_bonferroni()


def maxwell_projection_check(d: DistSpec, stream: RngStream, n: int, *,
                             alpha: float = DEFAULT_ALPHA) -> CheckReport:
    """KS test of ``X1`` against ``V * |(X1, X2, X3)|`` with fresh i.i.d. triples."""
    lhs = sample(d, stream, n).values
    triples = _iid_vectors(d, stream, n)
    v = 2.0 * stream.generator.random(n) - 1.0
    rhs = v * np.linalg.norm(triples, axis=1)
    ks = ks_two_sample(lhs, rhs, alpha)
    row = Subtest("X1 vs V*|X|", ks.statistic, ks.threshold, ks=ks)
    return CheckReport("maxwell-projection", {"dist": d.to_dict()}, stream.seed, n, [row], alpha=alpha)
