"""Monomial bases with arbitrary exponent sets and their collocation matrices.

Every matrix here uses one column convention: exponents in *decreasing*
order. A classical ``1, t, t^2, ...`` layout is the column reversal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Shared sampling instants ``t_1, ..., t_N`` (pairwise distinct)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).ravel()
        if pts.size < 1:
            raise ValueError("time grid needs at least one point")
        if np.unique(pts).size != pts.size:
            raise ValueError("time grid points must be pairwise distinct")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.points.tobytes()).hexdigest()


@dataclass(frozen=True)
class ExponentSet:
    """Strictly decreasing nonnegative exponents ``m_1 > m_2 > ... > m_k``."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(m) for m in self.exponents)
        if not exps:
            raise ValueError("empty basis")
        if any(m < 0 for m in exps):
            raise ValueError("exponents must be nonnegative")
        if any(a <= b for a, b in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly decreasing")
        object.__setattr__(self, "exponents", exps)

    def __len__(self) -> int:
        return len(self.exponents)

    def __iter__(self):
        return iter(self.exponents)

    def __str__(self) -> str:
        return ",".join(str(m) for m in self.exponents)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    values: np.ndarray
    grid: TimeGrid
    basis: ExponentSet = field(repr=True)


def make_exponent_set(degrees: Iterable[int]) -> ExponentSet:
    """Canonicalize a collection of monomial degrees.

    Example:
        >>> make_exponent_set({0, 2})
        ExponentSet(exponents=(2, 0))
    """
    degs = [int(d) for d in degrees]
    if not degs:
        raise ValueError("empty basis")
    if len(set(degs)) != len(degs):
        raise ValueError("duplicate exponent")
    return ExponentSet(tuple(sorted(degs, reverse=True)))


def as_grid(grid) -> TimeGrid:
    return grid if isinstance(grid, TimeGrid) else TimeGrid(grid)


def monomial_powers(points, basis: ExponentSet) -> np.ndarray:
    """``out[i, j] = points[i] ** basis[j]`` with ``0 ** 0 == 1``.

    All collocation matrices go through this one function so that their
    entries agree bit for bit.
    """
    pts = np.asarray(points, dtype=np.float64).ravel()
    exps = np.asarray(basis.exponents, dtype=np.float64)
    return np.power(pts[:, None], exps[None, :])


def design_matrix(basis: ExponentSet, grid) -> DesignMatrix:
    grid = as_grid(grid)
    values = monomial_powers(grid.points, basis)
    values.flags.writeable = False
    return DesignMatrix(values=values, grid=grid, basis=basis)


def generalized_vandermonde(basis: ExponentSet, points: Sequence[float]) -> np.ndarray:
    """Square matrix with rows indexed by exponents and columns by points.

    Entry ``(i, j)`` is ``points[j] ** basis[i]``.
    """
    pts = np.asarray(points, dtype=np.float64).ravel()
    if pts.size != len(basis):
        raise ValueError(
            f"need {len(basis)} points for a {len(basis)}-term basis, got {pts.size}")
    if np.unique(pts).size != pts.size:
        raise ValueError("coincident evaluation points")
    return monomial_powers(pts, basis).T.copy()


def vandermonde_det(points: Sequence[float]) -> float:
    """``prod_{i<j} (t_i - t_j)``; zero exactly when two points coincide."""
    pts = [float(t) for t in np.asarray(points, dtype=np.float64).ravel()]
    out = 1.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            out *= pts[i] - pts[j]
    return out


def determinant(matrix) -> float:
    """Cofactor expansion for k <= 4, partial-pivot LU above."""
    return float(kernels.det(matrix))
