"""Least-squares prototypes for groups of signals on a shared grid.

Fitting one polynomial to ``l`` signals at once reduces to fitting it to
their pointwise mean: the stacked normal equations are ``l`` times the
centroid ones. Since the Gram matrix depends only on basis and grid, it is
factored once (:class:`SolverHandle`) and reused for every membership change.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import ExponentSet, TimeGrid, as_grid, design_matrix, monomial_powers
from .schur import DEFAULT_TOL, InvertibilityReport, is_gram_invertible


class NumericalError(ArithmeticError):
    """A solve produced non-finite numbers."""


@dataclass(frozen=True, eq=False)
class SignalSet:
    """``N x l`` samples; column ``j`` is signal ``j`` on ``grid``."""

    samples: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        grid = as_grid(self.grid)
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] != len(grid):
            raise ValueError(
                f"samples must have {len(grid)} rows (one per grid point), got shape {samples.shape}")
        if samples.shape[1] < 1:
            raise ValueError("a signal set needs at least one signal")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "grid", grid)

    def __len__(self) -> int:
        return self.samples.shape[1]

    def subset(self, columns) -> "SignalSet":
        return SignalSet(self.samples[:, list(columns)], self.grid)


@dataclass(frozen=True, eq=False)
class Centroid:
    values: np.ndarray
    weight: int

    def __post_init__(self):
        if int(self.weight) < 1:
            raise ValueError("empty group")
        values = np.array(self.values, dtype=np.float64).ravel()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weight", int(self.weight))


@dataclass(frozen=True, eq=False)
class Prototype:
    coefficients: np.ndarray
    basis: ExponentSet

    def __post_init__(self):
        coefs = np.array(self.coefficients, dtype=np.float64).ravel()
        if coefs.size != len(self.basis):
            raise ValueError("one coefficient per basis exponent required")
        if not np.all(np.isfinite(coefs)):
            raise NumericalError("prototype coefficients are not finite")
        coefs.flags.writeable = False
        object.__setattr__(self, "coefficients", coefs)


class SolverMode(enum.Enum):
    INVERSE = "inverse"
    SVD = "svd"


@dataclass(frozen=True, eq=False)
class SolverHandle:
    """Factored Gram matrix for one (basis, grid) pair.

    ``inverse`` holds ``(B0^T B0)^-1`` and ``gram_ext`` the Gram matrix in
    ``long double`` for the refinement step; in SVD mode ``svd`` holds
    ``(U, s, Vt)`` and singular values at or below ``cutoff`` are dropped.
    """

    mode: SolverMode
    basis: ExponentSet
    gram_hash: str
    design: np.ndarray
    inverse: Optional[np.ndarray] = None
    svd: Optional[tuple[np.ndarray, np.ndarray, np.ndarray]] = None
    cutoff: float = 0.0
    condition: float = np.inf
    report: Optional[InvertibilityReport] = None
    gram_ext: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        if self.mode is SolverMode.INVERSE:
            return len(self.basis)
        return int(np.sum(self.svd[1] > self.cutoff))


def gram_fingerprint(basis: ExponentSet, grid) -> str:
    grid = as_grid(grid)
    h = hashlib.sha256(str(basis).encode())
    h.update(b"|")
    h.update(grid.points.tobytes())
    return h.hexdigest()


def _columns(signals, n: int) -> np.ndarray:
    if signals is None:
        return np.zeros((n, 0))
    arr = signals.samples if isinstance(signals, SignalSet) else np.asarray(signals, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != n:
        raise ValueError(f"signals must have {n} samples, got {arr.shape[0]}")
    return arr


def centroid(signals: SignalSet) -> Centroid:
    return Centroid(signals.samples.mean(axis=1), len(signals))


def update_centroid(old: Centroid, added=None, removed=None) -> Centroid:
    """Centroid after ``added`` signals join and ``removed`` ones leave.

    Computes ``(l*S_old + sum(added) - sum(removed)) / (l + l_a - l_r)`` as
    ``S_old + (sum(added) - sum(removed) - (l_a - l_r)*S_old) / l_new`` so
    that a net-zero change returns ``old.values`` bit for bit.

    Raises:
        ValueError: "empty group" if no signals would remain.
    """
    n = old.values.size
    add = _columns(added, n)
    rem = _columns(removed, n)
    weight = old.weight + add.shape[1] - rem.shape[1]
    if weight < 1:
        raise ValueError("empty group")
    delta = add.sum(axis=1) - rem.sum(axis=1) - (add.shape[1] - rem.shape[1]) * old.values
    return Centroid(old.values + delta / weight, weight)


def assemble_normal_system(basis: ExponentSet, grid, c: Centroid) -> tuple[np.ndarray, np.ndarray]:
    b0 = design_matrix(basis, grid).values
    return b0.T @ b0, b0.T @ c.values


def precompute_solver(basis: ExponentSet, grid, tol: float = DEFAULT_TOL,
                      report: Optional[InvertibilityReport] = None) -> SolverHandle:
    """Factor the Gram matrix once for reuse across right-hand sides.

    Inverse mode needs a positive invertibility verdict; otherwise the SVD
    of the Gram matrix is kept with cutoff ``tol * sigma_max``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = as_grid(grid)
    b0 = design_matrix(basis, grid).values
    gram = b0.T @ b0
    if report is None:
        report = is_gram_invertible(basis, grid, tol)
    common = dict(basis=basis, gram_hash=gram_fingerprint(basis, grid), design=b0, report=report)
    if report.invertible:
        inverse = np.linalg.inv(gram)
        if np.all(np.isfinite(inverse)):
            ext = b0.astype(np.longdouble)
            return SolverHandle(SolverMode.INVERSE, inverse=inverse, gram_ext=ext.T @ ext,
                                condition=float(np.linalg.cond(gram)), **common)
    u, s, vt = np.linalg.svd(gram)
    cutoff = tol * float(s[0])
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    return SolverHandle(SolverMode.SVD, svd=(u, s, vt), cutoff=cutoff, condition=cond, **common)


def solve_with_handle(h: SolverHandle, c: Centroid, grid=None) -> Prototype:
    """Prototype coefficients for centroid ``c`` from a precomputed handle.

    In inverse mode the product ``inverse @ rhs`` is followed by one step of
    iterative refinement with the residual formed in ``long double``; this
    keeps ill-conditioned Gram matrices (condition up to about 1e10) accurate
    to roughly 1e-10 instead of ``condition * eps``.

    Passing ``grid`` additionally checks that it is the grid ``h`` was built
    for.
    """
    if c.values.size != h.design.shape[0]:
        raise ValueError("handle/grid mismatch")
    if grid is not None and gram_fingerprint(h.basis, grid) != h.gram_hash:
        raise ValueError("handle/grid mismatch")
    rhs = h.design.T @ c.values
    if h.mode is SolverMode.INVERSE:
        x = h.inverse @ rhs
        if np.all(np.isfinite(x)):
            ext = h.design.astype(np.longdouble).T @ c.values.astype(np.longdouble)
            resid = ext - h.gram_ext @ x.astype(np.longdouble)
            x = x + h.inverse @ resid.astype(np.float64)
    else:
        u, s, vt = h.svd
        keep = s > h.cutoff
        s_inv = np.zeros_like(s)
        s_inv[keep] = 1.0 / s[keep]
        x = vt.T @ (s_inv * (u.T @ rhs))
    if not np.all(np.isfinite(x)):
        raise NumericalError("non-finite prototype coefficients")
    return Prototype(x, h.basis)


def fit_prototype(basis: ExponentSet, signals: SignalSet, tol: float = DEFAULT_TOL) -> Prototype:
    """Least-squares prototype minimizing the summed squared deviation from
    every signal in the group."""
    handle = precompute_solver(basis, signals.grid, tol)
    return solve_with_handle(handle, centroid(signals))


def evaluate_prototype(p: Prototype, t):
    """``sum_j coefficients[j] * t ** basis[j]``; scalar in, scalar out."""
    values = monomial_powers(np.atleast_1d(t), p.basis) @ p.coefficients
    return float(values[0]) if np.ndim(t) == 0 else values.reshape(np.shape(t))


def prototype_on_grid(p: Prototype, grid) -> np.ndarray:
    return design_matrix(p.basis, grid).values @ p.coefficients


def group_objective(p: Prototype, signals: SignalSet) -> float:
    """Sum over grid points and signals of squared residuals."""
    resid = signals.samples - prototype_on_grid(p, signals.grid)[:, None]
    return float(np.sum(resid * resid))
