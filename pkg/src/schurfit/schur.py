"""Schur functions at numeric points and the Gram-matrix invertibility test.

Two evaluators are provided and deliberately share no code path:

* :func:`schur_bialternant` divides a generalized Vandermonde determinant by
  the classical one.
* :func:`schur_combinatorial` sums monomials over semistandard Young
  tableaux. Tableaux are counted as chains of horizontal strips, one strip
  per variable, which lets the compiled kernel run a flat loop.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .basis import (
    ExponentSet,
    as_grid,
    design_matrix,
    vandermonde_det,
)

MAX_TABLEAU_WEIGHT = 20
CONDITION_THRESHOLD = 1e-10
DEFAULT_TOL = 1e-10
DEFAULT_MAX_SUBSETS = 10_000


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing nonnegative parts; trailing zeros fix the arity."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if not parts:
            raise ValueError("partition needs at least one part")
        if any(x < 0 for x in parts):
            raise ValueError("partition parts must be nonnegative")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError("partition parts must be weakly decreasing")
        object.__setattr__(self, "parts", parts)

    def __len__(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)


class SchurMethod(enum.Enum):
    BIALTERNANT = "bialternant"
    COMBINATORIAL = "combinatorial"


@dataclass(frozen=True)
class SchurValue:
    value: float
    method: SchurMethod
    condition_flag: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class InvertibilityReport:
    invertible: bool
    certificate: Optional[tuple[int, ...]] = None
    schur_value: Optional[float] = None
    # True/False when the subset search alone settled the question, None if
    # the search was capped before finishing.
    schur_verdict: Optional[bool] = None
    decided_by: str = "schur"
    subsets_checked: int = 0


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(tuple(p))


def partition_from_exponents(basis: ExponentSet) -> Partition:
    k = len(basis)
    return Partition(tuple(m - (k - 1 - i) for i, m in enumerate(basis.exponents)))


def exponents_from_partition(p) -> ExponentSet:
    p = _as_partition(p)
    k = len(p)
    return ExponentSet(tuple(lam + (k - 1 - i) for i, lam in enumerate(p.parts)))


def _check_arity(p: Partition, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).ravel()
    if pts.size != len(p):
        raise ValueError(f"partition has {len(p)} parts but {pts.size} points were given")
    return pts


def _sub_partitions(parts: tuple[int, ...]):
    if not parts:
        yield ()
        return
    for rest in _sub_partitions(parts[1:]):
        lo = rest[0] if rest else 0
        for first in range(lo, parts[0] + 1):
            yield (first,) + rest


@lru_cache(maxsize=512)
def _strip_graph(parts: tuple[int, ...]):
    """Horizontal-strip transitions between all partitions inside ``parts``.

    Returns ``(src, dst, deg, n_nodes, target)`` with node 0 the empty
    partition. ``nu -> mu`` is a transition when
    ``mu[i] >= nu[i] >= mu[i+1]``; its degree is ``|mu| - |nu|``.
    """
    nodes = sorted(_sub_partitions(parts), key=lambda q: (sum(q), q))
    index = {q: i for i, q in enumerate(nodes)}
    src, dst, deg = [], [], []
    k = len(parts)
    for mu in nodes:
        ranges = [range(mu[i + 1] if i + 1 < k else 0, mu[i] + 1) for i in range(k)]
        for nu in itertools.product(*ranges):
            src.append(index[nu])
            dst.append(index[mu])
            deg.append(sum(mu) - sum(nu))
    as32 = lambda v: np.asarray(v, dtype=np.int32)
    return as32(src), as32(dst), as32(deg), len(nodes), index[parts]


def schur_combinatorial(p, points: Sequence[float]) -> SchurValue:
    """Sum of ``prod(points[entry])`` over semistandard tableaux of shape ``p``.

    Polynomial in the points, so it is defined at coincident points too.

    Raises:
        ValueError: arity mismatch, or ``|p|`` above the enumeration guard.
    """
    p = _as_partition(p)
    pts = _check_arity(p, points)
    if p.weight > MAX_TABLEAU_WEIGHT:
        raise ValueError("partition too large for combinatorial evaluation")
    src, dst, deg, n_nodes, target = _strip_graph(p.parts)
    value = kernels.strip_sum(src, dst, deg, n_nodes, target, pts, p.parts[0])
    return SchurValue(float(value), SchurMethod.COMBINATORIAL, False)


def schur_bialternant(p, points: Sequence[float]) -> SchurValue:
    """``det(G) / det(V)`` for the generalized Vandermonde ``G`` of ``p``.

    Both determinants are formed in extended precision (``long double``):
    clustered points make them nearly cancel, and double precision alone
    loses too many digits. When the Vandermonde denominator is tiny compared
    to its own entry scale the quotient is not trusted at all and the
    combinatorial value is returned with ``condition_flag`` set.
    """
    p = _as_partition(p)
    pts = _check_arity(p, points)
    if np.unique(pts).size != pts.size:
        raise ValueError("coincident evaluation points")
    den = vandermonde_det(pts)
    k = pts.size
    scale = float(np.max(np.abs(pts))) ** (k * (k - 1) // 2) if k > 1 else 1.0
    if abs(den) < CONDITION_THRESHOLD * scale:
        if p.weight > MAX_TABLEAU_WEIGHT:
            raise ArithmeticError(
                "evaluation points nearly coincide and the partition is too "
                "large for combinatorial evaluation")
        fallback = schur_combinatorial(p, pts)
        return SchurValue(fallback.value, SchurMethod.COMBINATORIAL, True)
    exps = np.asarray(exponents_from_partition(p).exponents, dtype=np.float64)
    return SchurValue(float(kernels.bialternant(exps, pts)), SchurMethod.BIALTERNANT, False)


def tableau_count(p) -> int:
    """Number of semistandard tableaux of shape ``p`` with entries ``1..len(p)``
    (hook-content formula)."""
    p = _as_partition(p)
    k = len(p)
    conj = [sum(1 for lam in p.parts if lam > j) for j in range(p.parts[0])]
    num, den = 1, 1
    for i, lam in enumerate(p.parts):
        for j in range(lam):
            num *= k + j - i
            den *= (lam - j - 1) + (conj[j] - i - 1) + 1
    return num // den


def schur_scale(p, points: Sequence[float]) -> float:
    """Magnitude reference for ``s_p(points)``: ``s_p(|points|)``.

    Above the enumeration guard the bound ``#tableaux * max|t| ** |p|`` is
    used instead.
    """
    p = _as_partition(p)
    pts = np.abs(_check_arity(p, points))
    if p.weight <= MAX_TABLEAU_WEIGHT:
        return schur_combinatorial(p, pts).value
    return float(tableau_count(p)) * float(np.max(pts)) ** p.weight


def _subset_candidates(points: np.ndarray, k: int, max_subsets: int):
    seen = set()
    positive = np.flatnonzero(points > 0)
    if positive.size >= k:
        first = tuple(int(i) for i in positive[:k])
        seen.add(first)
        yield first
    for combo in itertools.combinations(range(points.size), k):
        if len(seen) >= max_subsets:
            return
        if combo in seen:
            continue
        seen.add(combo)
        yield combo


def _certify(lam: Partition, points: np.ndarray, subset, tol: float):
    pts = points[list(subset)]
    try:
        value = schur_bialternant(lam, pts).value
    except ArithmeticError:
        return None
    if abs(value) > tol * max(1.0, schur_scale(lam, pts)):
        return value
    return None


def is_gram_invertible(basis: ExponentSet, grid, tol: float = DEFAULT_TOL,
                       max_subsets: int = DEFAULT_MAX_SUBSETS,
                       workers: int = 1) -> InvertibilityReport:
    """Decide whether ``B0^T B0`` is nonsingular for ``basis`` on ``grid``.

    The Gram matrix is nonsingular iff some k x k minor of the design matrix
    is nonzero, and every such minor factors as ``s_lambda(subset) *
    vandermonde_det(subset)``. Subsets are searched (all-positive subset
    first, then lexicographic) for a Schur value above
    ``tol * max(1, schur_scale)``. If the search ends without a certificate,
    an SVD rank check of the design matrix gives the final verdict.

    With ``workers > 1`` subsets are scored concurrently in chunks; the
    certificate is still the first one in search order.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = as_grid(grid)
    k = len(basis)
    if len(grid) < k:
        raise ValueError("underdetermined basis")
    lam = partition_from_exponents(basis)
    points = grid.points
    candidates = _subset_candidates(points, k, max_subsets)

    checked = 0
    chunk = max(1, 64 * workers)
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            batch = list(itertools.islice(candidates, chunk))
            if not batch:
                break
            if pool is None:
                for subset in batch:
                    checked += 1
                    value = _certify(lam, points, subset, tol)
                    if value is not None:
                        return InvertibilityReport(True, subset, value, True, "schur", checked)
            else:
                results = list(pool.map(lambda s: _certify(lam, points, s, tol), batch))
                for subset, value in zip(batch, results):
                    checked += 1
                    if value is not None:
                        return InvertibilityReport(True, subset, value, True, "schur", checked)
    finally:
        if pool is not None:
            pool.shutdown()

    exhausted = checked >= math.comb(len(grid), k)
    rank = int(np.linalg.matrix_rank(design_matrix(basis, grid).values))
    return InvertibilityReport(
        invertible=rank == k,
        schur_verdict=False if exhausted else None,
        decided_by="svd",
        subsets_checked=checked,
    )
