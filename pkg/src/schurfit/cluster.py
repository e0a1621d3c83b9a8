"""k-means over curves with least-squares polynomial prototypes as centers."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .basis import ExponentSet
from .lsq import (
    Centroid,
    Prototype,
    SignalSet,
    SolverHandle,
    centroid,
    group_objective,
    precompute_solver,
    prototype_on_grid,
    solve_with_handle,
    update_centroid,
)
from .schur import DEFAULT_TOL


@dataclass(frozen=True, eq=False)
class ClusterState:
    """Cluster labels are 0-based; ``assignments[j]`` is the cluster of signal j."""

    assignments: np.ndarray
    prototypes: tuple[Prototype, ...]
    centroids: tuple[Centroid, ...]
    objective: float
    iteration: int = 0
    cluster_objectives: tuple[float, ...] = ()
    history: tuple[float, ...] = ()
    reassignments: tuple[int, ...] = ()
    stop_reason: str = ""

    @property
    def n_clusters(self) -> int:
        return len(self.prototypes)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)


@dataclass(frozen=True)
class KMeansConfig:
    max_iter: int = 100
    seed: int = 0
    tol: float = 1e-9
    solver_tol: float = DEFAULT_TOL
    workers: int = 1


def distance_table(signals: SignalSet, prototypes: Sequence[Prototype]) -> np.ndarray:
    """``l x K`` table of per-signal squared residuals against each prototype."""
    curves = np.stack([prototype_on_grid(p, signals.grid) for p in prototypes], axis=1)
    diff = signals.samples[:, :, None] - curves[:, None, :]
    return np.einsum("ijk,ijk->jk", diff, diff)


def assign_signals(signals: SignalSet, prototypes: Sequence[Prototype]) -> np.ndarray:
    """Nearest prototype per signal; ties go to the lowest cluster index."""
    if len(prototypes) < 1:
        raise ValueError("need at least one prototype")
    return np.argmin(distance_table(signals, prototypes), axis=1)


def canonical_order(signals: SignalSet) -> np.ndarray:
    """Signal indices sorted lexicographically by their samples.

    Randomness and tie-breaks act on this order, so relabelling the columns
    of ``signals`` does not change which curves get picked.
    """
    return np.lexsort(signals.samples[::-1])


def _fit_cluster(signals, members, handle):
    c = centroid(signals.subset(members))
    p = solve_with_handle(handle, c)
    return c, p, group_objective(p, signals.subset(members))


def state_from_assignments(signals: SignalSet, assignments, n_clusters: int,
                           handle: SolverHandle, workers: int = 1, **extra) -> ClusterState:
    """Build a state from scratch: centroid, prototype and objective per cluster."""
    assignments = np.asarray(assignments, dtype=np.int64).copy()
    groups = [np.flatnonzero(assignments == c) for c in range(n_clusters)]
    if any(g.size == 0 for g in groups):
        raise ValueError("cluster emptied")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(lambda g: _fit_cluster(signals, g, handle), groups))
    else:
        fits = [_fit_cluster(signals, g, handle) for g in groups]
    objs = tuple(f[2] for f in fits)
    assignments.flags.writeable = False
    return ClusterState(
        assignments=assignments,
        prototypes=tuple(f[1] for f in fits),
        centroids=tuple(f[0] for f in fits),
        objective=float(sum(objs)),
        cluster_objectives=objs,
        **extra,
    )


def _repair_empty(assign: np.ndarray, dist: np.ndarray, n_clusters: int, order: np.ndarray):
    """Move the worst-fitted signal into each empty cluster (donor keeps >= 1)."""
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    for c in range(n_clusters):
        counts = np.bincount(assign, minlength=n_clusters)
        if counts[c] > 0:
            continue
        donors = np.flatnonzero(counts[assign] >= 2)
        resid = dist[donors, assign[donors]]
        worst = donors[resid == resid.max()]
        assign[worst[np.argmin(rank[worst])]] = c
    return assign


def kmeans_curves(signals: SignalSet, basis: ExponentSet, n_clusters: int,
                  config: Optional[KMeansConfig] = None,
                  init: Union[None, ClusterState, Sequence[Prototype]] = None,
                  handle: Optional[SolverHandle] = None) -> ClusterState:
    """Alternate nearest-prototype assignment and per-cluster refits.

    Initial prototypes are fitted to ``n_clusters`` distinct signals drawn
    with ``config.seed`` unless ``init`` supplies prototypes or a previous
    state. Iteration stops when assignments repeat, the relative objective
    improvement drops below ``config.tol``, or after ``config.max_iter``
    rounds. ``state.history`` holds the objective after every round.
    """
    config = config or KMeansConfig()
    l = len(signals)
    if n_clusters < 1:
        raise ValueError("need at least one cluster")
    if n_clusters > l:
        raise ValueError(f"cannot form {n_clusters} clusters from {l} signals")
    if handle is None:
        handle = precompute_solver(basis, signals.grid, config.solver_tol)
    order = canonical_order(signals)

    assignments = None
    if init is None:
        rng = np.random.default_rng(config.seed)
        picks = order[np.sort(rng.choice(l, size=n_clusters, replace=False))]
        prototypes = [solve_with_handle(handle, Centroid(signals.samples[:, j], 1)) for j in picks]
    elif isinstance(init, ClusterState):
        prototypes = list(init.prototypes)
        assignments = np.asarray(init.assignments)
    else:
        prototypes = list(init)
    if len(prototypes) != n_clusters:
        raise ValueError("initial prototypes do not match the number of clusters")

    state = None
    history, moved = [], []
    stop = "max_iter"
    for _ in range(config.max_iter):
        dist = distance_table(signals, prototypes)
        new = _repair_empty(np.argmin(dist, axis=1), dist, n_clusters, order)
        if assignments is not None and np.array_equal(new, assignments):
            moved.append(0)
            stop = "assignments"
            break
        moved.append(l if assignments is None else int(np.sum(new != assignments)))
        assignments = new
        state = state_from_assignments(signals, assignments, n_clusters, handle, config.workers)
        prototypes = list(state.prototypes)
        history.append(state.objective)
        if len(history) > 1 and history[-2] - history[-1] <= config.tol * history[-2]:
            stop = "objective"
            break

    if state is None:
        if isinstance(init, ClusterState):
            state = init
        else:
            state = state_from_assignments(signals, assignments, n_clusters, handle, config.workers)
    return replace(state, iteration=len(history), history=tuple(history),
                   reassignments=tuple(moved), stop_reason=stop)


def _as_bank(handle_bank, n_clusters: int) -> list[SolverHandle]:
    if isinstance(handle_bank, SolverHandle):
        return [handle_bank] * n_clusters
    bank = list(handle_bank)
    if len(bank) != n_clusters:
        raise ValueError("need one solver handle per cluster")
    return bank


def apply_membership_moves(state: ClusterState, signals: SignalSet, moves,
                           handle_bank) -> ClusterState:
    """Apply ``(signal, from_cluster, to_cluster)`` moves incrementally.

    Only clusters whose membership actually changes are touched: their
    centroids go through :func:`update_centroid` and their prototypes are
    re-solved with the existing handles. The input state is never modified.

    Raises:
        ValueError: invalid move, or "cluster emptied" if a cluster would end
            up with no signals.
    """
    moves = [tuple(int(v) for v in m) for m in moves]
    if not moves:
        return state
    K = state.n_clusters
    bank = _as_bank(handle_bank, K)
    if len(state.assignments) != len(signals):
        raise ValueError("state and signal set disagree on the number of signals")

    assign = np.array(state.assignments, dtype=np.int64)
    for idx, src, dst in moves:
        if not 0 <= idx < assign.size:
            raise ValueError(f"signal index {idx} out of range")
        if not (0 <= src < K and 0 <= dst < K):
            raise ValueError(f"cluster index out of range in move {(idx, src, dst)}")
        if src == dst:
            raise ValueError(f"move {(idx, src, dst)} does not change the cluster")
        if assign[idx] != src:
            raise ValueError(f"signal {idx} is in cluster {assign[idx]}, not {src}")
        assign[idx] = dst
    if np.any(np.bincount(assign, minlength=K) == 0):
        raise ValueError("cluster emptied")

    old = np.asarray(state.assignments)
    centroids = list(state.centroids)
    prototypes = list(state.prototypes)
    objs = list(state.cluster_objectives)
    for c in range(K):
        was, now = old == c, assign == c
        added = np.flatnonzero(now & ~was)
        removed = np.flatnonzero(was & ~now)
        if added.size == 0 and removed.size == 0:
            continue
        centroids[c] = update_centroid(centroids[c], signals.samples[:, added],
                                       signals.samples[:, removed])
        prototypes[c] = solve_with_handle(bank[c], centroids[c])
        objs[c] = group_objective(prototypes[c], signals.subset(np.flatnonzero(now)))
    assign.flags.writeable = False
    return replace(state, assignments=assign, prototypes=tuple(prototypes),
                   centroids=tuple(centroids), cluster_objectives=tuple(objs),
                   objective=float(sum(objs)))
