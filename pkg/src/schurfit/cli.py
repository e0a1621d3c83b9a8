"""Command-line front end: ``schurfit {check-basis,fit,cluster,update}``.

Exit codes: 0 success, 2 usage / input errors, 3 singular basis
(``check-basis``), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .basis import ExponentSet, TimeGrid, make_exponent_set
from .cluster import (
    ClusterState,
    KMeansConfig,
    apply_membership_moves,
    kmeans_curves,
    state_from_assignments,
)
from .lsq import (
    Centroid,
    NumericalError,
    Prototype,
    SignalSet,
    gram_fingerprint,
    precompute_solver,
)
from .schur import DEFAULT_TOL, is_gram_invertible, partition_from_exponents

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SINGULAR = 3
EXIT_NUMERICAL = 4

STATE_FORMAT = "schurfit-state/1"


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    input: Optional[Path] = None
    basis: Optional[ExponentSet] = None
    k: int = 2
    max_iter: int = 100
    seed: int = 0
    tol: float = DEFAULT_TOL
    kmeans_tol: float = 1e-9
    output_dir: Optional[Path] = None
    moves: Optional[Path] = None
    state: Optional[Path] = None
    verify_batch: bool = False
    threads: int = 1


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(n, row) for n, row in enumerate(csv.reader(fh), start=1)
                    if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from exc
    if rows and not _is_number(rows[0][1][0].strip()):
        rows = rows[1:]
    return rows


def load_signals_csv(path) -> tuple[TimeGrid, SignalSet]:
    """Read ``time, signal_1, ..., signal_l`` rows (optional header).

    Rows are sorted by time. Ragged rows, non-numeric cells and repeated
    times are rejected with the offending row or value in the message.
    """
    rows = _read_rows(path)
    if not rows:
        raise CliError(f"{path}: no data rows")
    width = len(rows[0][1])
    if width < 2:
        raise CliError(f"{path}: need a time column and at least one signal column")
    data = []
    for n, row in rows:
        if len(row) != width:
            raise CliError(f"{path}: row {n} has {len(row)} fields, expected {width}")
        try:
            data.append([float(cell) for cell in row])
        except ValueError:
            raise CliError(f"{path}: row {n} has a non-numeric value") from None
    arr = np.array(data, dtype=np.float64)
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    times = arr[:, 0]
    if not np.all(np.isfinite(times)):
        raise CliError(f"{path}: non-finite time value")
    dup = times[1:][times[1:] == times[:-1]]
    if dup.size:
        raise CliError(f"duplicate time {float(dup[0])!r}")
    grid = TimeGrid(times)
    return grid, SignalSet(arr[:, 1:], grid)


def load_moves_csv(path) -> list[tuple[int, int, int]]:
    moves = []
    for n, row in _read_rows(path):
        if len(row) != 3:
            raise CliError(f"{path}: row {n} must be signal_index,from,to")
        try:
            moves.append(tuple(int(cell) for cell in row))
        except ValueError:
            raise CliError(f"{path}: row {n} has a non-integer value") from None
    return moves


def parse_basis(text: str) -> ExponentSet:
    try:
        return make_exponent_set(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise CliError(f"bad --basis {text!r}: {exc}") from None


# -- output ------------------------------------------------------------------

def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2) + "\n")


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def state_to_json(state: ClusterState, basis: ExponentSet, grid: TimeGrid) -> dict:
    return {
        "format": STATE_FORMAT,
        "basis": list(basis.exponents),
        "grid_fingerprint": gram_fingerprint(basis, grid),
        "n_points": len(grid),
        "n_clusters": state.n_clusters,
        "iteration": state.iteration,
        "objective": state.objective,
        "assignments": [int(a) for a in state.assignments],
        "clusters": [
            {
                "weight": c.weight,
                "objective": obj,
                "coefficients": [float(x) for x in p.coefficients],
                "centroid": [float(x) for x in c.values],
            }
            for p, c, obj in zip(state.prototypes, state.centroids, state.cluster_objectives)
        ],
    }


def state_from_json(doc: dict) -> tuple[ClusterState, ExponentSet, str]:
    if doc.get("format") != STATE_FORMAT:
        raise CliError("state file has an unknown format")
    try:
        basis = ExponentSet(tuple(doc["basis"]))
        clusters = doc["clusters"]
        state = ClusterState(
            assignments=np.array(doc["assignments"], dtype=np.int64),
            prototypes=tuple(Prototype(c["coefficients"], basis) for c in clusters),
            centroids=tuple(Centroid(c["centroid"], c["weight"]) for c in clusters),
            objective=float(doc["objective"]),
            iteration=int(doc["iteration"]),
            cluster_objectives=tuple(float(c["objective"]) for c in clusters),
        )
        return state, basis, doc["grid_fingerprint"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"malformed state file: {exc}") from None


def write_outputs(out: Path, state: ClusterState, basis: ExponentSet, grid: TimeGrid,
                  summary: dict):
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "prototypes.csv", ["cluster", "exponent", "coefficient"],
               [[c, m, repr(float(x))]
                for c, p in enumerate(state.prototypes)
                for m, x in zip(basis.exponents, p.coefficients)])
    _write_csv(out / "assignments.csv", ["signal_index", "cluster"],
               [[j, int(a)] for j, a in enumerate(state.assignments)])
    _write_json(out / "state.json", state_to_json(state, basis, grid))
    _write_json(out / "summary.json", summary)


# -- commands ----------------------------------------------------------------

def cmd_check_basis(cfg: RunConfig) -> int:
    grid, _ = load_signals_csv(cfg.input)
    basis = cfg.basis
    report = {
        "basis": list(basis.exponents),
        "partition": list(partition_from_exponents(basis).parts),
        "n_points": len(grid),
    }
    if len(grid) < len(basis):
        report.update(verdict="singular", invertible=False, reason="underdetermined basis",
                      certificate=None, certificate_times=None, schur_value=None,
                      decided_by="count", solver_mode="svd")
    else:
        rep = is_gram_invertible(basis, grid, cfg.tol, workers=cfg.threads)
        handle = precompute_solver(basis, grid, cfg.tol, report=rep)
        cert = list(rep.certificate) if rep.certificate is not None else None
        report.update(
            verdict="invertible" if rep.invertible else "singular",
            invertible=rep.invertible,
            certificate=cert,
            certificate_times=[float(grid.points[i]) for i in cert] if cert else None,
            schur_value=rep.schur_value,
            decided_by=rep.decided_by,
            subsets_checked=rep.subsets_checked,
            solver_mode=handle.mode.value,
        )
    text = json.dumps(report, indent=2) + "\n"
    sys.stdout.write(text)
    if cfg.output_dir is not None:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        _write_text(cfg.output_dir / "check_basis.json", text)
    return EXIT_OK if report["invertible"] else EXIT_SINGULAR


def _require_output(cfg: RunConfig) -> Path:
    if cfg.output_dir is None:
        raise CliError("--output-dir is required")
    return cfg.output_dir


def cmd_fit(cfg: RunConfig) -> int:
    out = _require_output(cfg)
    grid, signals = load_signals_csv(cfg.input)
    handle = precompute_solver(cfg.basis, grid, cfg.tol)
    state = state_from_assignments(signals, np.zeros(len(signals), dtype=np.int64), 1, handle)
    summary = {
        "command": "fit",
        "basis": list(cfg.basis.exponents),
        "n_signals": len(signals),
        "n_points": len(grid),
        "objective": state.objective,
        "solver_mode": handle.mode.value,
    }
    write_outputs(out, state, cfg.basis, grid, summary)
    return EXIT_OK


def cmd_cluster(cfg: RunConfig) -> int:
    out = _require_output(cfg)
    grid, signals = load_signals_csv(cfg.input)
    handle = precompute_solver(cfg.basis, grid, cfg.tol)
    kcfg = KMeansConfig(max_iter=cfg.max_iter, seed=cfg.seed, tol=cfg.kmeans_tol,
                        solver_tol=cfg.tol, workers=cfg.threads)
    try:
        state = kmeans_curves(signals, cfg.basis, cfg.k, kcfg, handle=handle)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    summary = {
        "command": "cluster",
        "basis": list(cfg.basis.exponents),
        "k": cfg.k,
        "seed": cfg.seed,
        "n_signals": len(signals),
        "n_points": len(grid),
        "objective": state.objective,
        "iterations": state.iteration,
        "objective_history": list(state.history),
        "stop_reason": state.stop_reason,
        "solver_mode": handle.mode.value,
    }
    write_outputs(out, state, cfg.basis, grid, summary)
    return EXIT_OK


def cmd_update(cfg: RunConfig) -> int:
    out = _require_output(cfg)
    if cfg.state is None or cfg.moves is None:
        raise CliError("update needs --state and --moves")
    grid, signals = load_signals_csv(cfg.input)
    try:
        with open(cfg.state, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {cfg.state}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed state file: {exc}") from None
    state, basis, fingerprint = state_from_json(doc)
    if cfg.basis is not None and cfg.basis != basis:
        raise CliError(f"--basis {cfg.basis} does not match the state basis {basis}")
    if fingerprint != gram_fingerprint(basis, grid):
        raise CliError("input grid does not match the grid recorded in the state file")
    if len(state.assignments) != len(signals):
        raise CliError("state and input disagree on the number of signals")
    moves = load_moves_csv(cfg.moves)
    handle = precompute_solver(basis, grid, cfg.tol)

    t0 = time.perf_counter()
    try:
        new_state = apply_membership_moves(state, signals, moves, handle)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    timing = {"incremental_seconds": time.perf_counter() - t0}

    summary = {
        "command": "update",
        "basis": list(basis.exponents),
        "n_moves": len(moves),
        "n_signals": len(signals),
        "objective": new_state.objective,
        "solver_mode": handle.mode.value,
    }
    if cfg.verify_batch:
        t0 = time.perf_counter()
        batch = state_from_assignments(signals, new_state.assignments, new_state.n_clusters,
                                       handle, cfg.threads)
        timing["batch_seconds"] = time.perf_counter() - t0
        coef_dev = max(float(np.max(np.abs(a.coefficients - b.coefficients)))
                       for a, b in zip(new_state.prototypes, batch.prototypes))
        summary["batch_check"] = {
            "max_coefficient_deviation": coef_dev,
            "objective_deviation": abs(new_state.objective - batch.objective),
        }
    write_outputs(out, new_state, basis, grid, summary)
    _write_json(out / "timing.json", timing)
    return EXIT_OK


COMMANDS = {
    "check-basis": cmd_check_basis,
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "update": cmd_update,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schurfit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, basis_required=True):
        p.add_argument("--input", type=Path, required=True, help="signal CSV: time, s1, s2, ...")
        p.add_argument("--basis", required=basis_required, help='monomial exponents, e.g. "2,0"')
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="Schur threshold and SVD rank cutoff (default %(default)g)")
        p.add_argument("--output-dir", type=Path)
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    common(sub.add_parser("check-basis", help="decide Gram-matrix invertibility"))
    common(sub.add_parser("fit", help="fit one prototype to all signals"))
    p = sub.add_parser("cluster", help="k-means over curves")
    common(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--kmeans-tol", type=float, default=1e-9,
                   help="relative objective improvement that ends the iteration")
    p = sub.add_parser("update", help="apply membership moves to a saved state")
    common(p, basis_required=False)
    p.add_argument("--state", type=Path, required=True)
    p.add_argument("--moves", type=Path, required=True, help="CSV: signal_index,from,to")
    p.add_argument("--verify-batch", action="store_true",
                   help="also rebuild from scratch and report the deviation and timing")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, input=args.input, tol=args.tol,
                    output_dir=args.output_dir, threads=max(1, args.threads))
    if cfg.tol <= 0:
        raise CliError("--tol must be positive")
    if args.basis is not None:
        cfg.basis = parse_basis(args.basis)
    if args.command == "cluster":
        cfg.k, cfg.seed, cfg.max_iter = args.k, args.seed, args.max_iter
        cfg.kmeans_tol = args.kmeans_tol
        if cfg.k < 1 or cfg.max_iter < 1:
            raise CliError("--k and --max-iter must be positive")
    if args.command == "update":
        cfg.state, cfg.moves, cfg.verify_batch = args.state, args.moves, args.verify_batch
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except CliError as exc:
        print(f"schurfit: error: {exc}", file=sys.stderr)
        return exc.code
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"schurfit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"schurfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
