"""Solver-agnostic convex-program container and solve contract.

Programs are assembled from cvxpy atoms but solved through a single
entry point with pinned settings, so results are deterministic for
identical inputs.  The primary backend is Clarabel (interior point,
supports second-order, exponential, power, and semidefinite cones);
SCS is the fallback on numerical failure.

Complex Hermitian PSD constraints are lowered here to real symmetric
PSD constraints of doubled dimension via the [Re, -Im; Im, Re]
embedding, keeping the backend real-valued.  The lowering doubles each
eigenvalue's multiplicity and preserves signs, so PSD-ness round-trips.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

__all__ = [
    "ConicProgram",
    "SolveResult",
    "solve",
    "hermitian_real_embedding",
    "hermitian_psd_constraint",
    "make_log2_cuts",
    "program_to_json",
    "dump_program",
]

_STATUS_MAP = {
    cp.OPTIMAL: "optimal",
    cp.INFEASIBLE: "infeasible",
    cp.UNBOUNDED: "unbounded",
}


@dataclass
class ConicProgram:
    """Named variables, a linear(izable) objective to maximize, and cone
    constraints.  ``parameters`` allows re-solving with updated data
    without re-canonicalization."""

    variables: dict[str, cp.Variable]
    objective: cp.expressions.expression.Expression
    constraints: list
    parameters: dict[str, cp.Parameter] = field(default_factory=dict)
    name: str = ""
    _problem: cp.Problem | None = None

    def problem(self) -> cp.Problem:
        if self._problem is None:
            self._problem = cp.Problem(cp.Maximize(self.objective), self.constraints)
        return self._problem


@dataclass(frozen=True)
class SolveResult:
    status: str  # optimal | infeasible | unbounded | numerical-failure
    values: dict[str, np.ndarray | float]
    objective: float
    solve_time: float
    solver: str = ""
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _extract_values(p: ConicProgram) -> dict:
    out = {}
    for name, var in p.variables.items():
        val = var.value
        if val is None:
            continue
        out[name] = float(val) if np.isscalar(val) or getattr(val, "shape", ()) == () else np.array(val)
    return out


def solve(p: ConicProgram, tol: float = 1e-8, fallback: bool = True) -> SolveResult:
    """Solve with pinned settings; Clarabel first, SCS on failure.

    Clarabel is run at the requested tolerance first; if it stalls just
    above it (ill-conditioned iterates can floor the achievable gap around
    1e-5 relative and report as inaccurate), retries at 100x and 10000x
    looser tolerance let it terminate cleanly instead of grinding at the
    numerical floor — still far tighter than the outer loops' tolerances.

    ``fallback=False`` skips the SCS retry so callers with their own
    retry ladder fail fast.
    """
    prob = p.problem()
    t0 = time.perf_counter()
    status, exc_msg = "solver_error", ""
    for clarabel_tol in (tol, 100.0 * tol, 10_000.0 * tol):
        try:
            prob.solve(
                solver=cp.CLARABEL,
                tol_feas=clarabel_tol,
                tol_gap_abs=clarabel_tol,
                tol_gap_rel=clarabel_tol,
                max_iter=200,
            )
            status = prob.status
        except (cp.error.SolverError, Exception) as exc:  # noqa: BLE001
            status, exc_msg = "solver_error", str(exc)
        else:
            exc_msg = ""
        if status in _STATUS_MAP:
            break
    solver_used = "CLARABEL"

    if status not in _STATUS_MAP and not fallback:
        return SolveResult(
            status="numerical-failure",
            values=_extract_values(p),
            objective=float("nan"),
            solve_time=time.perf_counter() - t0,
            solver=solver_used,
            message=exc_msg or f"solver status: {status}",
        )

    if status not in _STATUS_MAP:
        # inaccurate or outright failure: retry once with SCS at high accuracy
        try:
            prob.solve(solver=cp.SCS, eps=1e-8, max_iters=50_000)
            status = prob.status
            solver_used = "SCS"
        except (cp.error.SolverError, Exception) as exc:  # noqa: BLE001
            return SolveResult(
                status="numerical-failure",
                values={},
                objective=float("nan"),
                solve_time=time.perf_counter() - t0,
                solver=solver_used,
                message=exc_msg or str(exc),
            )

    elapsed = time.perf_counter() - t0
    mapped = _STATUS_MAP.get(status, "numerical-failure")
    obj = prob.value if prob.value is not None else float("nan")
    # inaccurate statuses still carry a (near-)solution; expose it so callers
    # can validate the point against their own feasibility tolerance
    return SolveResult(
        status=mapped,
        values=_extract_values(p) if mapped != "infeasible" else {},
        objective=float(obj) if obj is not None else float("nan"),
        solve_time=elapsed,
        solver=solver_used,
        message="" if mapped != "numerical-failure" else f"solver status: {status}",
    )


def hermitian_real_embedding(M: np.ndarray) -> np.ndarray:
    """[Re M, -Im M; Im M, Re M] for a numeric Hermitian matrix."""
    re, im = np.real(M), np.imag(M)
    return np.block([[re, -im], [im, re]])


def hermitian_psd_constraint(re_expr, im_expr):
    """PSD constraint on the Hermitian matrix re + 1j*im given as real
    cvxpy expressions; emitted as the doubled real symmetric embedding."""
    embedded = cp.bmat([[re_expr, -im_expr], [im_expr, re_expr]])
    return embedded >> 0


def make_log2_cuts(t, x, anchors: list[float]) -> list:
    """Tangent cuts enforcing t <= log2(1 + x) at each anchor a:
    t <= log2(1+a) + (x - a) / ((1+a) ln 2).  Each cut over-estimates the
    concave log, so the cut set is an outer approximation of the epigraph;
    re-anchoring at successive iterates tightens it."""
    ln2 = np.log(2.0)
    cuts = []
    for a in anchors:
        if a < 0:
            raise ValueError("anchors must be non-negative")
        cuts.append(t <= np.log2(1.0 + a) + (x - a) / ((1.0 + a) * ln2))
    return cuts


def program_to_json(p: ConicProgram) -> dict:
    """Debug dump: variables, constraint inventory, and the canonical
    sparse conic data (triplets of A, vectors b, c, cone sizes)."""
    prob = p.problem()
    data, _, _ = prob.get_problem_data(cp.SCS)
    A = data["A"].tocoo()
    doc = {
        "format_version": 1,
        "name": p.name,
        "variables": [
            {"name": name, "shape": list(np.shape(var)), "complex": bool(var.is_complex())}
            for name, var in p.variables.items()
        ],
        "constraints": [type(c).__name__ for c in p.constraints],
        "objective_sense": "maximize",
        "conic_data": {
            "A_triplets": [
                [int(i), int(j), float(v)]
                for i, j, v in zip(A.row, A.col, A.data)
            ],
            "b": [float(x) for x in data["b"]],
            "c": [float(x) for x in data["c"]],
            "dims": {
                "zero": int(data["dims"].zero),
                "nonneg": int(data["dims"].nonneg),
                "exp": int(data["dims"].exp),
                "soc": [int(x) for x in data["dims"].soc],
                "psd": [int(x) for x in data["dims"].psd],
                "p3d": [float(x) for x in data["dims"].p3d],
            },
        },
    }
    return doc


def dump_program(p: ConicProgram, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(program_to_json(p), fh)
