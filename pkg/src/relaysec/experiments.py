"""Monte Carlo harness: per-trial pipeline runs, parameter sweeps with CSV
output, a small-instance brute-force oracle, and timing benchmarks.

Seed discipline: trial ``t`` at grid point ``g`` of a sweep with master
seed ``m`` always draws from ``derive_rng(m, g, t)``, so results are
reproducible and independent of execution order.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import (
    ChannelRealization,
    ImpairmentProfile,
    NetworkConfig,
    default_config,
    derive_rng,
    generate_realization,
)
from .distortion import compute_tau, phi_matrices, project
from .fipsa import FipsaResult, run_fipsa
from .nullspace import build_basis
from .rates import evaluate_point
from .spca import BeamformerSolution, run_algorithm1

__all__ = [
    "TrialResult",
    "SweepSpec",
    "SweepRow",
    "OracleResult",
    "solve_trial",
    "config_for",
    "run_sweep",
    "write_csv",
    "brute_force_oracle",
    "bench_timing",
]

CSV_COLUMNS = (
    "param", "value", "mean_Rs", "std_Rs", "mean_Ps", "mean_PJ1",
    "feas_frac", "mean_iters_fipsa", "mean_iters_spca", "mean_time_s",
    "trials",
)


@dataclass(frozen=True)
class TrialResult:
    """One realization through the full feasibility-search + SPCA pipeline."""

    feasible: bool
    R_s: float
    P_s: float
    P_J1: float
    iters_fipsa: int
    iters_spca: int
    time_s: float
    converged: bool
    fipsa: FipsaResult
    solution: BeamformerSolution | None


def seeded_init(cfg, data, P_s: float, P_J1: float, fill: float, rng):
    """Self-consistent starting state at a chosen power pair.

    The beamformer direction is a random complex-normal draw, scaled so
    the most-loaded relay sits at ``fill`` of its cap and the total budget
    is respected with margin.
    """
    from .spca import state_from_point

    v = (rng.standard_normal(data.d) + 1j * rng.standard_normal(data.d)) / np.sqrt(2.0)
    rv2 = np.abs(data.rows @ v) ** 2
    per_unit = cfg.sigma2 * rv2 + data.c_ps_l * rv2 * P_s + data.c_pj_l * rv2 * P_J1
    v = v * np.sqrt(fill * np.min(np.asarray(cfg.Q_l) / per_unit))
    tot_v = (
        cfg.sigma2 * float(np.real(np.vdot(v, v)))
        + float(np.real(np.vdot(data.F_ps @ v, data.F_ps @ v))) * P_s
        + float(np.real(np.vdot(data.F_pj @ v, data.F_pj @ v))) * P_J1
    )
    head = 0.95 * cfg.Q_tot - P_s - P_J1
    if head <= 0:
        raise ValueError("seed powers exceed the total budget")
    if tot_v > head:
        v = v * np.sqrt(head / tot_v)
    return state_from_point(P_s, P_J1, v, data)


# (P_s, P_J1) seeds as fractions of the total budget: a budget-dominant
# split for the regime where hardware distortion is mild, and a
# noise-scale split (multiples of sigma^2) for the distortion-ceiling
# regime where only faint powers achieve secrecy
_POWER_SEEDS = ((0.35, 0.18), (0.04, 0.02))


def solve_trial(
    cfg: NetworkConfig,
    ch: ChannelRealization | None = None,
    rng: np.random.Generator | None = None,
    refine_relay: bool = False,
    multi_start: bool = True,
) -> TrialResult:
    """Feasibility search, then rate optimization if a feasible point is
    found; infeasible trials report zero rate and no solution.

    With ``multi_start`` the optimizer additionally runs from a small set
    of deterministic power-seeded starting points (the landscape has
    distinct locally-optimal power regimes) and the best true secrecy rate
    is kept.  The reported iteration count is the winning run's.
    """
    from .distortion import compute_tau, phi_matrices, project
    from .nullspace import build_basis
    from .spca import build_problem_data

    if rng is None:
        rng = derive_rng(cfg.seed)
    if ch is None:
        ch = generate_realization(cfg, rng)
    t0 = time.perf_counter()
    fr = run_fipsa(cfg, ch, rng=rng)
    if not fr.feasible:
        return TrialResult(
            feasible=False, R_s=0.0, P_s=float("nan"), P_J1=float("nan"),
            iters_fipsa=fr.iterations, iters_spca=0,
            time_s=time.perf_counter() - t0, converged=False,
            fipsa=fr, solution=None,
        )
    inits = [fr.state]
    if multi_start:
        imp = cfg.impairments
        tau = compute_tau(imp)
        basis = build_basis(ch)
        proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
        data = build_problem_data(cfg, ch, basis, proj)
        for f_s, f_j in _POWER_SEEDS:
            inits.append(seeded_init(cfg, data, f_s * cfg.Q_tot, f_j * cfg.Q_tot, 0.5, rng))
        inits.append(seeded_init(cfg, data, 3.0 * cfg.sigma2, 5.0 * cfg.sigma2, 0.5, rng))
    sol = None
    for init in inits:
        try:
            cand = run_algorithm1(cfg, ch, init, refine_relay=refine_relay)
        except Exception:
            continue
        if sol is None or cand.R_s_true > sol.R_s_true:
            sol = cand
    if sol is not None:
        sol = _polish_powers(cfg, ch, sol)
    if sol is None:
        return TrialResult(
            feasible=False, R_s=0.0, P_s=float("nan"), P_J1=float("nan"),
            iters_fipsa=fr.iterations, iters_spca=0,
            time_s=time.perf_counter() - t0, converged=False,
            fipsa=fr, solution=None,
        )
    return TrialResult(
        feasible=True, R_s=sol.R_s_true, P_s=sol.P_s, P_J1=sol.P_J1,
        iters_fipsa=fr.iterations, iters_spca=sol.iterations,
        time_s=time.perf_counter() - t0, converged=sol.converged,
        fipsa=fr, solution=sol,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter over a value grid, ``trials`` realizations per
    grid point.

    ``param`` is one of: Q_tot (linear watts), N, N_E, alpha (relay EVM
    split), impairment (common EVM level).  ``alpha_body_form`` selects the
    alternative split parameterization (see :func:`config_for`).
    """

    param: str
    values: tuple
    trials: int
    base: NetworkConfig = field(default_factory=default_config)
    out: str | None = None
    master_seed: int = 0
    alpha_body_form: bool = False

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep grid must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.param not in ("Q_tot", "N", "N_E", "alpha", "impairment"):
            raise ValueError(f"unknown sweep parameter {self.param!r}")


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    mean_Rs: float
    std_Rs: float
    mean_Ps: float
    mean_PJ1: float
    feas_frac: float
    mean_iters_fipsa: float
    mean_iters_spca: float
    mean_time_s: float
    trials: int


def config_for(spec_param: str, value, base: NetworkConfig,
               alpha_body_form: bool = False) -> NetworkConfig:
    """Scenario for one grid point of a sweep.

    Budget-derived quantities follow the default scenario's relations:
    changing Q_tot rescales the source cap (1.5x), the jammer cap (1x) and
    the per-relay caps (2 Q_tot / N); changing N re-splits the per-relay
    caps.  The ``alpha`` sweep splits a fixed relay EVM budget of 0.2
    between the transmit and receive chains: k_R_t = alpha,
    k_R_r = 0.2(1 - alpha); the body form instead scales both
    proportionally so that alpha*k_R_r + (1-alpha)*k_R_t = 0.2.
    """
    if spec_param == "Q_tot":
        q = float(value)
        return base.with_(
            Q_tot=q, P_T=1.5 * q, P_J1_bar=q,
            Q_l=tuple(2.0 * q / base.N for _ in range(base.N)),
        )
    if spec_param == "N":
        n = int(value)
        return base.with_(N=n, Q_l=tuple(2.0 * base.Q_tot / n for _ in range(n)))
    if spec_param == "N_E":
        return base.with_(N_E=int(value))
    if spec_param == "alpha":
        a = float(value)
        if alpha_body_form:
            c = 0.2 / (a**2 + (1.0 - a) ** 2)
            k_r, k_t = c * a, c * (1.0 - a)
        else:
            k_t, k_r = a, 0.2 * (1.0 - a)
        imp = ImpairmentProfile(
            **{**base.impairments.as_dict(), "k_R_t": k_t, "k_R_r": k_r}
        )
        return base.with_(impairments=imp)
    if spec_param == "impairment":
        k = float(value)
        return base.with_(impairments=ImpairmentProfile(*(k,) * 6))
    raise ValueError(f"unknown sweep parameter {spec_param!r}")


def _aggregate(spec: SweepSpec, value, results: list[TrialResult]) -> SweepRow:
    feas = [r for r in results if r.feasible]
    frac = len(feas) / len(results)

    def mean(xs):
        return float(np.mean(xs)) if xs else float("nan")

    return SweepRow(
        param=spec.param,
        value=float(value),
        mean_Rs=mean([r.R_s for r in feas]),
        std_Rs=float(np.std([r.R_s for r in feas])) if feas else float("nan"),
        mean_Ps=mean([r.P_s for r in feas]),
        mean_PJ1=mean([r.P_J1 for r in feas]),
        feas_frac=frac,
        mean_iters_fipsa=mean([r.iters_fipsa for r in results]),
        mean_iters_spca=mean([r.iters_spca for r in feas]),
        mean_time_s=mean([r.time_s for r in results]),
        trials=len(results),
    )


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Run the sweep; infeasible trials enter the feasibility fraction and
    are excluded from the rate/power means.  Writes CSV when ``spec.out``
    is set."""
    rows = []
    for g, value in enumerate(spec.values):
        cfg = config_for(spec.param, value, spec.base, spec.alpha_body_form)
        results = []
        for t in range(spec.trials):
            rng = derive_rng(spec.master_seed, g, t)
            ch = generate_realization(cfg, rng)
            results.append(solve_trial(cfg, ch, rng))
        rows.append(_aggregate(spec, value, results))
    if spec.out is not None:
        write_csv(spec.out, rows)
    return rows


def write_csv(path: str, rows: list[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([getattr(r, c) for c in CSV_COLUMNS])


# ---------------------------------------------------------------------------
# brute-force oracle (test-scale instances)
# ---------------------------------------------------------------------------


def _polish_powers(cfg: NetworkConfig, ch: ChannelRealization,
                   sol: BeamformerSolution) -> BeamformerSolution:
    """Pattern search over the power pair around a solver output.

    The iterative solver can terminate with the right operating regime but
    a slightly skewed power split.  Because leakage is weight-independent
    under null-space beamforming, the true secrecy rate at any power pair
    with per-pair optimal weights is a closed-form evaluation, so a short
    multiplicative pattern search over (P_s, P_J1) is cheap and accepts
    only strict improvements of the true rate.
    """
    from .nullspace import lift

    imp = cfg.impairments
    tau = compute_tau(imp)
    basis = build_basis(ch)
    proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    geom = {"basis": basis, "proj": proj, "tau": tau, "ch": ch}

    def evaluate(P_s: float, P_J1: float):
        if P_s + P_J1 >= cfg.Q_tot or P_s > cfg.P_T or P_J1 > cfg.P_J1_bar:
            return None
        v = _best_v_for_powers(P_s, P_J1, cfg, geom)
        if v is None:
            return None
        rep = evaluate_point(P_s, P_J1, v, ch, imp, tau, proj, cfg.sigma2)
        return rep.R_s, P_s, P_J1, v

    best = (sol.R_s_true, sol.P_s, sol.P_J1, sol.v)
    start = evaluate(sol.P_s, sol.P_J1)
    if start is not None and start[0] > best[0]:
        best = start
    # coarse log-spaced scan first: the rate surface is multimodal in the
    # power pair and a pattern search alone can stay in the solver's basin
    # even when a better basin exists at a very different power scale
    ps_grid = np.geomspace(0.1 * cfg.sigma2, min(cfg.P_T, 0.97 * cfg.Q_tot), 10)
    pj_grid = np.geomspace(0.1 * cfg.sigma2, min(cfg.P_J1_bar, 0.97 * cfg.Q_tot), 10)
    for gs in ps_grid:
        for gj in pj_grid:
            cand = evaluate(float(gs), float(gj))
            if cand is not None and cand[0] > best[0] + 1e-12:
                best = cand
    step = 2.0
    while step > 1.02:
        improved = False
        _, P_s, P_J1, _ = best
        for fs, fj in ((step, 1.0), (1.0 / step, 1.0), (1.0, step), (1.0, 1.0 / step),
                       (step, 1.0 / step), (1.0 / step, step), (step, step),
                       (1.0 / step, 1.0 / step)):
            cand = evaluate(min(fs * P_s, cfg.P_T), min(fj * P_J1, cfg.P_J1_bar))
            if cand is not None and cand[0] > best[0] + 1e-12:
                best = cand
                improved = True
        if not improved:
            step = np.sqrt(step)
    if best[0] <= sol.R_s_true:
        return sol
    R_s, P_s, P_J1, v = best
    return replace(
        sol, P_s=float(P_s), P_J1=float(P_J1), v=v, w=lift(basis, v),
        R_s_true=float(R_s), state=None,
        diagnostics={**sol.diagnostics, "power_polish_gain": float(R_s - sol.R_s_true)},
    )


@dataclass(frozen=True)
class OracleResult:
    R_s: float
    P_s: float
    P_J1: float
    v: np.ndarray
    I_D: float
    I_E: float


def _best_v_for_powers(P_s, P_J1, cfg, data_geom):
    """Best relay weights for a fixed power pair.

    Under null-space beamforming every adversary's leakage is independent
    of the weights, so the weights only have to maximize the destination
    SINR s^2 a(dir) / (s^2 b(dir) + sigma^2) at the largest feasible scale
    s.  The optimal direction solves a generalized eigenproblem whose
    noise shift depends on the achieved scale; a short fixed-point on the
    shift converges in a few rounds, and the best round is kept.
    """
    basis, proj, tau = data_geom["basis"], data_geom["proj"], data_geom["tau"]
    cfg_ = cfg
    sigma2 = cfg_.sigma2
    h = basis.H_perp.conj().T @ (data_geom["ch"].g_R * data_geom["ch"].f_R)
    Gam = proj.Gamma_of_P.at(P_s, P_J1)
    ups = proj.Ups_bar.at(P_s, P_J1)
    caps = np.asarray(cfg_.Q_l)
    head = cfg_.Q_tot - P_s - P_J1
    if head <= 0:
        return None

    rows = basis.H_perp
    abs_f2 = np.abs(data_geom["ch"].f_R) ** 2
    abs_g2 = np.abs(data_geom["ch"].g_R) ** 2
    per_unit_coeff = (
        sigma2
        + (1.0 + tau.tau_RS) * abs_f2 * P_s
        + tau.tau_RJ1 * abs_g2 * P_J1
    )

    def max_scale(direction):
        tot_unit = float(np.real(direction.conj() @ ups @ direction)) \
            + sigma2 * float(np.real(np.vdot(direction, direction)))
        rv2 = np.abs(rows @ direction) ** 2
        per_unit = per_unit_coeff * rv2
        s2 = min(head / tot_unit, float(np.min(caps / per_unit)))
        return np.sqrt(s2)

    best = None
    shift = sigma2
    for _ in range(8):
        direction = np.linalg.solve(Gam + shift * np.eye(Gam.shape[0]), h)
        direction = direction / np.linalg.norm(direction)
        s = max_scale(direction)
        v = s * direction
        num = P_s * abs(np.vdot(h, v)) ** 2
        den = float(np.real(v.conj() @ Gam @ v)) + sigma2
        sinr = num / den
        if best is None or sinr > best[0]:
            best = (sinr, v)
        shift = sigma2 / (s * s)
    return best[1]


def brute_force_oracle(
    cfg: NetworkConfig,
    ch: ChannelRealization,
    grid_points: int = 40,
) -> OracleResult:
    """Exhaustive power-grid search with per-pair optimal weights.

    Log-spaced grid over (P_s, P_J1) within the caps; leakage is
    weight-independent under null-space beamforming, so the best grid pair
    maximizes the secrecy rate directly.  A test-scale tool: quadratic in
    ``grid_points``, intended for small instances.
    """
    imp = cfg.impairments
    tau = compute_tau(imp)
    basis = build_basis(ch)
    proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    geom = {"basis": basis, "proj": proj, "tau": tau, "ch": ch}

    lo = cfg.sigma2 * 1e-2
    ps_grid = np.logspace(np.log10(lo), np.log10(min(cfg.P_T, 0.98 * cfg.Q_tot)),
                          grid_points)
    pj_grid = np.logspace(np.log10(lo), np.log10(min(cfg.P_J1_bar, 0.98 * cfg.Q_tot)),
                          grid_points)
    best = None
    for P_s in ps_grid:
        for P_J1 in pj_grid:
            if P_s + P_J1 >= cfg.Q_tot:
                continue
            v = _best_v_for_powers(P_s, P_J1, cfg, geom)
            if v is None:
                continue
            rep = evaluate_point(P_s, P_J1, v, ch, imp, tau, proj, cfg.sigma2)
            if best is None or rep.R_s > best[0].R_s:
                best = (rep, P_s, P_J1, v)
    rep, P_s, P_J1, v = best
    return OracleResult(
        R_s=rep.R_s, P_s=float(P_s), P_J1=float(P_J1), v=v,
        I_D=rep.I_D, I_E=rep.I_E,
    )


# ---------------------------------------------------------------------------
# timing benchmark
# ---------------------------------------------------------------------------


def bench_timing(
    n_grid: tuple[int, ...],
    trials: int,
    base: NetworkConfig | None = None,
    models: dict[int, object] | None = None,
    master_seed: int = 0,
) -> list[dict]:
    """Wall time per SPCA solve, and per surrogate inference when a trained
    model for that network size is supplied; ``ratio`` is solve/inference."""
    from .dnn import features_from

    base = base or default_config()
    out = []
    for g, n in enumerate(n_grid):
        cfg = config_for("N", n, base)
        spca_times, infer_times = [], []
        for t in range(trials):
            rng = derive_rng(master_seed, g, t)
            ch = generate_realization(cfg, rng)
            tr = solve_trial(cfg, ch, rng)
            spca_times.append(tr.time_s)
            if models and n in models:
                theta = features_from(cfg, ch)
                t0 = time.perf_counter()
                models[n].predict(theta)
                infer_times.append(time.perf_counter() - t0)
        row = {
            "N": n,
            "mean_spca_s": float(np.mean(spca_times)),
            "mean_infer_s": float(np.mean(infer_times)) if infer_times else float("nan"),
        }
        row["ratio"] = (
            row["mean_spca_s"] / row["mean_infer_s"] if infer_times else float("nan")
        )
        out.append(row)
    return out
