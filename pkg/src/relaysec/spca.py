"""Joint power-allocation and beamformer design by successive convex
inner approximation.

The non-convex secrecy problem is rewritten with inverse-power variables
q_s = 1/P_s, q_J1 = 1/P_J1 and a slack vector; the remaining non-convex
pieces are replaced by tangency-tight convex surrogates re-anchored at
each iterate:

* the bilinear products t_B*a in the destination-SINR chain use the
  AM-GM bound x1*x2 <= (lambda/2)x1^2 + x2^2/(2*lambda) with multipliers
  fixed from the previous iterate (equality at the anchor);
* the concave-side quadratic-over-linear terms u^T u / q_s and 1/q_J1
  use first-order tangents (global under-estimators);
* the eavesdropper leakage enters through a Schur-complement LMI whose
  single non-affine entry (the m_s^2 factor) is linearized about the
  anchor, shrinking the modeled noise and hence over-counting leakage —
  a safe inner approximation.

Each iterate is feasible for the next surrogate program, so the
objective D(t_B, t_E) = 0.5*log2(1+t_B) - 0.5*t_E is non-decreasing and
the iteration converges.  The adversary block is generic: Eve's stacked
phase-I observation by default, or a single untrusted relay's
observation for the flag-controlled refinement pass (both are
"information channel + jamming channel + noise" SIMO structures).

The modeled destination-SINR denominator follows the slack-chain
formulation, which omits the (small, k^2-weighted) jammer-distortion
rank-one term present in the exact rate; the returned R_s_true is always
evaluated from the full formulas in :mod:`relaysec.rates`.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from .config import ChannelRealization, NetworkConfig
from .conic import ConicProgram, SolveResult, hermitian_psd_constraint
from .conic import solve as conic_solve
from .distortion import ProjectedMatrices, TauConstants, compute_tau
from .nullspace import NullSpaceBasis
from .rates import evaluate_point

__all__ = [
    "SpcaState",
    "BeamformerSolution",
    "AdversaryBlock",
    "ProblemData",
    "xi",
    "SurrogateCoeffs",
    "build_surrogates",
    "build_problem_data",
    "eve_adversary",
    "relay_adversary",
    "state_from_point",
    "state_from_values",
    "assemble_subproblem",
    "ParametricSubproblem",
    "surrogate_violations",
    "original_violations",
    "run_algorithm1",
    "InfeasibleInitError",
]

_ANCHOR_TB_FLOOR = 1e-9
_OMEGA_E_FLOOR = 1.0 + 1e-9
_LN2 = np.log(2.0)


class InfeasibleInitError(ValueError):
    """The supplied starting point violates the first subproblem; run the
    feasibility-search phase to obtain a valid initializer."""


@dataclass(frozen=True)
class SpcaState:
    """One point of the slack-variable space (an iterate or an anchor)."""

    t_B: float
    t_E: float
    omega_B: float
    omega_E: float
    u: np.ndarray          # 2 reals: Re/Im of the projected info channel at v
    beta: float
    q_J1: float
    q_s: float
    v: np.ndarray          # complex (d,)
    a_s: float
    a_J1: float
    m_s: float
    m_J1: float
    anchor_floored: bool = False

    def multipliers(self) -> tuple[float, float, float]:
        """(theta, rho, gamma) = (a_s, a_J1, beta)/t_B from this anchor,
        with t_B floored to keep them finite."""
        t = max(self.t_B, _ANCHOR_TB_FLOOR)
        return self.a_s / t, self.a_J1 / t, self.beta / t

    @property
    def P_s(self) -> float:
        return 1.0 / self.q_s

    @property
    def P_J1(self) -> float:
        return 1.0 / self.q_J1


@dataclass(frozen=True)
class BeamformerSolution:
    P_s: float
    P_J1: float
    v: np.ndarray
    w: np.ndarray
    R_s_surrogate: float
    R_s_true: float
    iterations: int
    objective_trace: tuple[float, ...]
    converged: bool
    state: SpcaState | None = None
    diagnostics: dict = field(default_factory=dict)


def xi(x1: float, x2: float, lam: float) -> float:
    """AM-GM upper bound on the product x1*x2: (lam/2)x1^2 + x2^2/(2 lam).

    Tight (equals x1*x2) exactly when lam = x2/x1.
    """
    if lam <= 0:
        raise ValueError("lambda must be strictly positive")
    return 0.5 * lam * x1 * x1 + 0.5 * x2 * x2 / lam


@dataclass(frozen=True)
class AdversaryBlock:
    """SIMO leakage structure: y = sqrt(P_s) af x + jamming via aq + noise.

    ``c_j`` scales the jamming power (signal + its transmit distortion,
    plus receive distortion for a relay adversary); ``c_s`` scales the
    self-interference from the information signal's distortion.
    """

    name: str
    af: np.ndarray  # information channel (n_a,)
    aq: np.ndarray  # jamming channel (n_a,)
    c_j: float
    c_s: float

    @property
    def n(self) -> int:
        return self.af.shape[0]

    def leakage_rate(self, P_s: float, P_J1: float, sigma2: float) -> float:
        M = (
            self.c_j * P_J1 * np.outer(self.aq, self.aq.conj())
            + self.c_s * P_s * np.outer(self.af, self.af.conj())
            + sigma2 * np.eye(self.n)
        )
        x = np.linalg.solve(M, self.af)
        return 0.5 * np.log2(1.0 + P_s * float(np.real(self.af.conj() @ x)))


def eve_adversary(ch: ChannelRealization, tau: TauConstants, imp) -> AdversaryBlock:
    return AdversaryBlock(
        name="eve", af=ch.f_E, aq=ch.q_E, c_j=tau.tau_J1, c_s=imp.k_s_t**2
    )


def relay_adversary(ch: ChannelRealization, tau: TauConstants, l: int) -> AdversaryBlock:
    """Leakage block of untrusted relay l (scalar observation)."""
    return AdversaryBlock(
        name=f"relay_{l}",
        af=np.array([ch.f_R[l]]),
        aq=np.array([ch.g_R[l]]),
        c_j=tau.tau_RJ1,
        c_s=tau.tau_RS,
    )


@dataclass(frozen=True)
class ProblemData:
    """Precomputed factors so every quadratic form is a squared norm.

    For each PSD matrix M in the program there is a factor F with
    v^H M v = ||F v||^2; the per-relay power forms are rank one with
    factor row ``rows[l]`` (the l-th row of the null-space basis).
    """

    cfg: NetworkConfig
    ch: ChannelRealization
    basis: NullSpaceBasis
    proj: ProjectedMatrices
    tau: TauConstants
    d: int
    h: np.ndarray        # (d,) projected info channel; u = (Re, Im) of h^H v
    F_zs: np.ndarray     # factor of the source-side interference form Z
    F_gg: np.ndarray     # factor of the jammer-side interference form
    F_g: np.ndarray      # factor of the forwarded-noise form
    F_ps: np.ndarray     # total-power factor multiplying 1/q_s
    F_pj: np.ndarray     # total-power factor multiplying 1/q_J1
    rows: np.ndarray     # (N, d) per-relay rank-one factor rows
    c_ps_l: np.ndarray   # per-relay scalar coefficients on 1/q_s
    c_pj_l: np.ndarray   # per-relay scalar coefficients on 1/q_J1
    adversary: AdversaryBlock
    # structurally-zero interference slacks (ideal-hardware degenerations);
    # their bilinear chain terms are dropped and the slacks pinned to zero,
    # since a floored AM-GM multiplier against an unbounded t_B would
    # otherwise inject spurious slack
    active_a_s: bool = True
    active_a_J1: bool = True


def build_problem_data(
    cfg: NetworkConfig,
    ch: ChannelRealization,
    basis: NullSpaceBasis,
    proj: ProjectedMatrices,
    adversary: AdversaryBlock | None = None,
) -> ProblemData:
    imp = cfg.impairments
    tau = compute_tau(imp)
    Hp = basis.H_perp
    d = basis.d
    abs_f = np.abs(ch.f_R)
    abs_g = np.abs(ch.g_R)

    h = Hp.conj().T @ (ch.g_R * ch.f_R)
    # Z = k_s_t^2 h h^H + k2 * diag(|gf|^2) projected
    F_zs = np.vstack([
        imp.k_s_t * h.conj()[None, :],
        np.sqrt(tau.k2) * (np.abs(ch.g_R * ch.f_R)[:, None] * Hp),
    ])
    F_gg = (abs_g**2)[:, None] * Hp
    # the noise floor is folded into this factor so the slack it bounds is
    # the forwarded noise-plus-distortion *power* (same units as the other
    # interference slacks), not its 1/sigma^2 multiple
    F_g = np.sqrt(cfg.sigma2 * tau.k3) * abs_g[:, None] * Hp
    F_ps = np.sqrt(1.0 + tau.tau_RS) * abs_f[:, None] * Hp
    F_pj = np.sqrt(tau.tau_RJ1) * abs_g[:, None] * Hp
    return ProblemData(
        cfg=cfg,
        ch=ch,
        basis=basis,
        proj=proj,
        tau=tau,
        d=d,
        h=h,
        F_zs=F_zs,
        F_gg=F_gg,
        F_g=F_g,
        F_ps=F_ps,
        F_pj=F_pj,
        rows=Hp,
        c_ps_l=(1.0 + tau.tau_RS) * abs_f**2,
        c_pj_l=tau.tau_RJ1 * abs_g**2,
        adversary=adversary or eve_adversary(ch, tau, imp),
        active_a_s=bool(np.linalg.norm(F_zs) > 0.0),
        active_a_J1=bool(tau.k1 > 0.0 and np.linalg.norm(F_gg) > 0.0),
    )


def _sq(x: np.ndarray) -> float:
    return float(np.real(np.vdot(x, x)))


def state_from_point(
    P_s: float, P_J1: float, v: np.ndarray, data: ProblemData
) -> SpcaState:
    """Evaluate every slack variable's defining expression at (P_s, P_J1, v),
    giving a self-consistent state (all the defining equalities tight)."""
    sigma2 = data.cfg.sigma2
    q_s, q_J1 = 1.0 / P_s, 1.0 / P_J1
    hv = complex(np.vdot(data.h, v))
    u = np.array([hv.real, hv.imag])
    omega_B = (u @ u) / q_s
    a_s = _sq(data.F_zs @ v) / q_s
    a_J1 = data.tau.k1 * _sq(data.F_gg @ v) / q_J1
    beta = _sq(data.F_g @ v)
    t_B = omega_B / (a_s + a_J1 + beta + sigma2)
    m_s = 1.0 / np.sqrt(q_s)
    m_J1 = 1.0 / q_J1
    adv = data.adversary
    M = (
        adv.c_j * m_J1 * np.outer(adv.aq, adv.aq.conj())
        + adv.c_s * m_s**2 * np.outer(adv.af, adv.af.conj())
        + sigma2 * np.eye(adv.n)
    )
    omega_E = 1.0 + m_s**2 * float(np.real(adv.af.conj() @ np.linalg.solve(M, adv.af)))
    t_E = np.log2(omega_E)
    return SpcaState(
        t_B=float(t_B), t_E=float(t_E), omega_B=float(omega_B),
        omega_E=float(omega_E), u=u, beta=float(beta),
        q_J1=float(q_J1), q_s=float(q_s), v=np.asarray(v, dtype=complex),
        a_s=float(a_s), a_J1=float(a_J1), m_s=float(m_s), m_J1=float(m_J1),
    )


def state_from_values(values: dict, d: int) -> SpcaState:
    """Assemble a state from a solver value dictionary."""
    v = np.asarray(values["v_re"]) + 1j * np.asarray(values["v_im"])
    return SpcaState(
        t_B=float(values["t_B"]), t_E=float(values["t_E"]),
        omega_B=float(values["omega_B"]), omega_E=float(values["omega_E"]),
        u=np.asarray(values["u"], dtype=float), beta=float(values["beta"]),
        q_J1=float(values["q_J1"]), q_s=float(values["q_s"]),
        v=v.reshape(d), a_s=float(values["a_s"]), a_J1=float(values["a_J1"]),
        m_s=float(values["m_s"]), m_J1=float(values["m_J1"]),
    )


@dataclass(frozen=True)
class SurrogateCoeffs:
    """Numeric coefficients of the four tangent/AM-GM surrogates at an anchor.

    * leakage-log tangent:  t_E >= e0 + e1 * omega_E
    * SINR-chain AM-GM:     uses multipliers (theta, rho, gamma)
    * info-power tangent:   s_u . u + s_q * q_s >= omega_B
    * jam-power tangent:    m_J1 <= b0 - b1 * q_J1
    * LMI linearization:    m_s^2 -> ms_lin1 * m_s - ms_lin0
    """

    e0: float
    e1: float
    theta: float
    rho: float
    gamma: float
    s_u: np.ndarray
    s_q: float
    b0: float
    b1: float
    ms_lin1: float
    ms_lin0: float
    floored: bool


def build_surrogates(anchor: SpcaState) -> SurrogateCoeffs:
    if anchor.q_s <= 0 or anchor.q_J1 <= 0:
        raise ValueError("anchor must have strictly positive q_s, q_J1")
    w_e = max(anchor.omega_E, _OMEGA_E_FLOOR)
    floored = anchor.t_B < _ANCHOR_TB_FLOOR or anchor.omega_E < _OMEGA_E_FLOOR
    theta, rho, gamma = anchor.multipliers()
    uu = float(anchor.u @ anchor.u)
    return SurrogateCoeffs(
        e0=float(np.log2(w_e) - 1.0 / _LN2),
        e1=float(1.0 / (w_e * _LN2)),
        theta=max(theta, 1e-12), rho=max(rho, 1e-12), gamma=max(gamma, 1e-12),
        s_u=2.0 * anchor.u / anchor.q_s,
        s_q=-uu / anchor.q_s**2,
        b0=2.0 / anchor.q_J1,
        b1=1.0 / anchor.q_J1**2,
        ms_lin1=2.0 * anchor.m_s,
        ms_lin0=anchor.m_s**2,
        floored=floored,
    )


# ---------------------------------------------------------------------------
# program assembly
# ---------------------------------------------------------------------------


def _complex_matvec(M: np.ndarray, v_re, v_im):
    """(Re, Im) cvxpy expressions of M @ v for constant complex M."""
    Mr, Mi = np.real(M), np.imag(M)
    return Mr @ v_re - Mi @ v_im, Mr @ v_im + Mi @ v_re


def _qol_complex(M: np.ndarray, v_re, v_im, denom):
    """quad-over-lin ||M v||^2 / denom as a cvxpy expression."""
    re, im = _complex_matvec(M, v_re, v_im)
    return cp.quad_over_lin(cp.hstack([re, im]), denom)


def _sumsq_complex(M: np.ndarray, v_re, v_im):
    re, im = _complex_matvec(M, v_re, v_im)
    return cp.sum_squares(cp.hstack([re, im]))


class ParametricSubproblem:
    """The per-iteration convex program, compiled once per realization.

    Anchor-dependent data enters only through cvxpy Parameters, so
    successive iterations skip re-canonicalization.  ``mode`` selects the
    rate-maximization program or the slack-minimization feasibility
    program (identical constraint set, each constraint relaxed by the
    scalar infeasibility slack s; hard power/cap constraints stay hard so
    a zero-slack point hands off directly to the rate program).
    """

    def __init__(
        self,
        data: ProblemData,
        mode: str = "spca",
        scale_state: SpcaState | None = None,
        tr_radius: float = 2.0,
    ):
        if mode not in ("spca", "fipsa"):
            raise ValueError(f"unknown mode {mode!r}")
        self.data = data
        self.mode = mode
        cfg = data.cfg
        d = data.d
        sigma2 = cfg.sigma2
        adv = data.adversary

        # the natural magnitudes of the variables span many orders (e.g. the
        # forwarded-noise slack against the inverse jamming power), which
        # defeats the solvers' built-in equilibration; a diagonal change of
        # variables fixed at compile time from a reference state brings every
        # solver variable to O(1) near that state
        self.scales = self._scales_from(scale_state)
        sc = self.scales

        t_B_r = cp.Variable(name="t_B", nonneg=True)
        t_E_r = cp.Variable(name="t_E")
        omega_B_r = cp.Variable(name="omega_B", nonneg=True)
        omega_E_r = cp.Variable(name="omega_E")
        u_r = cp.Variable(2, name="u")
        beta_r = cp.Variable(name="beta", nonneg=True)
        q_s_r = cp.Variable(name="q_s", pos=True)
        q_J1_r = cp.Variable(name="q_J1", pos=True)
        v_re_r = cp.Variable(d, name="v_re")
        v_im_r = cp.Variable(d, name="v_im")
        a_s_r = cp.Variable(name="a_s", nonneg=True)
        a_J1_r = cp.Variable(name="a_J1", nonneg=True)
        m_s_r = cp.Variable(name="m_s", nonneg=True)
        m_J1_r = cp.Variable(name="m_J1")

        self.vars = {
            "t_B": t_B_r, "t_E": t_E_r, "omega_B": omega_B_r,
            "omega_E": omega_E_r, "u": u_r, "beta": beta_r, "q_s": q_s_r,
            "q_J1": q_J1_r, "v_re": v_re_r, "v_im": v_im_r, "a_s": a_s_r,
            "a_J1": a_J1_r, "m_s": m_s_r, "m_J1": m_J1_r,
        }

        # physical-unit expressions used in every constraint below
        t_B = sc["t_B"] * t_B_r
        t_E = sc["t_E"] * t_E_r
        omega_B = sc["omega_B"] * omega_B_r
        omega_E = sc["omega_E"] * omega_E_r
        u = sc["u"] * u_r
        beta = sc["beta"] * beta_r
        q_s = sc["q_s"] * q_s_r
        q_J1 = sc["q_J1"] * q_J1_r
        v_re = sc["v"] * v_re_r
        v_im = sc["v"] * v_im_r
        a_s = sc["a_s"] * a_s_r
        a_J1 = sc["a_J1"] * a_J1_r
        m_s = sc["m_s"] * m_s_r
        m_J1 = sc["m_J1"] * m_J1_r

        p = {
            "e0": cp.Parameter(name="e0"),
            "e1": cp.Parameter(name="e1", nonneg=True),
            "half_theta": cp.Parameter(name="half_theta", nonneg=True),
            "inv_2theta": cp.Parameter(name="inv_2theta", nonneg=True),
            "half_rho": cp.Parameter(name="half_rho", nonneg=True),
            "inv_2rho": cp.Parameter(name="inv_2rho", nonneg=True),
            "half_gamma": cp.Parameter(name="half_gamma", nonneg=True),
            "inv_2gamma": cp.Parameter(name="inv_2gamma", nonneg=True),
            "s_u": cp.Parameter(2, name="s_u"),
            "s_q": cp.Parameter(name="s_q", nonpos=True),
            "b0": cp.Parameter(name="b0", nonneg=True),
            "b1": cp.Parameter(name="b1", nonneg=True),
            "ms_lin1": cp.Parameter(name="ms_lin1", nonneg=True),
            "ms_lin0": cp.Parameter(name="ms_lin0", nonneg=True),
            # objective t_B - beta_leak * t_E is the prox-linearized true
            # objective 0.5*log2(1+t_B) - 0.5*t_E rescaled by the inverse
            # anchor gradient of the log term (beta_leak = (1+t_B)*ln2, same
            # argmax).  The linearization keeps the subproblem free of the
            # exponential cone, and the rescaling keeps the t_B coefficient
            # at 1 so the solver does not chase a vanishing objective; the
            # outer loop restores exactness with a concave line search on the
            # true objective along the anchor-to-solution segment.
            "beta_leak": cp.Parameter(name="beta_leak", nonneg=True, value=1.0),
        }
        self.params = p

        if mode == "fipsa":
            s = cp.Variable(name="s", nonneg=True)
            self.vars["s"] = s
            relax = s
        else:
            relax = 0.0

        cons = []

        # trust-region box re-centered at each anchor.  Besides keeping the
        # step local, it bounds the primal feasible set, which keeps the dual
        # well-posed: without it, iterates at degenerate corners (many tight
        # tangents) produce near-infeasible duals and unreliable solves.
        # Radii well below 1 leave the box too thin for reliable solves.
        if tr_radius < 1.0:
            raise ValueError("trust-region radius must be at least 1")
        self.tr_radius = float(tr_radius)
        for name, var in self.vars.items():
            if name == "s":
                continue
            shape = var.shape if var.shape else ()
            lo = cp.Parameter(shape, name=f"lo_{name}")
            hi = cp.Parameter(shape, name=f"hi_{name}")
            p[f"lo_{name}"] = lo
            p[f"hi_{name}"] = hi
            cons.append(var >= lo)
            cons.append(var <= hi)

        # exact link between u and v: u = (Re, Im) of h^H v, affine in v
        hr, hi = np.real(data.h), np.imag(data.h)
        cons.append(u[0] == hr @ v_re + hi @ v_im)
        cons.append(u[1] == hr @ v_im - hi @ v_re)

        # leakage-log tangent (over-estimates log2(omega_E))
        cons.append(p["e0"] + p["e1"] * omega_E - t_E <= relax)

        # SINR-chain AM-GM convexification of omega_B >= t_B*(a_s+a_J1+...);
        # structurally-zero slacks contribute nothing to the product and are
        # pinned instead of convexified
        digamma = (
            p["half_gamma"] * cp.square(t_B) + p["inv_2gamma"] * cp.square(beta)
            + sigma2 * t_B - omega_B
        )
        if data.active_a_s:
            digamma = digamma + (
                p["half_theta"] * cp.square(t_B) + p["inv_2theta"] * cp.square(a_s)
            )
        else:
            cons.append(a_s_r == 0.0)
        if data.active_a_J1:
            digamma = digamma + (
                p["half_rho"] * cp.square(t_B) + p["inv_2rho"] * cp.square(a_J1)
            )
        else:
            cons.append(a_J1_r == 0.0)
        cons.append(digamma <= relax)

        # info-power tangent (under-estimates u^T u / q_s)
        cons.append(omega_B - (p["s_u"] @ u + p["s_q"] * q_s) <= relax)

        # jamming-power tangent (under-estimates 1/q_J1)
        cons.append(m_J1 - (p["b0"] - p["b1"] * q_J1) <= relax)

        # interference slack lower bounds (convex quadratic-over-linear)
        cons.append(_qol_complex(data.F_zs, v_re, v_im, q_s) - a_s <= relax)
        cons.append(
            data.tau.k1 * _qol_complex(data.F_gg, v_re, v_im, q_J1) - a_J1 <= relax
        )
        cons.append(_sumsq_complex(data.F_g, v_re, v_im) - beta <= relax)

        # m_s >= 1/sqrt(q_s) (power-cone-representable epigraph)
        cons.append(cp.power(q_s, -0.5) - m_s <= relax)

        # leakage LMI with the m_s^2 entry linearized about the anchor
        Aq = np.outer(adv.aq, adv.aq.conj())
        Af = np.outer(adv.af, adv.af.conj())
        n_a = adv.n
        ms2 = p["ms_lin1"] * m_s - p["ms_lin0"]
        varpi_re = (
            adv.c_j * m_J1 * np.real(Aq)
            + adv.c_s * ms2 * np.real(Af)
            + sigma2 * np.eye(n_a)
        )
        varpi_im = adv.c_j * m_J1 * np.imag(Aq) + adv.c_s * ms2 * np.imag(Af)
        col_re = cp.reshape(m_s * np.real(adv.af), (n_a, 1), order="C")
        col_im = cp.reshape(m_s * np.imag(adv.af), (n_a, 1), order="C")
        corner = cp.reshape(omega_E - 1.0, (1, 1), order="C")
        zero1 = np.zeros((1, 1))
        M_re = cp.bmat([[varpi_re, col_re], [col_re.T, corner]])
        M_im = cp.bmat([[varpi_im, col_im], [-col_im.T, zero1]])
        if mode == "fipsa":
            M_re = M_re + s * np.eye(n_a + 1)
        cons.append(hermitian_psd_constraint(M_re, M_im))

        # per-source caps; relaxed in feasibility mode per the printed program
        cons.append(cp.inv_pos(q_s) - cfg.P_T <= relax)
        cons.append(cp.inv_pos(q_J1) - cfg.P_J1_bar <= relax)

        # total and per-relay power budgets (always hard: convex, and the
        # handoff point must satisfy them for the rate program)
        total = (
            cp.inv_pos(q_s) + cp.inv_pos(q_J1)
            + sigma2 * (cp.sum_squares(v_re) + cp.sum_squares(v_im))
            + _qol_complex(data.F_ps, v_re, v_im, q_s)
            + _qol_complex(data.F_pj, v_re, v_im, q_J1)
        )
        cons.append(total <= cfg.Q_tot)
        for l in range(cfg.N):
            row = data.rows[l][None, :]
            re, im = _complex_matvec(row, v_re, v_im)
            rv = cp.hstack([re, im])
            cons.append(
                sigma2 * cp.sum_squares(rv)
                + data.c_ps_l[l] * cp.quad_over_lin(rv, q_s)
                + data.c_pj_l[l] * cp.quad_over_lin(rv, q_J1)
                <= cfg.Q_l[l]
            )

        if mode == "spca":
            # expressed in the scaled variables (O(1) objective value): the
            # variable scales are folded into the beta_leak parameter, which
            # only rescales the objective positively and keeps the argmax
            objective = t_B_r - p["beta_leak"] * t_E_r
        else:
            objective = -s
        self.program = ConicProgram(
            variables=self.vars,
            objective=objective,
            constraints=cons,
            parameters=self.params,
            name=f"{mode}-subproblem",
        )

    @staticmethod
    def _scales_from(state: SpcaState | None) -> dict[str, float]:
        if state is None:
            return {k: 1.0 for k in (
                "t_B", "t_E", "omega_B", "omega_E", "u", "beta",
                "q_s", "q_J1", "v", "a_s", "a_J1", "m_s", "m_J1",
            )}

        def mag(x, floor=1e-6):
            return float(max(np.max(np.abs(x)), floor))

        return {
            "t_B": mag(state.t_B), "t_E": mag(state.t_E),
            "omega_B": mag(state.omega_B), "omega_E": mag(state.omega_E),
            "u": mag(state.u), "beta": mag(state.beta),
            "q_s": mag(state.q_s), "q_J1": mag(state.q_J1),
            "v": mag(np.abs(state.v)), "a_s": mag(state.a_s),
            "a_J1": mag(state.a_J1), "m_s": mag(state.m_s),
            "m_J1": mag(state.m_J1),
        }

    def extract_state(self, values: dict) -> SpcaState:
        """Undo the compile-time variable scaling and assemble a state."""
        sc = self.scales
        phys = {
            "t_B": sc["t_B"] * values["t_B"],
            "t_E": sc["t_E"] * values["t_E"],
            "omega_B": sc["omega_B"] * values["omega_B"],
            "omega_E": sc["omega_E"] * values["omega_E"],
            "u": sc["u"] * np.asarray(values["u"]),
            "beta": sc["beta"] * values["beta"],
            "q_s": sc["q_s"] * values["q_s"],
            "q_J1": sc["q_J1"] * values["q_J1"],
            "v_re": sc["v"] * np.asarray(values["v_re"]),
            "v_im": sc["v"] * np.asarray(values["v_im"]),
            "a_s": sc["a_s"] * values["a_s"],
            "a_J1": sc["a_J1"] * values["a_J1"],
            "m_s": sc["m_s"] * values["m_s"],
            "m_J1": sc["m_J1"] * values["m_J1"],
        }
        return state_from_values(phys, self.data.d)

    def set_anchor(self, anchor: SpcaState) -> SurrogateCoeffs:
        sc = build_surrogates(anchor)
        p = self.params
        p["e0"].value = sc.e0
        p["e1"].value = sc.e1
        p["half_theta"].value = 0.5 * sc.theta
        p["inv_2theta"].value = 0.5 / sc.theta
        p["half_rho"].value = 0.5 * sc.rho
        p["inv_2rho"].value = 0.5 / sc.rho
        p["half_gamma"].value = 0.5 * sc.gamma
        p["inv_2gamma"].value = 0.5 / sc.gamma
        p["s_u"].value = sc.s_u
        p["s_q"].value = min(sc.s_q, 0.0)
        p["b0"].value = sc.b0
        p["b1"].value = sc.b1
        p["ms_lin1"].value = sc.ms_lin1
        p["ms_lin0"].value = sc.ms_lin0
        scl = self.scales
        if self.mode == "spca":
            self.params["beta_leak"].value = (
                (1.0 + max(anchor.t_B, 0.0)) * _LN2 * scl["t_E"] / scl["t_B"]
            )
        centers = {
            "t_B": anchor.t_B / scl["t_B"], "t_E": anchor.t_E / scl["t_E"],
            "omega_B": anchor.omega_B / scl["omega_B"],
            "omega_E": anchor.omega_E / scl["omega_E"],
            "u": anchor.u / scl["u"], "beta": anchor.beta / scl["beta"],
            "q_s": anchor.q_s / scl["q_s"], "q_J1": anchor.q_J1 / scl["q_J1"],
            "v_re": anchor.v.real / scl["v"], "v_im": anchor.v.imag / scl["v"],
            "a_s": anchor.a_s / scl["a_s"], "a_J1": anchor.a_J1 / scl["a_J1"],
            "m_s": anchor.m_s / scl["m_s"], "m_J1": anchor.m_J1 / scl["m_J1"],
        }
        for name, c in centers.items():
            c = np.asarray(c, dtype=float)
            half = self.tr_radius * np.maximum(1.0, np.abs(c))
            lo, hi = c - half, c + half
            if c.shape == ():
                lo, hi = float(lo), float(hi)
            p[f"lo_{name}"].value = lo
            p[f"hi_{name}"].value = hi
        return sc

    def solve_at(self, anchor: SpcaState, tol: float = 1e-8) -> SolveResult:
        self.set_anchor(anchor)
        return conic_solve(self.program, tol=tol)


def assemble_subproblem(
    cfg: NetworkConfig,
    ch: ChannelRealization,
    basis: NullSpaceBasis,
    proj: ProjectedMatrices,
    anchor: SpcaState,
    adversary: AdversaryBlock | None = None,
) -> ConicProgram:
    """One-shot assembly of the rate-maximization subproblem at an anchor."""
    data = build_problem_data(cfg, ch, basis, proj, adversary)
    sub = ParametricSubproblem(data, mode="spca")
    sub.set_anchor(anchor)
    return sub.program


# ---------------------------------------------------------------------------
# numeric constraint evaluation (feasibility assertions, soundness checks)
# ---------------------------------------------------------------------------


def surrogate_violations(
    state: SpcaState, anchor: SpcaState, data: ProblemData
) -> dict[str, float]:
    """Signed residuals (<= 0 means satisfied) of every surrogate-program
    constraint at ``state``, with surrogates anchored at ``anchor``."""
    cfg = data.cfg
    sigma2 = cfg.sigma2
    st = state
    if st.q_s <= 0.0 or st.q_J1 <= 0.0:
        # a degenerate candidate (solver breakdown); everything is violated
        return {
            k: float("inf")
            for k in (
                "u_link", "leak_log", "sinr_chain", "info_tangent",
                "jam_tangent", "a_s", "a_J1", "beta", "m_s", "leak_lmi",
                "cap_s", "cap_j", "total_power", "per_relay",
            )
        }
    sc = build_surrogates(anchor)
    out: dict[str, float] = {}

    hv = complex(np.vdot(data.h, st.v))
    out["u_link"] = max(abs(st.u[0] - hv.real), abs(st.u[1] - hv.imag))

    out["leak_log"] = sc.e0 + sc.e1 * st.omega_E - st.t_E
    out["sinr_chain"] = (
        (xi(st.t_B, st.a_s, sc.theta) if data.active_a_s else abs(st.a_s))
        + (xi(st.t_B, st.a_J1, sc.rho) if data.active_a_J1 else abs(st.a_J1))
        + xi(st.t_B, st.beta, sc.gamma)
        + sigma2 * st.t_B
        - st.omega_B
    )
    out["info_tangent"] = st.omega_B - (sc.s_u @ st.u + sc.s_q * st.q_s)
    out["jam_tangent"] = st.m_J1 - (sc.b0 - sc.b1 * st.q_J1)
    out["a_s"] = _sq(data.F_zs @ st.v) / st.q_s - st.a_s
    out["a_J1"] = data.tau.k1 * _sq(data.F_gg @ st.v) / st.q_J1 - st.a_J1
    out["beta"] = _sq(data.F_g @ st.v) - st.beta
    out["m_s"] = 1.0 / np.sqrt(st.q_s) - st.m_s

    adv = data.adversary
    ms2_lin = sc.ms_lin1 * st.m_s - sc.ms_lin0
    varpi = (
        adv.c_j * st.m_J1 * np.outer(adv.aq, adv.aq.conj())
        + adv.c_s * ms2_lin * np.outer(adv.af, adv.af.conj())
        + sigma2 * np.eye(adv.n)
    )
    M = np.block([
        [varpi, st.m_s * adv.af[:, None]],
        [st.m_s * adv.af.conj()[None, :], np.array([[st.omega_E - 1.0]])],
    ])
    out["leak_lmi"] = -float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])

    out["cap_s"] = 1.0 / st.q_s - cfg.P_T
    out["cap_j"] = 1.0 / st.q_J1 - cfg.P_J1_bar
    total = (
        1.0 / st.q_s + 1.0 / st.q_J1
        + sigma2 * _sq(st.v)
        + _sq(data.F_ps @ st.v) / st.q_s
        + _sq(data.F_pj @ st.v) / st.q_J1
    )
    out["total_power"] = total - cfg.Q_tot
    rv2 = np.abs(data.rows @ st.v) ** 2
    per = sigma2 * rv2 + data.c_ps_l * rv2 / st.q_s + data.c_pj_l * rv2 / st.q_J1
    out["per_relay"] = float(np.max(per - np.asarray(cfg.Q_l)))
    return out


def original_violations(state: SpcaState, data: ProblemData) -> dict[str, float]:
    """Signed residuals of the original (pre-surrogate) inequality set at
    ``state`` — the soundness spot-check that surrogate-feasible points
    satisfy the exact constraints they stand in for."""
    cfg = data.cfg
    sigma2 = cfg.sigma2
    st = state
    out: dict[str, float] = {}
    out["leak_log"] = np.log2(max(st.omega_E, 1e-300)) - st.t_E
    out["sinr_chain"] = (
        st.t_B * (st.a_s + st.a_J1 + st.beta + sigma2) - st.omega_B
    )
    out["info_power"] = st.omega_B - float(st.u @ st.u) / st.q_s
    out["jam_power"] = st.m_J1 - 1.0 / st.q_J1
    out["m_s"] = 1.0 / np.sqrt(st.q_s) - st.m_s
    adv = data.adversary
    varpi = (
        adv.c_j * st.m_J1 * np.outer(adv.aq, adv.aq.conj())
        + adv.c_s * st.m_s**2 * np.outer(adv.af, adv.af.conj())
        + sigma2 * np.eye(adv.n)
    )
    M = np.block([
        [varpi, st.m_s * adv.af[:, None]],
        [st.m_s * adv.af.conj()[None, :], np.array([[st.omega_E - 1.0]])],
    ])
    out["leak_lmi"] = -float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
    return out


# ---------------------------------------------------------------------------
# the outer iteration
# ---------------------------------------------------------------------------


def _objective(state: SpcaState) -> float:
    return 0.5 * np.log2(1.0 + state.t_B) - 0.5 * state.t_E


def _blend(a: SpcaState, b: SpcaState, step: float) -> SpcaState:
    """Affine interpolation between two states; every surrogate-program
    constraint is convex, so the blend of two feasible points is feasible."""
    if step >= 1.0:
        return b
    if step <= 0.0:
        return a
    mix = lambda x, y: (1.0 - step) * x + step * y  # noqa: E731
    return SpcaState(
        t_B=mix(a.t_B, b.t_B), t_E=mix(a.t_E, b.t_E),
        omega_B=mix(a.omega_B, b.omega_B), omega_E=mix(a.omega_E, b.omega_E),
        u=mix(a.u, b.u), beta=mix(a.beta, b.beta),
        q_J1=mix(a.q_J1, b.q_J1), q_s=mix(a.q_s, b.q_s),
        v=mix(a.v, b.v), a_s=mix(a.a_s, b.a_s), a_J1=mix(a.a_J1, b.a_J1),
        m_s=mix(a.m_s, b.m_s), m_J1=mix(a.m_J1, b.m_J1),
    )


def _line_search(
    anchor: SpcaState, candidate: SpcaState, data: ProblemData
) -> SpcaState:
    """Pick the best point on the segment from the anchor to the
    subproblem solution, evaluated with all slacks re-tightened.

    Any segment point is feasible for the surrogate program (convexity),
    and rebuilding the state from its physical (P_s, P_J1, v) replaces
    each slack by its exact defining value.  Every slack over-estimates
    its true value (the chain slacks bound interference from above, the
    leakage slacks bound Eve's rate from above), so re-tightening never
    decreases D; step 0 recovers the (already tight) anchor, so the best
    step never decreases the trace.
    """
    cfg = data.cfg

    def power_ok(P_s: float, P_J1: float, v: np.ndarray) -> bool:
        if P_s > cfg.P_T or P_J1 > cfg.P_J1_bar:
            return False
        total = (
            P_s + P_J1 + cfg.sigma2 * _sq(v)
            + _sq(data.F_ps @ v) * P_s + _sq(data.F_pj @ v) * P_J1
        )
        if total > cfg.Q_tot:
            return False
        rv2 = np.abs(data.rows @ v) ** 2
        per = cfg.sigma2 * rv2 + data.c_ps_l * rv2 * P_s + data.c_pj_l * rv2 * P_J1
        return bool(np.all(per <= np.asarray(cfg.Q_l)))

    def tightened(step: float) -> SpcaState | None:
        q_s = (1.0 - step) * anchor.q_s + step * candidate.q_s
        q_J1 = (1.0 - step) * anchor.q_J1 + step * candidate.q_J1
        v = (1.0 - step) * anchor.v + step * candidate.v
        if q_s <= 0.0 or q_J1 <= 0.0:
            return None
        P_s, P_J1 = 1.0 / q_s, 1.0 / q_J1
        # within the segment the blend inherits power feasibility by
        # convexity; extrapolated steps must be checked explicitly
        if step > 1.0 and not power_ok(P_s, P_J1, v):
            return None
        return state_from_point(P_s, P_J1, v, data)

    steps = np.linspace(0.0, 1.0, 26)
    states = [tightened(s) for s in steps]
    best = int(np.argmax([_objective(st) for st in states]))
    # one refinement pass around the best coarse step
    lo = steps[max(best - 1, 0)]
    hi = steps[min(best + 1, len(steps) - 1)]
    fine = [st for s in np.linspace(lo, hi, 11) if (st := tightened(s)) is not None]
    # extrapolation past the subproblem solution: slow basin crossings move
    # the powers geometrically, and an over-step that checks out physically
    # saves a full re-anchoring round.  Doubling continues while the true
    # objective keeps improving.
    pool = [st for st in states if st is not None] + fine
    best_d = max(_objective(st) for st in pool)
    step = 1.5
    while step <= 512.0:
        st = tightened(step)
        if st is None or _objective(st) <= best_d:
            break
        pool.append(st)
        best_d = _objective(st)
        step *= 2.0
    return max(pool, key=_objective)


def _power_scale_probe(state: SpcaState, data: ProblemData) -> SpcaState:
    """Best objective over a log-spaced family of power rescalings.

    The objective as a function of the common source/jammer power scale
    has two locally-optimal regimes (distortion-ceiling-limited at high
    power, noise-limited at low power with the budget spent on the relay
    weights), separated by a long shallow valley that the re-anchored
    subproblems cross slowly.  For each candidate scale the relay weights
    absorb the freed budget up to the binding power cap; all probes are
    physically feasible, and the incumbent stays in the pool, so picking
    the best never decreases the objective.
    """
    cfg = data.cfg
    caps = np.asarray(cfg.Q_l)
    v0 = state.v
    vn2 = _sq(v0)
    if vn2 <= 0.0:
        return state
    rv2 = np.abs(data.rows @ v0) ** 2
    fps2 = _sq(data.F_ps @ v0)
    fpj2 = _sq(data.F_pj @ v0)
    best = state
    for c in np.logspace(-4.0, 0.5, 19):
        P_s = min(c * state.P_s, cfg.P_T)
        P_J1 = min(c * state.P_J1, cfg.P_J1_bar)
        head = cfg.Q_tot - P_s - P_J1
        if head <= 0.0:
            continue
        quad = cfg.sigma2 * vn2 + fps2 * P_s + fpj2 * P_J1
        per_unit = cfg.sigma2 * rv2 + data.c_ps_l * rv2 * P_s + data.c_pj_l * rv2 * P_J1
        m2 = min(head / quad, float(np.min(caps / per_unit)))
        if m2 <= 0.0:
            continue
        probe = state_from_point(P_s, P_J1, np.sqrt(m2) * v0, data)
        if _objective(probe) > _objective(best):
            best = probe
    return best


def run_algorithm1(
    cfg: NetworkConfig,
    ch: ChannelRealization,
    init: SpcaState,
    basis: NullSpaceBasis | None = None,
    proj: ProjectedMatrices | None = None,
    adversary: AdversaryBlock | None = None,
    refine_relay: bool = False,
    check_feasibility: bool = True,
    diagnostics_path: str | None = None,
    tr_radius: float = 2.0,
) -> BeamformerSolution:
    """Iterate surrogate subproblems from a feasible starting point until
    the objective improvement falls below cfg.delta_I or cfg.N_max hits.
    """
    from .distortion import phi_matrices, project  # local to avoid import cycle noise
    from .nullspace import build_basis, lift

    imp = cfg.impairments
    tau = compute_tau(imp)
    if basis is None:
        basis = build_basis(ch)
    if proj is None:
        proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    data = build_problem_data(cfg, ch, basis, proj, adversary)

    if check_feasibility:
        resid = surrogate_violations(init, init, data)
        worst = max(resid.values())
        if worst > 1e-6:
            bad = {k: float(f"{r:.3e}") for k, r in resid.items() if r > 1e-6}
            raise InfeasibleInitError(
                f"starting point violates the first subproblem by {worst:.2e} "
                f"({bad}); obtain an initializer from the feasibility search"
            )

    sub = ParametricSubproblem(data, mode="spca", scale_state=init, tr_radius=tr_radius)
    anchor = init
    trace = [_objective(init)]
    solve_times: list[float] = []
    floor_events = 0
    termination = "max_iterations"
    iterations = 0
    degraded_accepts = 0
    prev_anchor: SpcaState | None = None
    for i in range(cfg.N_max):
        result = sub.solve_at(anchor)
        solve_times.append(result.solve_time)
        if not result.ok:
            # near-stationary subproblems can stall the interior point just
            # above tolerance; accept the returned point only if it checks
            # out against the surrogate constraints, else stop at the anchor
            candidate = (
                sub.extract_state(result.values)
                if set(result.values) >= {"v_re", "v_im", "t_B"}
                else None
            )
            if candidate is not None and max(
                surrogate_violations(candidate, anchor, data).values()
            ) <= 1e-6:
                degraded_accepts += 1
            else:
                # the variable scaling was fixed at the starting point; after
                # large moves it can be badly off at the current anchor, so
                # rebuild the subproblem scaled there and retry once
                sub = ParametricSubproblem(
                    data, mode="spca", scale_state=anchor, tr_radius=tr_radius
                )
                result = sub.solve_at(anchor)
                candidate = (
                    sub.extract_state(result.values)
                    if set(result.values) >= {"v_re", "v_im", "t_B"}
                    else None
                )
                valid = candidate is not None and (
                    result.ok
                    or max(surrogate_violations(candidate, anchor, data).values()) <= 1e-6
                )
                if valid:
                    if not result.ok:
                        degraded_accepts += 1
                elif i > 0:
                    termination = "solver_stall"
                    break
                else:
                    raise RuntimeError(
                        f"subproblem failed at iteration {i}: {result.status} "
                        f"{result.message}"
                    )
        else:
            candidate = sub.extract_state(result.values)
        new = _line_search(anchor, candidate, data)
        if prev_anchor is not None:
            # momentum pass: slow basin crossings zigzag, and the two-step
            # direction points through the zigzag; both searches keep their
            # endpoints in the candidate pool, so the trace stays monotone
            new = _line_search(prev_anchor, new, data)
        prev_anchor = anchor
        new = _power_scale_probe(new, data)
        if build_surrogates(anchor).floored:
            floor_events += 1
        iterations = i + 1
        trace.append(_objective(new))
        anchor = new
        if abs(trace[-1] - trace[-2]) <= cfg.delta_I:
            termination = "objective_tolerance"
            break

    v = anchor.v
    w = lift(basis, v)
    report = evaluate_point(anchor.P_s, anchor.P_J1, v, ch, imp, tau, proj, cfg.sigma2)
    diagnostics = {
        "format_version": 1,
        "termination": termination,
        "objective_trace": [float(x) for x in trace],
        "solve_time_s": [float(t) for t in solve_times],
        "anchor_floor_events": floor_events,
        "degraded_solver_accepts": degraded_accepts,
        "adversary": data.adversary.name,
        "binding_adversary": report.binding_adversary,
    }
    solution = BeamformerSolution(
        P_s=anchor.P_s,
        P_J1=anchor.P_J1,
        v=v,
        w=w,
        R_s_surrogate=float(trace[-1]),
        R_s_true=report.R_s,
        iterations=iterations,
        objective_trace=tuple(float(x) for x in trace),
        converged=termination == "objective_tolerance",
        state=anchor,
        diagnostics=diagnostics,
    )

    if refine_relay and report.binding_adversary.startswith("relay_"):
        l = int(report.binding_adversary.split("_")[1])
        relay_adv = relay_adversary(ch, tau, l)
        relay_data = build_problem_data(cfg, ch, basis, proj, relay_adv)
        # the slack components of `init` encode Eve's leakage; rebuild them
        # from the same physical point against the relay's leakage structure
        relay_init = state_from_point(init.P_s, init.P_J1, init.v, relay_data)
        alt = run_algorithm1(
            cfg, ch, relay_init, basis=basis, proj=proj,
            adversary=relay_adv,
            refine_relay=False, check_feasibility=check_feasibility,
        )
        if alt.R_s_true > solution.R_s_true:
            solution = replace(
                alt,
                diagnostics={**alt.diagnostics, "refined_for": report.binding_adversary},
            )

    if diagnostics_path is not None:
        with open(diagnostics_path, "w", encoding="utf-8") as fh:
            json.dump(solution.diagnostics, fh)
    return solution
