"""Information rates of the two-phase protocol, in bits per channel use.

All rates carry the half-duplex 1/2 pre-factor and use log base 2.  The
destination rate exists in two equivalent forms: the direct two-phase
expression (with the relay transmit-distortion term spelled out) and the
reduced form after substituting the relay-power identity
``Lambda(P_R) = W^H Upsilon_k(P) W``; both are implemented and the
equivalence is tested.

Eavesdropper model: Eve stacks her phase-I and phase-II observations into
an equivalent 1 x 2N_E SIMO system.  The source transmit distortion is a
single random variable appearing in both phases (kept correlated), while
the phase-I jamming signal and the jammer transmit distortion are modelled
with independent draws per phase, so the stacked rate reduces exactly to
the phase-I closed form when the beamformer lies in the null space.
Relays do not collude: each decodes from its own observation, and the
adversarial leakage is the maximum over relays and Eve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ChannelRealization, ImpairmentProfile
from .distortion import (
    ProjectedMatrices,
    TauConstants,
    compute_tau,
    phi_matrices,
    relay_input_distortion,
    upsilon_diag,
)
__all__ = [
    "RateReport",
    "EveStackedModel",
    "NoiseSource",
    "eve_noise_sources",
    "rate_destination",
    "rate_destination_direct",
    "rate_relay_leakage",
    "eve_stacked_model",
    "rate_eve_general",
    "rate_eve_general_rank1",
    "rate_eve_nsb",
    "secrecy_rate",
    "evaluate_point",
]


def _half_log2(x: float) -> float:
    return 0.5 * np.log2(x)


@dataclass(frozen=True)
class RateReport:
    I_D: float
    I_R: np.ndarray
    I_E: float
    R_s: float
    binding_adversary: str  # "eve" or "relay_<l>"


@dataclass(frozen=True)
class EveStackedModel:
    """Equivalent stacked SIMO channel at Eve: y = H_E x_s + n_E, cov(n_E) = Q_E."""

    H_E: np.ndarray  # 2*N_E complex vector
    Q_E: np.ndarray  # 2*N_E x 2*N_E Hermitian PSD


@dataclass(frozen=True)
class NoiseSource:
    """One independent noise input and its stacked response.

    The covariance contribution is ``response @ cov @ response^H`` where
    ``response`` maps the (unit- or matrix-covariance) source into the
    stacked 2*N_E observation.
    """

    name: str
    response: np.ndarray  # 2*N_E x m
    cov: np.ndarray       # m x m (diagonal in practice)


def rate_destination(
    P_s: float,
    P_J1: float,
    v: np.ndarray,
    proj: ProjectedMatrices,
    sigma2: float,
) -> float:
    """Destination rate in the null-space-reduced form."""
    num = P_s * np.real(v.conj() @ proj.mho_Gf @ v)
    den = np.real(v.conj() @ proj.Gamma_of_P.at(P_s, P_J1) @ v) + sigma2
    rate = _half_log2(1.0 + num / den)
    if not np.isfinite(rate):
        raise ValueError("non-finite destination rate; check inputs")
    return float(rate)


def rate_destination_direct(
    P_s: float,
    P_J1: float,
    w: np.ndarray,
    ch: ChannelRealization,
    imp: ImpairmentProfile,
    tau: TauConstants,
    sigma2: float,
) -> float:
    """Destination rate from the two-phase expression with explicit
    relay transmit-distortion term ``tau_RD g^T Lambda(P_R) g*``."""
    phis = phi_matrices(ch)
    psi = (
        P_J1 * imp.k_J1_t**2 * phis.Phi_Gg
        + P_J1 * imp.k_R_r**2 * phis.Phi_GG
        + P_s * imp.k_s_t**2 * phis.Phi_Gf
        + P_s * imp.k_R_r**2 * phis.Phi_GF
        + sigma2 * phis.Phi_G
    )
    lam = np.abs(w) ** 2 * upsilon_diag(P_s, P_J1, ch, tau, sigma2)
    num = P_s * np.real(w.conj() @ phis.Phi_Gf @ w)
    den = (
        np.real(w.conj() @ psi @ w)
        + tau.tau_RD * float(np.sum(np.abs(ch.g_R) ** 2 * lam))
        + sigma2
    )
    return _half_log2(1.0 + num / den)


def rate_relay_leakage(
    P_s: float,
    P_J1: float,
    ch: ChannelRealization,
    tau: TauConstants,
    sigma2: float,
) -> np.ndarray:
    """Per-relay leakage; independent of the beamformer."""
    f2 = np.abs(ch.f_R) ** 2
    g2 = np.abs(ch.g_R) ** 2
    sinr = P_s * f2 / (P_J1 * tau.tau_RJ1 * g2 + P_s * tau.tau_RS * f2 + sigma2)
    return 0.5 * np.log2(1.0 + sinr)


def eve_noise_sources(
    P_s: float,
    P_J1: float,
    P_J2: float,
    w: np.ndarray,
    ch: ChannelRealization,
    imp: ImpairmentProfile,
    sigma2: float,
) -> list[NoiseSource]:
    """Independent noise inputs of the stacked Eve observation.

    The phase-I jamming signal and jammer distortion are drawn freshly in
    the relayed phase (the relays forward an independent realization for
    rate purposes); the source transmit distortion is the same draw in
    both phases.
    """
    N_E = ch.f_E.shape[0]
    N = ch.f_R.shape[0]
    tau = compute_tau(imp)
    b_f = ch.C_E @ (ch.f_R * np.conj(w))  # C_E F_R w*
    b_g = ch.C_E @ (ch.g_R * np.conj(w))  # C_E G_R w*
    z = np.zeros(N_E, dtype=complex)

    def col(top, bottom):
        return np.concatenate([top, bottom]).reshape(-1, 1)

    one = np.array([[1.0]])
    sources = [
        NoiseSource("z1_phase1", col(np.sqrt(P_J1) * ch.q_E, z), one),
        NoiseSource("z1_phase2", col(z, np.sqrt(P_J1) * b_g), one),
        NoiseSource("eta_s_t", col(ch.f_E, b_f), np.array([[P_s * imp.k_s_t**2]])),
        NoiseSource("eta_J1_t_phase1", col(ch.q_E, z), np.array([[P_J1 * imp.k_J1_t**2]])),
        NoiseSource("eta_J1_t_phase2", col(z, b_g), np.array([[P_J1 * imp.k_J1_t**2]])),
        NoiseSource("z2", col(z, np.sqrt(P_J2) * ch.f_E), one),
        NoiseSource("eta_J2_t", col(z, ch.f_E), np.array([[P_J2 * imp.k_J2_t**2]])),
        NoiseSource(
            "n_E_phase1",
            np.vstack([np.eye(N_E), np.zeros((N_E, N_E))]).astype(complex),
            sigma2 * np.eye(N_E),
        ),
        NoiseSource(
            "n_E_phase2",
            np.vstack([np.zeros((N_E, N_E)), np.eye(N_E)]).astype(complex),
            sigma2 * np.eye(N_E),
        ),
    ]
    # relay-input noise and distortions, forwarded through C_E W^H
    CW = ch.C_E * np.conj(w)[None, :]  # C_E W^H
    fwd = np.vstack([np.zeros((N_E, N), dtype=complex), CW])
    pi = np.diag(relay_input_distortion(P_s, P_J1, ch))
    sources.append(NoiseSource("n_R", fwd, sigma2 * np.eye(N)))
    sources.append(NoiseSource("eta_R_r", fwd, imp.k_R_r**2 * np.diag(pi)))
    lam = np.abs(w) ** 2 * upsilon_diag(P_s, P_J1, ch, tau, sigma2)
    resp_t = np.vstack([np.zeros((N_E, N), dtype=complex), ch.C_E])
    sources.append(NoiseSource("eta_R_t", resp_t, imp.k_R_t**2 * np.diag(lam)))
    return sources


def eve_stacked_model(
    P_s: float,
    P_J1: float,
    P_J2: float,
    w: np.ndarray,
    ch: ChannelRealization,
    imp: ImpairmentProfile,
    sigma2: float,
) -> EveStackedModel:
    N_E = ch.f_E.shape[0]
    b_f = ch.C_E @ (ch.f_R * np.conj(w))
    H_E = np.concatenate([np.sqrt(P_s) * ch.f_E, np.sqrt(P_s) * b_f])
    Q_E = np.zeros((2 * N_E, 2 * N_E), dtype=complex)
    for src in eve_noise_sources(P_s, P_J1, P_J2, w, ch, imp, sigma2):
        Q_E += src.response @ src.cov @ src.response.conj().T
    Q_E = 0.5 * (Q_E + Q_E.conj().T)
    return EveStackedModel(H_E=H_E, Q_E=Q_E)


def rate_eve_general(model: EveStackedModel) -> float:
    """Stacked-observation leakage via the determinant formula."""
    n = model.Q_E.shape[0]
    sign, logdet_q = np.linalg.slogdet(model.Q_E)
    if sign <= 0:
        raise ValueError("singular or indefinite Q_E")
    M = model.Q_E + np.outer(model.H_E, model.H_E.conj())
    sign2, logdet_m = np.linalg.slogdet(M)
    if sign2 <= 0:
        raise ValueError("numerical failure in det formula")
    return 0.5 * (logdet_m - logdet_q) / np.log(2.0)


def rate_eve_general_rank1(model: EveStackedModel) -> float:
    """Equivalent rank-one form 0.5*log2(1 + H^H Q^{-1} H); cross-check path."""
    x = np.linalg.solve(model.Q_E, model.H_E)
    return _half_log2(1.0 + float(np.real(model.H_E.conj() @ x)))


def rate_eve_nsb(
    P_s: float,
    P_J1: float,
    ch: ChannelRealization,
    tau: TauConstants,
    imp: ImpairmentProfile,
    sigma2: float,
) -> float:
    """Closed-form Eve leakage under null-space beamforming (phase I only)."""
    N_E = ch.f_E.shape[0]
    M = (
        tau.tau_J1 * P_J1 * np.outer(ch.q_E, ch.q_E.conj())
        + P_s * imp.k_s_t**2 * np.outer(ch.f_E, ch.f_E.conj())
        + sigma2 * np.eye(N_E)
    )
    x = np.linalg.solve(M, ch.f_E)
    return _half_log2(1.0 + P_s * float(np.real(ch.f_E.conj() @ x)))


def secrecy_rate(I_D: float, I_E: float, I_R: np.ndarray) -> RateReport:
    """Combine rates per the positive-part secrecy definition."""
    I_R = np.asarray(I_R, dtype=float)
    worst_relay = int(np.argmax(I_R)) if I_R.size else -1
    max_relay = float(I_R[worst_relay]) if I_R.size else 0.0
    if I_E >= max_relay:
        binding = "eve"
        leak = I_E
    else:
        binding = f"relay_{worst_relay}"
        leak = max_relay
    return RateReport(
        I_D=float(I_D),
        I_R=I_R,
        I_E=float(I_E),
        R_s=max(0.0, float(I_D) - leak),
        binding_adversary=binding,
    )


def evaluate_point(
    P_s: float,
    P_J1: float,
    v: np.ndarray,
    ch: ChannelRealization,
    imp: ImpairmentProfile,
    tau: TauConstants,
    proj: ProjectedMatrices,
    sigma2: float,
) -> RateReport:
    """Full secrecy evaluation of a candidate (P_s, P_J1, v) under NSB."""
    I_D = rate_destination(P_s, P_J1, v, proj, sigma2)
    I_E = rate_eve_nsb(P_s, P_J1, ch, tau, imp, sigma2)
    I_R = rate_relay_leakage(P_s, P_J1, ch, tau, sigma2)
    return secrecy_rate(I_D, I_E, I_R)
