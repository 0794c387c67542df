"""Impairment-derived constants and the structured matrices used by the
rate formulas and the optimizer.

Matrix families, for channels f_R, g_R with G_R = diag(g_R), F_R = diag(f_R):

* ``Phi_Gf = G_R f_R f_R^H G_R^H`` (rank one) and its siblings Phi_Gg,
  Phi_GG = diag(|g|^4), Phi_GF = diag(|g f|^2), Phi_G = diag(|g|^2).
* Their projections through a null-space basis H_perp, kept as
  affine-in-(P_s, P_J1) decompositions so the optimizer can evaluate them
  at any power pair without re-projecting.

The noise-equivalent covariance entering the destination rate is
``Psi_tilde(P) = P_J1 kJ1t^2 Phi_Gg + P_J1 k1 Phi_GG + P_s k2 Phi_GF
+ P_s ks t^2 Phi_Gf + sigma^2 k3 Phi_G``.

The per-relay transmit power is affine in (P_s, P_J1):
``P_R,l = |w_l|^2 (P_s (1+tau_RS) |f_l|^2 + P_J1 tau_RJ1 |g_l|^2 + sigma^2)``,
which fixes the interpretation of the scalar sigma^2 term in the per-relay
matrices: it is sigma^2 * E_l, so the per-relay pieces sum to the total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ChannelRealization, ImpairmentProfile

__all__ = [
    "TauConstants",
    "PhiMatrices",
    "AffinePowerMatrix",
    "ProjectedMatrices",
    "compute_tau",
    "phi_matrices",
    "relay_input_distortion",
    "project",
    "psi_tilde",
    "upsilon_diag",
]


@dataclass(frozen=True)
class TauConstants:
    """Scalar combinations of the EVM levels.

    tau_J1 is the effective phase-I jamming coefficient seen by Eve:
    the unit-power jamming signal plus its transmit distortion,
    tau_J1 = 1 + k_J1_t^2 (ideal Eve receiver).
    """

    tau_RD: float
    tau_RS: float
    tau_RJ1: float
    k1: float
    k2: float
    k3: float
    tau_J1: float


def compute_tau(imp: ImpairmentProfile) -> TauConstants:
    tau_RD = imp.k_R_t**2 + imp.k_D_r**2
    tau_RS = imp.k_s_t**2 + imp.k_R_r**2
    tau_RJ1 = 1.0 + imp.k_J1_t**2 + imp.k_R_r**2
    return TauConstants(
        tau_RD=tau_RD,
        tau_RS=tau_RS,
        tau_RJ1=tau_RJ1,
        k1=tau_RD * tau_RJ1 + imp.k_R_r**2,
        k2=tau_RD * (1.0 + tau_RS) + imp.k_R_r**2,
        k3=1.0 + tau_RD,
        tau_J1=1.0 + imp.k_J1_t**2,
    )


@dataclass(frozen=True)
class PhiMatrices:
    """The five N x N Hermitian PSD building blocks."""

    Phi_Gf: np.ndarray
    Phi_Gg: np.ndarray
    Phi_GG: np.ndarray
    Phi_GF: np.ndarray
    Phi_G: np.ndarray


def phi_matrices(ch: ChannelRealization) -> PhiMatrices:
    g, f = ch.g_R, ch.f_R
    gf = g * f  # diag(G_R F_R)
    Phi_Gf = np.outer(gf, gf.conj())
    gg = g * g
    Phi_Gg = np.outer(gg, gg.conj())
    return PhiMatrices(
        Phi_Gf=Phi_Gf,
        Phi_Gg=Phi_Gg,
        Phi_GG=np.diag(np.abs(g) ** 4).astype(complex),
        Phi_GF=np.diag(np.abs(gf) ** 2).astype(complex),
        Phi_G=np.diag(np.abs(g) ** 2).astype(complex),
    )


def relay_input_distortion(P_s: float, P_J1: float, ch: ChannelRealization) -> np.ndarray:
    """Pi(P_s, P_J1): diagonal of per-relay received signal powers.

    The relay receive-distortion covariance is k_R_r^2 * Pi; the scaling
    is applied at the point of use.
    """
    if P_s < 0 or P_J1 < 0:
        raise ValueError("powers must be non-negative")
    return np.diag(P_s * np.abs(ch.f_R) ** 2 + P_J1 * np.abs(ch.g_R) ** 2)


def upsilon_diag(P_s: float, P_J1: float, ch: ChannelRealization, tau: TauConstants, sigma2: float) -> np.ndarray:
    """Diagonal of Upsilon_k(P): per-unit-|w_l|^2 relay transmit powers."""
    return (
        P_s * (1.0 + tau.tau_RS) * np.abs(ch.f_R) ** 2
        + P_J1 * tau.tau_RJ1 * np.abs(ch.g_R) ** 2
        + sigma2
    )


def psi_tilde(P_s: float, P_J1: float, phis: PhiMatrices, tau: TauConstants, sigma2: float, imp: ImpairmentProfile) -> np.ndarray:
    """Effective noise covariance Psi_tilde(P) in the destination rate."""
    return (
        P_J1 * imp.k_J1_t**2 * phis.Phi_Gg
        + P_J1 * tau.k1 * phis.Phi_GG
        + P_s * tau.k2 * phis.Phi_GF
        + P_s * imp.k_s_t**2 * phis.Phi_Gf
        + sigma2 * tau.k3 * phis.Phi_G
    )


@dataclass(frozen=True)
class AffinePowerMatrix:
    """Hermitian matrix affine in the power pair: const + P_s*cs + P_J1*cj."""

    const: np.ndarray
    coef_Ps: np.ndarray
    coef_PJ1: np.ndarray

    def at(self, P_s: float, P_J1: float) -> np.ndarray:
        return self.const + P_s * self.coef_Ps + P_J1 * self.coef_PJ1


@dataclass(frozen=True)
class ProjectedMatrices:
    """Null-space projections of the Phi family, sized d x d.

    ``Gamma_of_P.at(P_s, P_J1)`` reproduces H_perp^H Psi_tilde(P) H_perp;
    ``Ups_bar`` is the projected total relay power form, and
    ``Ups_bar_ll[l]`` its per-relay pieces, which sum to ``Ups_bar``.
    """

    mho_Gf: np.ndarray
    mho_Gg: np.ndarray
    mho_GG: np.ndarray
    mho_GF: np.ndarray
    mho_G: np.ndarray
    Z_gf_k: np.ndarray
    Gamma_of_P: AffinePowerMatrix
    Ups_bar: AffinePowerMatrix
    Ups_bar_ll: tuple[AffinePowerMatrix, ...]


def _proj(H_perp: np.ndarray, M: np.ndarray) -> np.ndarray:
    return H_perp.conj().T @ M @ H_perp


def project(
    phis: PhiMatrices,
    tau: TauConstants,
    H_perp: np.ndarray,
    sigma2: float,
    imp: ImpairmentProfile,
    ch: ChannelRealization,
) -> ProjectedMatrices:
    N = phis.Phi_G.shape[0]
    if H_perp.shape[0] != N:
        raise ValueError(f"H_perp has {H_perp.shape[0]} rows, expected {N}")
    d = H_perp.shape[1]

    mho_Gf = _proj(H_perp, phis.Phi_Gf)
    mho_Gg = _proj(H_perp, phis.Phi_Gg)
    mho_GG = _proj(H_perp, phis.Phi_GG)
    mho_GF = _proj(H_perp, phis.Phi_GF)
    mho_G = _proj(H_perp, phis.Phi_G)

    Z_gf_k = imp.k_s_t**2 * mho_Gf + tau.k2 * mho_GF

    gamma = AffinePowerMatrix(
        const=sigma2 * tau.k3 * mho_G,
        coef_Ps=imp.k_s_t**2 * mho_Gf + tau.k2 * mho_GF,
        coef_PJ1=imp.k_J1_t**2 * mho_Gg + tau.k1 * mho_GG,
    )

    abs_f2 = np.abs(ch.f_R) ** 2
    abs_g2 = np.abs(ch.g_R) ** 2
    # H_perp^H E_l H_perp = outer(row_l^H, row_l) with row_l the l-th row of H_perp
    rows = H_perp  # (N, d)
    per_relay = []
    ups_cs = np.zeros((d, d), dtype=complex)
    ups_cj = np.zeros((d, d), dtype=complex)
    ups_c0 = np.zeros((d, d), dtype=complex)
    for l in range(N):
        E_proj = np.outer(rows[l].conj(), rows[l])
        cs = (1.0 + tau.tau_RS) * abs_f2[l] * E_proj
        cj = tau.tau_RJ1 * abs_g2[l] * E_proj
        c0 = sigma2 * E_proj
        per_relay.append(AffinePowerMatrix(const=c0, coef_Ps=cs, coef_PJ1=cj))
        ups_cs += cs
        ups_cj += cj
        ups_c0 += c0
    ups = AffinePowerMatrix(const=ups_c0, coef_Ps=ups_cs, coef_PJ1=ups_cj)

    return ProjectedMatrices(
        mho_Gf=mho_Gf,
        mho_Gg=mho_Gg,
        mho_GG=mho_GG,
        mho_GF=mho_GF,
        mho_G=mho_G,
        Z_gf_k=Z_gf_k,
        Gamma_of_P=gamma,
        Ups_bar=ups,
        Ups_bar_ll=tuple(per_relay),
    )
