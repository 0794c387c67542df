"""Impairment constants and the structured matrix families."""

import numpy as np
import pytest

from relaysec.config import ImpairmentProfile, default_config, derive_rng, generate_realization
from relaysec.distortion import (
    compute_tau,
    phi_matrices,
    project,
    psi_tilde,
    relay_input_distortion,
    upsilon_diag,
)
from relaysec.nullspace import build_basis


@pytest.fixture(scope="module")
def setup():
    cfg = default_config()
    ch = generate_realization(cfg, derive_rng(11))
    return cfg, ch


def test_tau_ideal_hardware():
    tau = compute_tau(ImpairmentProfile())
    assert tau.tau_RD == 0.0
    assert tau.tau_RS == 0.0
    assert tau.tau_RJ1 == 1.0
    assert tau.k1 == 0.0
    assert tau.k2 == 0.0
    assert tau.k3 == 1.0
    assert tau.tau_J1 == 1.0


def test_tau_uniform_evm():
    k = 0.08
    tau = compute_tau(ImpairmentProfile(*(k,) * 6))
    assert tau.tau_RD == pytest.approx(2 * k**2)
    assert tau.tau_RS == pytest.approx(2 * k**2)
    assert tau.tau_RJ1 == pytest.approx(1 + 2 * k**2)
    assert tau.k1 == pytest.approx(2 * k**2 * (1 + 2 * k**2) + k**2)
    assert tau.k3 == pytest.approx(1 + 2 * k**2)


def test_phi_matrices_structure(setup):
    _, ch = setup
    phis = phi_matrices(ch)
    # rank-one blocks
    assert np.linalg.matrix_rank(phis.Phi_Gf, tol=1e-9) == 1
    assert np.linalg.matrix_rank(phis.Phi_Gg, tol=1e-9) == 1
    # all Hermitian PSD
    for M in (phis.Phi_Gf, phis.Phi_Gg, phis.Phi_GG, phis.Phi_GF, phis.Phi_G):
        np.testing.assert_allclose(M, M.conj().T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(M)) >= -1e-10
    # diagonal blocks match their closed forms
    np.testing.assert_allclose(np.diag(phis.Phi_G), np.abs(ch.g_R) ** 2)
    np.testing.assert_allclose(np.diag(phis.Phi_GG), np.abs(ch.g_R) ** 4)


def test_relay_input_distortion_nonneg(setup):
    _, ch = setup
    pi = relay_input_distortion(2.0, 3.0, ch)
    assert np.all(np.diag(pi) >= 0)
    with pytest.raises(ValueError):
        relay_input_distortion(-1.0, 0.0, ch)


def test_projection_consistency(setup):
    cfg, ch = setup
    imp = cfg.impairments
    tau = compute_tau(imp)
    phis = phi_matrices(ch)
    basis = build_basis(ch)
    proj = project(phis, tau, basis.H_perp, cfg.sigma2, imp, ch)
    P_s, P_J1 = 7.0, 13.0
    # Gamma reproduces the projected noise covariance at any power pair
    want = basis.H_perp.conj().T @ psi_tilde(P_s, P_J1, phis, tau, cfg.sigma2, imp) @ basis.H_perp
    got = proj.Gamma_of_P.at(P_s, P_J1)
    np.testing.assert_allclose(got, want, atol=1e-10 * np.linalg.norm(want))


def test_per_relay_pieces_sum_to_total(setup):
    cfg, ch = setup
    imp = cfg.impairments
    tau = compute_tau(imp)
    basis = build_basis(ch)
    proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    P_s, P_J1 = 5.0, 2.0
    total = sum(m.at(P_s, P_J1) for m in proj.Ups_bar_ll)
    np.testing.assert_allclose(total, proj.Ups_bar.at(P_s, P_J1), atol=1e-10)


def test_per_relay_power_identity(setup):
    # v^H Ups_bar_ll v equals |w_l|^2 * upsilon_diag[l] for lifted w
    cfg, ch = setup
    imp = cfg.impairments
    tau = compute_tau(imp)
    basis = build_basis(ch)
    proj = project(phi_matrices(ch), tau, basis.H_perp, cfg.sigma2, imp, ch)
    rng = derive_rng(5)
    v = rng.standard_normal(basis.d) + 1j * rng.standard_normal(basis.d)
    w = basis.H_perp @ v
    P_s, P_J1 = 3.0, 4.0
    ups = upsilon_diag(P_s, P_J1, ch, tau, cfg.sigma2)
    for l in range(cfg.N):
        quad = float(np.real(v.conj() @ proj.Ups_bar_ll[l].at(P_s, P_J1) @ v))
        assert quad == pytest.approx(np.abs(w[l]) ** 2 * ups[l], rel=1e-10)
