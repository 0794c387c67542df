"""Conic program container, solve contract, and lowering helpers."""

import cvxpy as cp
import numpy as np
import pytest

from relaysec.conic import (
    ConicProgram,
    hermitian_psd_constraint,
    hermitian_real_embedding,
    make_log2_cuts,
    program_to_json,
    solve,
)


def test_solve_simple_lp():
    x = cp.Variable(name="x")
    p = ConicProgram(variables={"x": x}, objective=x, constraints=[x <= 3.0, x >= 0.0])
    res = solve(p)
    assert res.ok
    assert res.values["x"] == pytest.approx(3.0, abs=1e-6)
    assert res.objective == pytest.approx(3.0, abs=1e-6)


def test_solve_infeasible():
    x = cp.Variable()
    p = ConicProgram(variables={"x": x}, objective=x, constraints=[x <= 0.0, x >= 1.0])
    res = solve(p)
    assert res.status == "infeasible"
    assert res.values == {}


def test_solve_soc():
    x = cp.Variable(2)
    p = ConicProgram(
        variables={"x": x},
        objective=x[0] + x[1],
        constraints=[cp.norm(x, 2) <= np.sqrt(2.0)],
    )
    res = solve(p)
    assert res.ok
    np.testing.assert_allclose(res.values["x"], [1.0, 1.0], atol=1e-5)


def test_hermitian_embedding_eigenvalues():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    M = A @ A.conj().T  # Hermitian PSD
    E = hermitian_real_embedding(M)
    ev_m = np.sort(np.linalg.eigvalsh(M))
    ev_e = np.sort(np.linalg.eigvalsh(E))
    # each eigenvalue appears with doubled multiplicity
    np.testing.assert_allclose(ev_e, np.sort(np.repeat(ev_m, 2)), atol=1e-9)


def test_hermitian_psd_constraint_feasibility():
    # find t such that M + t*I is PSD: optimal -t is the most negative
    # eigenvalue
    rng = np.random.default_rng(1)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    M = 0.5 * (A + A.conj().T)  # Hermitian, indefinite
    t = cp.Variable()
    re = np.real(M) + t * np.eye(3)
    im = cp.Constant(np.imag(M))
    p = ConicProgram(
        variables={"t": t},
        objective=-t,
        constraints=[hermitian_psd_constraint(re, im)],
    )
    res = solve(p)
    assert res.ok
    lam_min = np.min(np.linalg.eigvalsh(M))
    assert res.values["t"] == pytest.approx(-lam_min, abs=1e-5)


def test_log2_cuts_outer_approximation():
    # every cut over-estimates the concave log2(1+x), with tangency at the
    # anchor
    anchors = [0.0, 1.0, 4.0, 9.0]
    xs = np.linspace(0.0, 20.0, 200)
    ln2 = np.log(2.0)
    for a in anchors:
        cut = np.log2(1 + a) + (xs - a) / ((1 + a) * ln2)
        assert np.all(cut >= np.log2(1 + xs) - 1e-12)
        at_anchor = np.log2(1 + a)
        assert at_anchor == pytest.approx(np.log2(1 + a))
    t, x = cp.Variable(), cp.Variable()
    cuts = make_log2_cuts(t, x, anchors)
    assert len(cuts) == len(anchors)
    with pytest.raises(ValueError):
        make_log2_cuts(t, x, [-1.0])


def test_program_to_json_structure():
    x = cp.Variable(2, name="x")
    p = ConicProgram(
        variables={"x": x},
        objective=cp.sum(x),
        constraints=[cp.norm(x) <= 1.0],
        name="demo",
    )
    doc = program_to_json(p)
    assert doc["format_version"] == 1
    assert doc["name"] == "demo"
    assert doc["objective_sense"] == "maximize"
    assert doc["conic_data"]["dims"]["soc"]
