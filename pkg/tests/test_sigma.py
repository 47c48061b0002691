from fractions import Fraction

import numpy as np
import pytest

from fockopa.fockops import CapacityError, col_norm
from fockopa.freealg import FreePoly, MatrixTuple, mul, norm_sq, parse
from fockopa.linearize import linearize
from fockopa.opa import solve_opa
from fockopa.sigma import (Block, Const, ContractionError, PencilPower, PencilSeries, Product, Scaled,
                           nominal_degree_bound, ledger, pencil_poly, pi_coeffs, pi_of_pencil,
                           pi_residual_bound, pi_residual_norm_sq, pi_sup_norm, sigma_build,
                           sigma_residual_norm_sq)
from fockopa.specrad import burnside_triangularize


def form_of(text, seed=0):
    pencil, _ = linearize(parse(text, exact=True))
    return burnside_triangularize(pencil.A, seed=seed)


def random_contraction(rng, d, m):
    M = MatrixTuple(rng.standard_normal((d, m, m)))
    return M.scaled(rng.uniform(0.3, 1.0) / col_norm(M))


def test_pi_identity_exact():
    # pi_n(z)(1 - z) - 1 = -(1/(n+2)) sum_{k<=n+1} z^k
    for n in range(8):
        c = pi_coeffs(n, exact=True)
        prod = [Fraction(0)] * (n + 2)
        for k, a in enumerate(c):
            prod[k] += a
            prod[k + 1] -= a
        prod[0] -= 1
        assert prod == [Fraction(-1, n + 2)] * (n + 2)


def test_pi_sup_norm():
    assert pi_sup_norm(0) == Fraction(1, 2)
    assert pi_sup_norm(9) == 5
    z = np.exp(2j * np.pi * np.linspace(0, 1, 721))
    vals = np.abs(np.polyval(pi_coeffs(6)[::-1], z))
    assert vals.max() == pytest.approx(3.5)


def test_structured_nodes_expand_consistently():
    rng = np.random.default_rng(0)
    M = random_contraction(rng, 2, 2)
    Mx = FreePoly.linear(list(M.mats))
    P2 = PencilPower(M, 2)
    assert P2.expand().allclose(mul(Mx, Mx))
    assert P2.norm_sq() == pytest.approx(norm_sq(P2.expand()))
    S = PencilSeries(M, [1.0, -0.5, 0.25])
    assert S.norm_sq() == pytest.approx(norm_sq(S.expand()))
    C = Const(np.eye(2), 2)
    B = Block(C, Scaled(2.0, Product(P2, C)), S)
    E = B.expand()
    assert E.shape == (4, 4) and B.degree == 2
    assert E.block(0, 2, 2, 4).allclose(2.0 * mul(Mx, Mx))


def test_pi_of_pencil_rejects_expansion():
    M = MatrixTuple(np.stack([np.eye(2) * 1.5, np.zeros((2, 2))]))
    with pytest.raises(ContractionError):
        pi_of_pencil(M, 3)


def test_pi_residual_bound_dominates():
    rng = np.random.default_rng(1)
    for _ in range(10):
        M = random_contraction(rng, 2, 2)
        for n in (1, 5, 40):
            assert pi_residual_norm_sq(M, n) <= pi_residual_bound(M, n) + 1e-14


def test_nominal_degrees():
    assert nominal_degree_bound(2, 1) == 2
    assert nominal_degree_bound(2, 2) == 1 + 2 + 8
    assert nominal_degree_bound(2, 3) == 2 + 2 + 8 + 512


def test_single_block_sigma_is_pi():
    form = form_of("1 - x1*x2")
    sig = sigma_build(form, 4)
    assert sig.degree == 4
    exact = sigma_residual_norm_sq(form, sig, "exact").value
    assert exact == pytest.approx(pi_residual_norm_sq(form.diagonal[0], 4), abs=1e-12)


@pytest.mark.parametrize("text", ["(1 - x1)*(1 - x2)", "(1 - x1)*(1 - x1*x2)", "(1 - x1*x2)*(1 - x2)",
                                  "(1 - x1)^3"])
def test_structural_equals_exact_and_bound_dominates(text):
    form = form_of(text)
    sig = sigma_build(form, 2, N_override=2)
    exact = sigma_residual_norm_sq(form, sig, "exact").value
    structural = sigma_residual_norm_sq(form, sig, "structural").value
    blockwise = sigma_residual_norm_sq(form, sig, "blockwise")
    assert structural == pytest.approx(exact, rel=1e-10)
    assert blockwise.certified
    assert exact <= blockwise.value + 1e-10
    assert sig.degree <= sig.degree_bound


def test_zero_blocks_cancel_exactly():
    form = form_of("(1 - x1)*(1 - x1*x2)")
    assert any(form.zero_flags)
    sig = sigma_build(form, 2, N_override=2)
    rep = sigma_residual_norm_sq(form, sig, "blockwise")
    zero_blocks = [b for b in rep.blocks if b["how"] in ("zero block", "exact cancellation")]
    assert zero_blocks and all(b["value"] == 0.0 for b in zero_blocks)


def test_opa_beats_sigma():
    form = form_of("(1 - x1)*(1 - x2)")
    sig = sigma_build(form, 2, N_override=2)
    exact = sigma_residual_norm_sq(form, sig, "exact").value
    assert solve_opa(pencil_poly(form), sig.degree).c_n <= exact + 1e-10


def test_default_inner_degree_ledger():
    form = form_of("(1 - x1)*(1 - x2)")
    for n in range(1, 6):
        sig = sigma_build(form, n)
        assert sig.levels[-1].N == n ** 3
        assert sig.degree == sig.degree_bound == 1 + n + n ** 3


def test_expansion_capacity_guard():
    form = form_of("(1 - x1)*(1 - x2)")
    sig = sigma_build(form, 3)
    with pytest.raises(CapacityError):
        sig.poly.expand()


def test_ledger_is_serializable():
    import json

    form = form_of("(1 - x1)*(1 - x2)")
    sig = sigma_build(form, 2)
    doc = ledger(sig, [sigma_residual_norm_sq(form, sig, "blockwise")])
    text = json.dumps(doc, default=str)
    assert '"ell": 2' in text
    assert doc["levels"][1]["K"] > 0


def test_pi_residual_small_cases():
    one = MatrixTuple.of([[1.0]])
    for n in range(6):
        assert pi_residual_norm_sq(one, n) == pytest.approx(1 / (n + 2), abs=1e-15)
    zero = MatrixTuple(np.zeros((2, 3, 3)))
    assert pi_residual_norm_sq(zero, 0) == pytest.approx(3 / 4)
