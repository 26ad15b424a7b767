import numpy as np
import pytest

from liequant.families import builtin_symbol_family
from liequant.groups import SU2, TORUS1, haar_grid
from liequant.harmonic import SpectralField, inverse_ft
from liequant.operators import TruncatedOperator, identity_operator
from liequant.symbols import (constant_symbol, dd_family, difference_op, estimate_order, extract_symbol,
                              identity_symbol, leibniz_residual, multiplication_symbol, quantize,
                              quantize_matrix, torus_family)


@pytest.mark.parametrize("spec,level", [(SU2, 3.0), (TORUS1, 10.0)], ids=["su2", "torus1"])
def test_identity_symbol_quantizes_to_identity(spec, level):
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level)
    A = quantize_matrix(identity_symbol(quad, W))
    np.testing.assert_allclose(A.matrix, identity_operator(spec, W).matrix, atol=1e-12)


def test_multiplier_acts_blockwise():
    rng = np.random.default_rng(2)
    spec, level = SU2, 2.5
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level)
    S = SpectralField.random(spec, W, rng)
    A = quantize_matrix(constant_symbol(quad, W, lambda i: S[i]))
    F = SpectralField.random(spec, W, rng)
    AF = A.apply(F)
    for i, m, f in zip(F.indices, AF.mats, F.mats):
        np.testing.assert_allclose(m, S[i] @ f, atol=1e-12)


def test_multiplication_symbol_is_pointwise_product():
    rng = np.random.default_rng(4)
    spec, level = SU2, 3.0
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level + 1)
    g = lambda x: 1.0 + x[..., 0]
    F = SpectralField.random(spec, W, rng)
    f = inverse_ft(F, quad)
    Af = quantize(multiplication_symbol(quad, W, g, x_degree=0.5), f)
    np.testing.assert_allclose(Af.values, g(quad.nodes) * f.values, atol=1e-11)


@pytest.mark.parametrize("spec,level", [(SU2, 3.0), (TORUS1, 16.0)], ids=["su2", "torus1"])
def test_extract_then_quantize_random_operator(spec, level):
    rng = np.random.default_rng(5)
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level)
    n = identity_operator(spec, W).size
    A = TruncatedOperator(spec, W, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    B = quantize_matrix(extract_symbol(A, W, quad), quad)
    np.testing.assert_allclose(B.matrix, A.matrix, atol=1e-11)


def test_quantize_then_extract_family_symbol():
    spec, level = SU2, 3.0
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level + 2)
    sigma = builtin_symbol_family("random_psd", {"seed": 3, "m": 1.0}, quad, W)
    back = extract_symbol(quantize_matrix(sigma), W, quad)
    # compression only preserves indices whose x-modes stay below the cutoff
    for i in sigma.indices:
        if i.level + sigma.x_degree > level:
            continue
        np.testing.assert_allclose(back.at_points(i), sigma.at_points(i), atol=1e-11)


def test_torus_difference_is_backward_shift():
    quad = haar_grid(TORUS1, 16)
    W = TORUS1.weight_of_level(6)
    sigma = constant_symbol(quad, W, lambda i: np.array([[float(i.label[0]) ** 2]]))
    q = torus_family(TORUS1).funcs[0]
    D = difference_op(q, sigma, 1.0)
    for i in sigma.indices:
        k = i.label[0]
        if abs(k) < 6:
            assert D.at_points(i)[0, 0, 0].real == pytest.approx((k - 1) ** 2 - k ** 2, abs=1e-12)


def test_leibniz_rule_su2_and_torus_shift():
    rng = np.random.default_rng(6)
    for spec, level, tol in ((SU2, 3.0, 1e-9), (TORUS1, 16.0, 1e-12)):
        fam = dd_family(spec)
        W = spec.weight_of_level(level)
        a, b = SpectralField.random(spec, W, rng), SpectralField.random(spec, W, rng)
        res = max(leibniz_residual(fam, a, b, ij) for ij in fam.labels)
        assert res <= tol


def test_order_of_laplace_power_fits_two():
    W = SU2.weight_of_level(12)
    sigma = builtin_symbol_family("laplace_power", {"s": 1.0}, haar_grid(SU2, 2), W)
    rep = estimate_order(sigma, dd_family(SU2), alpha_max=1)
    assert rep.m == pytest.approx(2.0, abs=1e-6)
    assert rep.rho == pytest.approx(1.0, abs=0.05)
