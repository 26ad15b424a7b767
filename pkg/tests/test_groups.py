import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liequant.errors import DomainError, SpecMismatchError
from liequant.groups import SU2, TORUS1, haar_grid, spin_generators, torus

GROUPS = [SU2, TORUS1, torus(2)]


@pytest.mark.parametrize("spec", GROUPS, ids=lambda s: s.name)
def test_exp_log_roundtrip(spec):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((200, spec.n))
    X *= (0.95 * np.pi * rng.uniform(0, 1, 200) / np.linalg.norm(X, axis=1))[:, None]
    np.testing.assert_allclose(spec.log(spec.exp(X)), X, atol=1e-12)
    np.testing.assert_allclose(spec.dist_to_identity(spec.exp(X)), np.linalg.norm(X, axis=1), atol=1e-12)


def test_log_outside_injectivity_radius_raises():
    with pytest.raises(DomainError):
        SU2.log(SU2.exp(np.array([[0.0, 0.0, 3.2]])))


def test_point_shape_checked():
    with pytest.raises(SpecMismatchError):
        SU2.mul(np.zeros((2, 3)), np.zeros((2, 3)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), two_l=st.integers(0, 8))
def test_su2_representation_is_unitary_homomorphism(seed, two_l):
    rng = np.random.default_rng(seed)
    g, h = SU2.random(rng, (2,))
    idx = SU2.su2_index(two_l / 2)
    Rg, Rh, Rgh = SU2.rep(g, idx), SU2.rep(h, idx), SU2.rep(SU2.mul(g, h), idx)
    np.testing.assert_allclose(Rg @ Rh, Rgh, atol=1e-12)
    np.testing.assert_allclose(Rg @ Rg.conj().T, np.eye(idx.dim), atol=1e-12)
    np.testing.assert_allclose(SU2.rep(SU2.inv(g), idx), Rg.conj().T, atol=1e-12)


def test_spin_generators_commutation_and_casimir():
    for two_l in range(0, 7):
        J = spin_generators(two_l)
        np.testing.assert_allclose(J[0] @ J[1] - J[1] @ J[0], J[2], atol=1e-12)
        l = two_l / 2
        casimir = -(J[0] @ J[0] + J[1] @ J[1] + J[2] @ J[2])
        np.testing.assert_allclose(casimir, l * (l + 1) * np.eye(two_l + 1), atol=1e-10)


def test_lie_rep_is_derivative_of_rep():
    idx = SU2.su2_index(1.5)
    X = np.array([0.3, -0.2, 0.7])
    h = 1e-6
    fd = (SU2.rep(SU2.exp(h * X), idx) - SU2.rep(SU2.exp(-h * X), idx)) / (2 * h)
    np.testing.assert_allclose(fd, SU2.lie_rep(idx, X), atol=1e-8)


@pytest.mark.parametrize("spec,level", [(SU2, 3.0), (TORUS1, 8.0), (torus(2), 4.0)],
                         ids=["su2", "torus1", "torus2"])
def test_haar_grid_schur_orthogonality(spec, level):
    quad = haar_grid(spec, 2 * level)
    idxs = spec.dual_upto(level)
    for a in idxs:
        Ra = spec.rep(quad.nodes, a)
        for b in idxs:
            Rb = spec.rep(quad.nodes, b)
            G = np.einsum("n,nij,nkl->ijkl", quad.weights, Ra, Rb.conj())
            if a.label == b.label:
                expect = np.einsum("ik,jl->ijkl", np.eye(a.dim), np.eye(a.dim)) / a.dim
                np.testing.assert_allclose(G, expect, atol=1e-12)
            else:
                assert np.abs(G).max() < 1e-12


def test_weights_and_dual_ordering():
    W = SU2.weight_of_level(2.0)
    idxs = SU2.dual(W)
    assert [i.label for i in idxs] == [(0,), (1,), (2,), (3,), (4,)]
    assert idxs[-1].weight == pytest.approx(np.sqrt(7.0))
    assert [i.label for i in TORUS1.dual_upto(2)] == [(0,), (-1,), (1,), (-2,), (2,)]
