import numpy as np
import pytest
from scipy import integrate

from liequant.errors import ResolutionError
from liequant.garding import parity_integrals
from liequant.groups import SU2, TORUS1, haar_grid, torus
from liequant.mollifier import (Mollifier, MollifierSpec, ball_rule, build_mollifier, mollifier_at,
                                normalization_constant)

MS = MollifierSpec()


def _phi_sq_moment(power):
    r = MS.radius(SU2)
    val, _ = integrate.quad(lambda s: float(MS.phi(np.array([s]), SU2)[0]) ** 2 * s ** power, 0, r,
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def test_normalization_constant_against_adaptive_quadrature():
    # torus T^1: 2 int_0^r phi^2 ds / (2 pi) = C0^-2
    c_t1 = (2 * _phi_sq_moment(0) / (2 * np.pi)) ** -0.5
    # SU(2): 4 pi int phi^2 s^2 ds / (16 pi^2) = C0^-2
    c_su2 = (4 * np.pi * _phi_sq_moment(2) / (16 * np.pi ** 2)) ** -0.5
    assert normalization_constant(TORUS1, MS) == pytest.approx(c_t1, rel=1e-10)
    assert normalization_constant(SU2, MS) == pytest.approx(c_su2, rel=1e-10)


def test_normalization_constants_frozen():
    assert normalization_constant(SU2, MS) == pytest.approx(5.2984981672098, rel=1e-12)
    assert normalization_constant(TORUS1, MS) == pytest.approx(1.6990495394974805, rel=1e-12)
    assert normalization_constant(torus(2), MS) == pytest.approx(3.235163813304965, rel=1e-12)


def test_phi_profile():
    r = MS.radius(SU2)
    s = np.array([0.0, 0.25 * r, 0.5 * r, 0.75 * r, r, 1.1 * r])
    v = MS.phi(s, SU2)
    assert v[0] == v[1] == v[2] == 1.0
    assert v[3] == pytest.approx(0.5, abs=1e-12)
    assert v[4] == 0.0 and v[5] == 0.0


@pytest.mark.parametrize("spec", [SU2, TORUS1, torus(2)], ids=lambda s: s.name)
def test_norm_and_identity_value(spec):
    for wt in (1.0, 3.0, 17.0):
        raw = Mollifier(spec, wt, MS, renormalize=False)
        assert raw.value_at_identity == pytest.approx(raw.C0 * wt ** (spec.dim / 4), rel=1e-14)
        assert abs(raw.norm() - 1.0) < 1e-10
        mol = mollifier_at(spec, wt, MS)
        assert abs(mol.norm() - 1.0) < 1e-12


@pytest.mark.parametrize("spec", [SU2, TORUS1, torus(2)], ids=lambda s: s.name)
def test_ball_rule_integrates_norm(spec):
    mol = mollifier_at(spec, 5.0, MS)
    br = ball_rule(spec, mol.support)
    assert np.sum(br.weights * mol(br.points) ** 2) == pytest.approx(1.0, abs=1e-5)


def test_support_is_exact():
    rng = np.random.default_rng(0)
    for spec in (SU2, TORUS1):
        mol = mollifier_at(spec, 9.0, MS)
        X = rng.standard_normal((4000, spec.n))
        X *= (rng.uniform(0.9, 3.0, 4000) * mol.support / np.linalg.norm(X, axis=1))[:, None]
        pts = spec.exp(X)
        vals = mol(pts)
        outside = spec.dist_to_identity(pts) > mol.support
        assert outside.sum() > 1000
        assert np.all(vals[outside] == 0.0)


def test_grid_mollifier_has_unit_norm_and_checks_resolution():
    quad = haar_grid(SU2, 16)
    gf = build_mollifier(SU2, SU2.weight_of_level(1), MS, quad)
    assert gf.l2_norm() == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(ResolutionError):
        build_mollifier(SU2, SU2.weight_of_level(4), MS, haar_grid(SU2, 2))


def test_radius_bound_enforced():
    with pytest.raises(ValueError):
        MollifierSpec(r=3.0).radius(SU2)


def test_parity_integrals_vanish():
    for spec in (SU2, TORUS1):
        par = parity_integrals(spec, [2.0, 5.0, 11.0], MS)
        assert par["first_moment"] < 1e-9
        assert par["w_times_derivative"] < 1e-9


def test_su2_character_coefficients_parseval():
    mol = mollifier_at(SU2, 4.0, MS)
    J = np.arange(0, 400) / 2
    c = mol.character_coefficients(J, power=1)
    # w is central, so w^(J) = (c_J / d_J) I and ||w||^2 = sum_J d_J Tr(w^ w^*) = sum_J c_J^2
    assert np.sum(c ** 2) == pytest.approx(1.0, abs=1e-6)
