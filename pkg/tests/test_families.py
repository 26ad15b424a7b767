import numpy as np
import pytest

from liequant.errors import InvalidFamilyError
from liequant.families import FAMILIES, builtin_symbol_family
from liequant.groups import SU2, TORUS1, haar_grid, torus

SPECS = [(SU2, 3.0), (TORUS1, 12.0), (torus(2), 4.0)]
WEIGHTED = [("vectorfield_square", {"weight": "one_plus_cos"}),
            ("quartic_minus_laplace", {"weight": "one_plus_cos"}),
            ("random_psd", {"seed": 1, "m": 1.0})]


@pytest.mark.parametrize("spec,level", SPECS, ids=lambda v: getattr(v, "name", str(v)))
@pytest.mark.parametrize("name,params", [(f, {}) for f in FAMILIES] + WEIGHTED,
                         ids=[f for f in FAMILIES] + [f"{n}-variant" for n, _ in WEIGHTED])
def test_family_is_pointwise_psd(spec, level, name, params):
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level + 2)
    sigma = builtin_symbol_family(name, params, quad, W)
    assert sigma.psd
    for i in sigma.indices:
        S = sigma.at_points(i)
        np.testing.assert_allclose(S, np.swapaxes(S.conj(), -1, -2), atol=1e-12 * max(1.0, np.abs(S).max()))
        lam = np.linalg.eigvalsh(S).min()
        assert lam >= -1e-12 * max(1.0, np.abs(S).max())


def test_signed_multiplication_is_not_psd():
    quad = haar_grid(SU2, 4)
    sigma = builtin_symbol_family("multiplication", {"g": "signed"}, quad, SU2.weight_of_level(1))
    assert not sigma.psd
    assert min(np.linalg.eigvalsh(sigma.at_points(i)).min() for i in sigma.indices) < 0


@pytest.mark.parametrize("name,params", [
    ("no_such_family", {}),
    ("multiplication", {"g": "bogus"}),
    ("degenerate_positive", {"f": "signed"}),
    ("vectorfield_square", {"X": [1.0, 0.0]}),
    ("quartic_minus_laplace", {"weight": "signed"}),
])
def test_invalid_family_parameters_raise(name, params):
    with pytest.raises(InvalidFamilyError):
        builtin_symbol_family(name, params, haar_grid(SU2, 4), SU2.weight_of_level(1))


def test_random_psd_is_deterministic_in_seed():
    quad = haar_grid(SU2, 6)
    W = SU2.weight_of_level(2)
    a = builtin_symbol_family("random_psd", {"seed": 7, "m": 1.0}, quad, W)
    b = builtin_symbol_family("random_psd", {"seed": 7, "m": 1.0}, quad, W)
    c = builtin_symbol_family("random_psd", {"seed": 8, "m": 1.0}, quad, W)
    for i in a.indices:
        np.testing.assert_array_equal(a.at_points(i), b.at_points(i))
    assert max(np.abs(a.at_points(i) - c.at_points(i)).max() for i in a.indices) > 1e-3


def test_family_orders():
    quad = haar_grid(SU2, 4)
    W = SU2.weight_of_level(1)
    expect = {"const_identity": 0.0, "laplace_power": 2.0, "degenerate_positive": 1.0,
              "vectorfield_square": 2.0, "quartic_minus_laplace": 4.0, "random_psd": 0.0}
    for name, order in expect.items():
        assert builtin_symbol_family(name, {}, quad, W).order == order
