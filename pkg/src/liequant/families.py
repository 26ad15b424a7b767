"""Built-in symbol families for experiments.

Every family except ``multiplication`` with ``g="signed"`` is pointwise
positive semi-definite by construction:

* ``const_identity``: ``I``.
* ``multiplication(g)``: ``g(x) I`` with ``g >= 0`` (``one_plus_cos``).
* ``laplace_power(s)``: ``<xi>^{2s} I``.
* ``degenerate_positive(f, m)``: ``f(x) <xi>^m I`` with ``f >= 0`` vanishing at one point.
* ``vectorfield_square(X, weight)``: ``f(x) dxi(X)^* dxi(X)``, a Gram matrix.
* ``quartic_minus_laplace(X, weight)``: ``f(x) (dxi(X)^* dxi(X))^2 + lambda_xi^2 I``.
* ``random_psd(seed, m)``: ``<xi>^m B(x, xi)^* B(x, xi)`` with ``B`` affine in
  low-degree coordinate functions of ``x`` and in ``dxi(X_j) / <xi>``, with
  Gaussian coefficients drawn from ``seed``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidFamilyError
from .groups import GroupSpec, HaarQuadrature, RepIndex
from .symbols import Symbol, SymbolTerm

FAMILIES = ("const_identity", "multiplication", "laplace_power", "degenerate_positive",
            "vectorfield_square", "quartic_minus_laplace", "random_psd")


# ---------------------------------------------------------------------------
# scalar weights


@dataclass(frozen=True)
class ScalarWeight:
    """Named real function on the group with known band limit."""

    spec: GroupSpec
    name: str

    @property
    def degree(self) -> float:
        if self.name == "one":
            return 0.0
        return 1.0 if self.spec.is_torus else 0.5

    @property
    def nonnegative(self) -> bool:
        return self.name in ("one", "one_plus_cos")

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if self.name == "one":
            return np.ones(points.shape[:-1])
        base = np.cos(points[..., 0]) if self.spec.is_torus else points[..., 0]
        if self.name == "one_plus_cos":
            return 1.0 + base
        if self.name == "signed":
            return base
        raise InvalidFamilyError(f"unknown weight function {self.name!r}")


def scalar_weight(spec: GroupSpec, name: str | None) -> ScalarWeight | None:
    if name is None or name == "none":
        return None
    if name not in ("one", "one_plus_cos", "signed"):
        raise InvalidFamilyError(f"unknown weight function {name!r}")
    return ScalarWeight(spec, name)


# ---------------------------------------------------------------------------
# matrix multipliers


@dataclass(frozen=True)
class IdentityPower:
    """``<xi>^power I``."""

    power: float

    def __call__(self, idx: RepIndex) -> np.ndarray:
        return idx.weight ** self.power * np.eye(idx.dim)


@dataclass(frozen=True)
class VectorFieldSquare:
    """``dxi(X)^* dxi(X)`` or its square plus ``lambda^2 I``."""

    spec: GroupSpec
    direction: tuple
    quartic: bool = False

    def __call__(self, idx: RepIndex) -> np.ndarray:
        D = self.spec.lie_rep(idx, np.array(self.direction, dtype=float))
        G = D.conj().T @ D
        if self.quartic:
            return G @ G
        return G


@dataclass(frozen=True)
class RandomFactorProduct:
    """``<xi>^m B_r(xi)^* B_s(xi)`` with ``B_r = sum_k c_rk E_k(xi)``.

    ``E_0 = I`` and ``E_j = dxi(X_j) / <xi>``, so every ``B_r`` is a symbol
    of order zero.
    """

    spec: GroupSpec
    coeffs_r: tuple
    coeffs_s: tuple
    m: float

    def _factor(self, coeffs, idx: RepIndex) -> np.ndarray:
        B = coeffs[0] * np.eye(idx.dim, dtype=complex)
        for j, c in enumerate(coeffs[1:]):
            B = B + c * self.spec.lie_rep(idx, self.spec.unit_vector(j)) / idx.weight
        return B

    def __call__(self, idx: RepIndex) -> np.ndarray:
        Br = self._factor(self.coeffs_r, idx)
        Bs = self._factor(self.coeffs_s, idx)
        return idx.weight ** self.m * (Br.conj().T @ Bs)


def random_coefficients(spec: GroupSpec, seed: int, nfactors: int) -> np.ndarray:
    """Complex Gaussian coefficients ``c_rk`` drawn once from ``seed``."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((nfactors, spec.n + 1)) + 1j * rng.standard_normal((nfactors, spec.n + 1))
    return c / np.sqrt(2.0 * nfactors * (spec.n + 1))


@dataclass(frozen=True)
class _CoordinateProduct:
    spec: GroupSpec
    r: int
    s: int

    def _coord(self, k, points):
        if k == 0:
            return np.ones(points.shape[:-1])
        if self.spec.is_torus:
            j, trig = divmod(k - 1, 2)
            return np.cos(points[..., j]) if trig == 0 else np.sin(points[..., j])
        return points[..., k]

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        return self._coord(self.r, points) * self._coord(self.s, points)


# ---------------------------------------------------------------------------


def default_direction(spec: GroupSpec) -> tuple:
    X = np.zeros(spec.n)
    X[-1 if not spec.is_torus else 0] = 1.0
    return tuple(float(v) for v in X)


def builtin_symbol_family(name: str, params: dict | None, quad: HaarQuadrature,
                          max_weight: float) -> Symbol:
    """Build a named family on ``quad`` up to ``max_weight``.

    The returned symbol carries ``order``, ``x_degree`` and a boolean
    attribute ``psd`` stating whether it is pointwise positive semi-definite
    by construction.
    """
    params = dict(params or {})
    spec = quad.spec
    eye = IdentityPower(0.0)
    psd = True
    if name == "const_identity":
        terms, order, deg = [SymbolTerm(None, eye)], 0.0, 0.0
    elif name == "multiplication":
        g = scalar_weight(spec, params.get("g", "one_plus_cos"))
        terms, order, deg = [SymbolTerm(g, eye)], 0.0, g.degree
        psd = g.nonnegative
    elif name == "laplace_power":
        s = float(params.get("s", 1.0))
        terms, order, deg = [SymbolTerm(None, IdentityPower(2 * s))], 2 * s, 0.0
    elif name == "degenerate_positive":
        f = scalar_weight(spec, params.get("f", "one_plus_cos"))
        m = float(params.get("m", 1.0))
        if not f.nonnegative:
            raise InvalidFamilyError("degenerate_positive needs a nonnegative f")
        terms, order, deg = [SymbolTerm(f, IdentityPower(m))], m, f.degree
    elif name in ("vectorfield_square", "quartic_minus_laplace"):
        X = tuple(float(v) for v in params.get("X", default_direction(spec)))
        if len(X) != spec.n:
            raise InvalidFamilyError(f"direction needs {spec.n} components")
        f = scalar_weight(spec, params.get("weight"))
        if f is not None and not f.nonnegative:
            raise InvalidFamilyError("the weight must be nonnegative")
        quartic = name == "quartic_minus_laplace"
        S = VectorFieldSquare(spec, X, quartic)
        terms = [SymbolTerm(f, S)]
        if quartic:
            terms.append(SymbolTerm(None, _LaplaceEigen()))
        order = 4.0 if quartic else 2.0
        deg = 0.0 if f is None else f.degree
    elif name == "random_psd":
        seed = int(params.get("seed", 0))
        m = float(params.get("m", 0.0))
        nco = 1 + (2 * spec.n if spec.is_torus else 3)
        C = random_coefficients(spec, seed, nco)
        terms = []
        for r in range(nco):
            for s in range(nco):
                g = None if r == s == 0 else _CoordinateProduct(spec, r, s)
                S = RandomFactorProduct(spec, tuple(complex(v) for v in C[r]),
                                        tuple(complex(v) for v in C[s]), m)
                terms.append(SymbolTerm(g, S))
        order = m
        deg = 2.0 if spec.is_torus else 1.0
    else:
        raise InvalidFamilyError(f"unknown symbol family {name!r}; choose from {', '.join(FAMILIES)}")
    sym = Symbol(spec, max_weight, quad=quad, terms=terms, order=order, x_degree=deg,
                 name=name, hermitian=True)
    sym.psd = psd
    return sym


@dataclass(frozen=True)
class _LaplaceEigen:
    def __call__(self, idx: RepIndex) -> np.ndarray:
        return idx.lambda_sq * np.eye(idx.dim)
