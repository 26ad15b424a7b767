"""Matrix-valued symbols and the difference/derivative calculus.

A symbol assigns to every point ``x`` and index ``xi`` a ``d x d`` matrix
``sigma(x, xi)``; it is tied to sample points (normally the nodes of a
quadrature) and a weight cutoff. Three storage forms are supported:

* ``terms``: a finite sum ``sum_r g_r(x) S_r(xi)`` with callables,
* ``func``: a callable ``func(points, idx)``,
* ``grid``: tabulated values at the sample points only.

Quantization::

    (A f)(x) = sum_xi dim(xi) Tr(xi(x) sigma(x, xi) f^(xi))

and extraction ``sigma_A(x, xi) = xi(x)^* (A xi)(x)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InsufficientDataError, InvalidFamilyError, SpecMismatchError
from .groups import GroupSpec, HaarQuadrature, RepIndex, haar_grid
from .harmonic import (GridFunction, SpectralField, analysis, check_exactness, forward_ft,
                       rep_values, synthesis, synthesis_at)
from .operators import TruncatedOperator, coefficients_from_values, operator_values


# ---------------------------------------------------------------------------
# symbol container


@dataclass(frozen=True)
class SymbolTerm:
    """One separable piece ``g(x) S(xi)``; ``g=None`` means ``g == 1``."""

    g: Optional[Callable]
    S: Callable

    def gvals(self, points) -> np.ndarray:
        if self.g is None:
            return np.ones(np.shape(points)[:-1])
        return np.asarray(self.g(points))


class TableMultiplier:
    """Callable ``idx -> matrix`` backed by a dictionary of matrices."""

    def __init__(self, mats: dict, dims: dict):
        self.mats = mats
        self.dims = dims

    def __call__(self, idx: RepIndex) -> np.ndarray:
        try:
            return self.mats[idx.label]
        except KeyError:
            raise SpecMismatchError(f"multiplier not tabulated at {idx}") from None

    @classmethod
    def from_lists(cls, indices, mats) -> "TableMultiplier":
        return cls({i.label: np.asarray(m) for i, m in zip(indices, mats)}, {i.label: i.dim for i in indices})


class Symbol:
    """A symbol on a weight cutoff, sampled at ``points``.

    Parameters
    ----------
    spec : GroupSpec
    max_weight : float
        Indices with weight ``<= max_weight`` are part of the symbol.
    quad : HaarQuadrature, optional
        When given, the sample points are its nodes and the symbol can be
        quantized on it.
    points : ndarray, optional
        Sample points when no quadrature is attached.
    terms, func, grid
        Storage forms, see the module docstring. ``grid`` maps index labels
        to arrays of shape ``(Npoints, d, d)``.
    order : float, optional
        Nominal order ``m`` (metadata).
    x_degree : float, optional
        Band limit of ``x -> sigma(x, xi)`` (spin on SU(2), sup-frequency on
        T^n) when known; ``0`` for x-independent symbols.
    """

    def __init__(self, spec: GroupSpec, max_weight: float, *, quad: HaarQuadrature | None = None,
                 points=None, terms: Sequence[SymbolTerm] | None = None, func: Callable | None = None,
                 grid: dict | None = None, order: float | None = None, x_degree: float | None = None,
                 name: str = "symbol", hermitian: bool = False):
        if quad is not None:
            if quad.spec != spec:
                raise SpecMismatchError("quadrature built for another group")
            points = quad.nodes
        if points is None:
            raise ValueError("a symbol needs a quadrature or sample points")
        if terms is None and func is None and grid is None:
            raise ValueError("a symbol needs terms, func or grid values")
        self.spec = spec
        self.max_weight = float(max_weight)
        self.quad = quad
        self.points = spec.check_points(points)
        self.terms = tuple(terms) if terms is not None else None
        self.func = func
        self.grid = dict(grid) if grid is not None else None
        self.order = order
        if x_degree is None and self.terms is not None and all(t.g is None for t in self.terms):
            x_degree = 0.0
        self.x_degree = x_degree
        self.name = name
        self.hermitian = hermitian
        self._cache: dict = {}

    # ------------------------------------------------------------------
    @property
    def indices(self) -> list:
        return self.spec.dual(self.max_weight)

    @property
    def npoints(self) -> int:
        return self.points.shape[0]

    @property
    def x_independent(self) -> bool:
        return self.x_degree == 0.0

    @property
    def analytic(self) -> bool:
        """True when the symbol can be evaluated at arbitrary points."""
        return self.terms is not None or self.func is not None

    def evaluate(self, points, idx: RepIndex) -> np.ndarray:
        """``sigma(points, idx)`` with shape ``points.shape[:-1] + (d, d)``."""
        points = np.asarray(points, dtype=float)
        if self.terms is not None:
            out = 0.0
            for t in self.terms:
                out = out + t.gvals(points)[..., None, None] * np.asarray(t.S(idx))
            return np.asarray(out, dtype=complex) * np.ones(points.shape[:-1] + (1, 1))
        if self.func is not None:
            return np.asarray(self.func(points, idx), dtype=complex)
        if points.shape == self.points.shape and np.array_equal(points, self.points):
            return self.grid[idx.label]
        return self._interpolate(points, idx)

    def at_points(self, idx: RepIndex) -> np.ndarray:
        """Values at the symbol's own sample points, ``(Npoints, d, d)``."""
        hit = self._cache.get(idx.label)
        if hit is None:
            if self.grid is not None and self.terms is None and self.func is None:
                hit = self.grid[idx.label]
            else:
                hit = self.evaluate(self.points, idx)
            self._cache[idx.label] = hit
        return hit

    def _interpolate(self, points, idx: RepIndex) -> np.ndarray:
        """Band-limited interpolation of tabulated values in ``x``."""
        if self.quad is None:
            raise SpecMismatchError("tabulated symbol without quadrature cannot be interpolated")
        wx = self.spec.weight_of_level(self.quad.level / 2)
        xid = self.spec.dual(wx)
        vals = self.grid[idx.label].reshape(self.npoints, -1)
        mats = analysis(self.quad, vals, xid)
        out = synthesis_at_batch(self.spec, points, mats, xid)
        return out.reshape(points.shape[:-1] + (idx.dim, idx.dim))

    def with_values(self, grid: dict, name: str | None = None) -> "Symbol":
        return Symbol(self.spec, self.max_weight, quad=self.quad,
                      points=None if self.quad is not None else self.points,
                      grid=grid, order=self.order, name=name or self.name)

    def tabulate(self) -> dict:
        return {i.label: self.at_points(i) for i in self.indices}

    def sup_norm(self, idx: RepIndex) -> float:
        return float(op_norm(self.at_points(idx)).max())


def synthesis_at_batch(spec: GroupSpec, points, mats, indices) -> np.ndarray:
    """Peter-Weyl sums with a trailing batch axis evaluated at arbitrary points."""
    points = np.asarray(points, dtype=float)
    kb = mats[0].shape[2] if mats[0].ndim == 3 else 1
    out = np.zeros(points.shape[:-1] + (kb,), dtype=complex)
    for idx, m in zip(indices, mats):
        R = spec.rep(points, idx)
        out += idx.dim * np.einsum("...ab,baK->...K", R, m.reshape(idx.dim, idx.dim, kb))
    return out


def op_norm(mats) -> np.ndarray:
    """Largest singular value over the trailing two axes."""
    mats = np.asarray(mats)
    if mats.shape[-1] == 1:
        return np.abs(mats[..., 0, 0])
    return np.linalg.svd(mats, compute_uv=False)[..., 0]


# ---------------------------------------------------------------------------
# constructors


def constant_symbol(quad: HaarQuadrature, max_weight: float, S: Callable, **kw) -> Symbol:
    """x-independent symbol ``sigma(x, xi) = S(xi)``."""
    return Symbol(quad.spec, max_weight, quad=quad, terms=[SymbolTerm(None, S)], **kw)


def identity_symbol(quad: HaarQuadrature, max_weight: float) -> Symbol:
    return constant_symbol(quad, max_weight, lambda i: np.eye(i.dim), order=0.0, name="identity",
                           hermitian=True)


def multiplication_symbol(quad: HaarQuadrature, max_weight: float, g: Callable, x_degree=None) -> Symbol:
    return Symbol(quad.spec, max_weight, quad=quad, terms=[SymbolTerm(g, lambda i: np.eye(i.dim))],
                  order=0.0, x_degree=x_degree, name="multiplication")


def multiplier_symbol(quad: HaarQuadrature, F: SpectralField) -> Symbol:
    """x-independent symbol from a spectral field."""
    table = TableMultiplier.from_lists(F.indices, F.mats)
    return constant_symbol(quad, F.max_weight, table, name="multiplier")


def random_grid_symbol(quad: HaarQuadrature, max_weight: float, rng: np.random.Generator) -> Symbol:
    grid = {}
    for i in quad.spec.dual(max_weight):
        grid[i.label] = rng.standard_normal((quad.size, i.dim, i.dim)) + \
            1j * rng.standard_normal((quad.size, i.dim, i.dim))
    return Symbol(quad.spec, max_weight, quad=quad, grid=grid, name="random")


# ---------------------------------------------------------------------------
# quantization and extraction


def _block_images(sigma: Symbol, quad: HaarQuadrature, idx: RepIndex) -> np.ndarray:
    """``xi(x) sigma(x, xi)`` at the nodes of ``quad``, shape ``(N, d, d)``."""
    R = rep_values(quad, idx)
    if sigma.terms is not None:
        out = 0.0
        for t in sigma.terms:
            out = out + t.gvals(quad.nodes)[:, None, None] * (R @ np.asarray(t.S(idx)))
        return np.asarray(out, dtype=complex)
    if quad is not sigma.quad and sigma.func is None:
        raise SpecMismatchError("tabulated symbols quantize only on their own quadrature")
    S = sigma.evaluate(quad.nodes, idx) if quad is not sigma.quad else sigma.at_points(idx)
    return R @ S


def quantize(sigma: Symbol, f: GridFunction) -> GridFunction:
    """Apply ``Op(sigma)`` to a band-limited grid function."""
    quad = f.quad
    F = forward_ft(f, sigma.max_weight)
    if sigma.terms is not None:
        out = np.zeros(quad.size, dtype=complex)
        for t in sigma.terms:
            mats = [np.asarray(t.S(i)) @ m for i, m in zip(F.indices, F.mats)]
            out += t.gvals(quad.nodes) * synthesis(quad, mats, F.indices)
        return GridFunction(quad, out)
    out = np.zeros(quad.size, dtype=complex)
    for idx, m in zip(F.indices, F.mats):
        Y = _block_images(sigma, quad, idx)
        out += idx.dim * np.einsum("nab,ba->n", Y, m)
    return GridFunction(quad, out)


def quantize_matrix(sigma: Symbol, quad: HaarQuadrature | None = None,
                    max_weight: float | None = None) -> TruncatedOperator:
    """Galerkin matrix of ``Op(sigma)`` on the cutoff of ``sigma``.

    Column ``(xi, i, j)`` is the coefficient vector of
    ``sqrt(d) [xi(x) sigma(x, xi)]_ij``.
    """
    quad = quad or sigma.quad
    W = sigma.max_weight if max_weight is None else max_weight
    cols = []
    for idx in quad.spec.dual(W):
        if idx.weight > sigma.max_weight + 1e-9:
            raise SpecMismatchError("matrix cutoff exceeds the symbol cutoff")
        Y = np.sqrt(idx.dim) * _block_images(sigma, quad, idx)
        cols.append(coefficients_from_values(quad, Y.reshape(quad.size, -1), W))
    return TruncatedOperator(quad.spec, W, np.concatenate(cols, axis=1))


def extract_symbol(A, max_weight: float, quad: HaarQuadrature) -> Symbol:
    """Symbol ``xi(x)^* (A xi)(x)`` of an operator.

    ``A`` is either a :class:`TruncatedOperator` or a callable mapping node
    values of shape ``(N, k)`` to the same shape.
    """
    grid = {}
    for idx in quad.spec.dual(max_weight):
        R = rep_values(quad, idx)
        cols = R.reshape(quad.size, -1)
        if isinstance(A, TruncatedOperator):
            AR = operator_values(A, quad, cols)
        else:
            AR = np.asarray(A(cols), dtype=complex)
        AR = AR.reshape(quad.size, idx.dim, idx.dim)
        grid[idx.label] = np.conj(np.swapaxes(R, 1, 2)) @ AR
    return Symbol(quad.spec, max_weight, quad=quad, grid=grid, name="extracted")


def right_symbol(sigma: Symbol, inverse: bool = False) -> Symbol:
    """``rho(x, xi) = xi(x) sigma(x, xi) xi(x)^*`` (or the inverse conjugation)."""
    grid = {}
    for idx in sigma.indices:
        R = sigma.spec.rep(sigma.points, idx)
        Rh = np.conj(np.swapaxes(R, 1, 2))
        S = sigma.at_points(idx)
        grid[idx.label] = (Rh @ S @ R) if inverse else (R @ S @ Rh)
    return Symbol(sigma.spec, sigma.max_weight, quad=sigma.quad,
                  points=None if sigma.quad is not None else sigma.points,
                  grid=grid, order=sigma.order, name="right-" + sigma.name)


def right_kernel(sigma: Symbol, x, quad: HaarQuadrature) -> GridFunction:
    """Kernel ``R(x, y) = sum dim Tr(xi(y) sigma(x, xi))`` as a function of ``y``.

    ``x`` is a point or an integer position among the symbol's sample points.
    """
    if isinstance(x, (int, np.integer)):
        mats = [sigma.at_points(i)[x] for i in sigma.indices]
    else:
        mats = [sigma.evaluate(np.asarray(x, dtype=float)[None], i)[0] for i in sigma.indices]
    return GridFunction(quad, synthesis(quad, mats, sigma.indices))


# ---------------------------------------------------------------------------
# difference operators


@dataclass(frozen=True, eq=False)
class DifferenceFamily:
    """Generating functions ``q_k`` of first-order difference operators.

    Attributes
    ----------
    spec : GroupSpec
    funcs : tuple of callables
        ``q_k(points) -> values``; each vanishes at the identity.
    labels : tuple
        ``(i, j)`` matrix position for a ``dd_family``, else free labels.
    degree : float
        Band limit of the ``q_k`` (spin on SU(2), sup-frequency on T^n).
    provenance : str
    """

    spec: GroupSpec
    funcs: tuple
    labels: tuple
    degree: float
    provenance: str = "custom"
    base: Optional[RepIndex] = None

    def __len__(self):
        return len(self.funcs)

    def grid(self, quad: HaarQuadrature) -> list:
        return [GridFunction(quad, f(quad.nodes)) for f in self.funcs]

    def func(self, i: int, j: int) -> Callable:
        return self.funcs[self.labels.index((i, j))]

    def witness(self, quad: HaarQuadrature) -> dict:
        """Common-zero scan of the family on the nodes of ``quad``."""
        vals = np.stack([np.abs(f(quad.nodes)) for f in self.funcs], axis=0)
        worst = vals.max(axis=0)
        dist = quad.spec.dist_to_identity(quad.nodes)
        away = dist > 1e-9
        at_e = [float(np.abs(f(quad.spec.identity()[None]))[0]) for f in self.funcs]
        min_away = float(worst[away].min()) if np.any(away) else float("inf")
        # normalized by distance: bounded below for a strongly admissible family
        ratio = float((worst[away] / dist[away]).min()) if np.any(away) else float("inf")
        return {"max_at_identity": max(at_e), "min_max_away": min_away, "min_ratio_to_dist": ratio,
                "zero_set_is_identity": bool(max(at_e) <= 1e-12 and min_away > 1e-9)}


def dd_family(spec: GroupSpec, base: RepIndex | None = None) -> DifferenceFamily:
    """Family ``q_ij = base_ij - delta_ij`` generated by a representation."""
    if base is None:
        base = spec.su2_index(0.5) if not spec.is_torus else spec.torus_index((1,) + (0,) * (spec.n - 1))
    if all(v == 0 for v in base.label):
        raise InvalidFamilyError("the trivial representation generates no differences")
    funcs, labels = [], []
    for i in range(base.dim):
        for j in range(base.dim):
            funcs.append(_MatrixEntryMinusDelta(spec, base, i, j))
            labels.append((i, j))
    return DifferenceFamily(spec, tuple(funcs), tuple(labels), base.level, "dd_family", base)


def torus_family(spec: GroupSpec) -> DifferenceFamily:
    """``exp(+-i x_j) - 1`` for every coordinate: a strongly admissible collection."""
    if not spec.is_torus:
        raise InvalidFamilyError("torus_family needs a torus")
    funcs, labels = [], []
    for j in range(spec.n):
        for s in (1, -1):
            k = [0] * spec.n
            k[j] = s
            funcs.append(_MatrixEntryMinusDelta(spec, spec.torus_index(k), 0, 0))
            labels.append((j, s))
    return DifferenceFamily(spec, tuple(funcs), tuple(labels), 1.0, "torus_family")


@dataclass(frozen=True)
class _MatrixEntryMinusDelta:
    spec: GroupSpec
    base: RepIndex
    i: int
    j: int

    def __call__(self, points):
        R = self.spec.rep(points, self.base)
        return R[..., self.i, self.j] - (1.0 if self.i == self.j else 0.0)


def _difference_quad(spec: GroupSpec, max_weight: float, degree: float) -> HaarQuadrature:
    lev = max(i.level for i in spec.dual(max_weight))
    return haar_grid(spec, max(1.0, 2 * lev + degree))


def difference_mats(q: Callable, mats: list, indices: list, quad: HaarQuadrature) -> list:
    """``forward_ft(q * inverse_ft(F))`` restricted to ``indices``.

    ``mats`` may carry a trailing batch axis.
    """
    vals = synthesis(quad, mats, indices)
    qv = np.asarray(q(quad.nodes))
    vals = vals * qv.reshape((-1,) + (1,) * (vals.ndim - 1))
    return analysis(quad, vals, indices)


def difference_op(q, sigma: Symbol, degree: float | None = None,
                  quad: HaarQuadrature | None = None) -> Symbol:
    """Apply the difference operator generated by ``q`` to a symbol.

    ``q`` is a callable on points (or a :class:`GridFunction`, whose
    quadrature is then used for the kernels). The kernels are evaluated on
    a quadrature exact for ``q`` times the kernel; values at the outer
    indices feel the truncation.
    """
    if isinstance(q, GridFunction):
        qgrid = q
        quad = q.quad
        q = _GridLookup(qgrid)
    else:
        if degree is None:
            degree = 1.0
        quad = quad or _difference_quad(sigma.spec, sigma.max_weight, degree)
    qe = np.asarray(q(sigma.spec.identity()[None]))
    if np.abs(qe).max() > 1e-12:
        warnings.warn("difference generator does not vanish at the identity", stacklevel=2)
    idx = sigma.indices
    if sigma.terms is not None:
        terms = []
        for t in sigma.terms:
            mats = [np.asarray(t.S(i), dtype=complex) for i in idx]
            new = difference_mats(q, mats, idx, quad)
            terms.append(SymbolTerm(t.g, TableMultiplier.from_lists(idx, new)))
        return Symbol(sigma.spec, sigma.max_weight, quad=sigma.quad,
                      points=None if sigma.quad is not None else sigma.points,
                      terms=terms, x_degree=sigma.x_degree, name="diff-" + sigma.name)
    mats = [np.moveaxis(sigma.at_points(i), 0, -1) for i in idx]
    new = difference_mats(q, mats, idx, quad)
    grid = {i.label: np.moveaxis(m, -1, 0) for i, m in zip(idx, new)}
    return Symbol(sigma.spec, sigma.max_weight, quad=sigma.quad,
                  points=None if sigma.quad is not None else sigma.points,
                  grid=grid, name="diff-" + sigma.name)


class _GridLookup:
    """Callable returning stored grid values (only at the grid's own nodes)."""

    def __init__(self, gf: GridFunction):
        self.gf = gf

    def __call__(self, points):
        points = np.asarray(points)
        if points.shape == self.gf.quad.nodes.shape:
            return self.gf.values
        # identity check for q(e)
        return np.asarray([self.gf.values[np.argmin(self.gf.spec.dist_to_identity(self.gf.quad.nodes))]])


def multiplier_difference(F: SpectralField, q: Callable, degree: float,
                          quad: HaarQuadrature | None = None) -> SpectralField:
    quad = quad or _difference_quad(F.spec, F.max_weight, degree)
    new = difference_mats(q, list(F.mats), list(F.indices), quad)
    return SpectralField(F.spec, F.max_weight, F.indices, tuple(new))


def leibniz_residual(family: DifferenceFamily, a: SpectralField, b: SpectralField, ij: tuple,
                     quad: HaarQuadrature | None = None) -> float:
    """Residual of the finite Leibniz rule for multipliers ``a``, ``b``.

    With ``(u * v)^ = v^ u^``, composition of right-convolution operators
    multiplies symbols as ``a b`` and the kernel identity
    ``q_ij(yz) = q_ij(y) + q_ij(z) + sum_k q_ik(y) q_kj(z)`` gives::

        D_ij(ab) = (D_ij a) b + a (D_ij b) + sum_k (D_kj a)(D_ik b)
    """
    i, j = ij
    quad = quad or _difference_quad(a.spec, a.max_weight, family.degree)
    D = lambda F, r, s: multiplier_difference(F, family.func(r, s), family.degree, quad)
    ab = SpectralField(a.spec, a.max_weight, a.indices, tuple(x @ y for x, y in zip(a.mats, b.mats)))
    lhs = D(ab, i, j)
    Da, Db = D(a, i, j), D(b, i, j)
    rhs = [da @ bm + am @ db for da, db, am, bm in zip(Da.mats, Db.mats, a.mats, b.mats)]
    dim0 = family.base.dim
    for k in range(dim0):
        Dak, Dbk = D(a, k, j), D(b, i, k)
        rhs = [r + x @ y for r, x, y in zip(rhs, Dak.mats, Dbk.mats)]
    return max(float(np.abs(l - r).max()) for l, r in zip(lhs.mats, rhs))


# ---------------------------------------------------------------------------
# invariant derivatives


def invariant_derivative(obj, X, side: str = "left", max_weight: float | None = None):
    """Left (``d/dt f(x exp tX)``) or right (``d/dt f(exp(tX) x)``) derivative.

    Works on :class:`SpectralField`, band-limited :class:`GridFunction`
    (``max_weight`` gives the band limit) and :class:`Symbol` (derivative
    in ``x``).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if isinstance(obj, SpectralField):
        spec = obj.spec
        if side == "left":
            return obj.map(lambda i, m: spec.lie_rep(i, X) @ m)
        return obj.map(lambda i, m: m @ spec.lie_rep(i, X))
    if isinstance(obj, GridFunction):
        W = max_weight if max_weight is not None else obj.spec.weight_of_level(obj.quad.level / 2)
        F = forward_ft(obj, W)
        G = invariant_derivative(F, X, side)
        return GridFunction(obj.quad, synthesis(obj.quad, G.mats, G.indices))
    if isinstance(obj, Symbol):
        return symbol_x_derivative(obj, [X], side=side)
    raise TypeError(f"cannot differentiate {type(obj).__name__}")


@lru_cache(maxsize=None)
def central_stencil(order: int, half_width: int | None = None) -> tuple:
    """Central finite-difference weights for the ``order``-th derivative, accuracy 4."""
    if order == 0:
        return (np.array([0.0]), np.array([1.0]))
    p = half_width if half_width is not None else (order + 3) // 2 + (1 if order % 2 == 0 else 0)
    off = np.arange(-p, p + 1, dtype=float)
    V = np.vander(off, 2 * p + 1, increasing=True).T
    rhs = np.zeros(2 * p + 1)
    rhs[order] = math.factorial(order)
    return off, np.linalg.solve(V, rhs)


def flow_points(spec: GroupSpec, x, dirs: Sequence, h: float, side: str = "left"):
    """Stencil points and weights for the composed derivative along ``dirs``.

    Returns ``(points, weights)`` with points of shape ``(S,) + x.shape``
    such that ``sum_s w_s f(points_s) ~ X_1 ... X_k f(x)``.
    """
    x = np.asarray(x, dtype=float)
    P, Wt = x[None], np.ones(1)
    off, cw = central_stencil(1)
    for X in dirs:
        steps = spec.exp(np.outer(off * h, np.asarray(X, dtype=float)))
        steps = steps.reshape((1, off.size) + (1,) * (x.ndim - 1) + (x.shape[-1],))
        if side == "left":
            P = spec.mul(P[:, None], steps)
        else:
            P = spec.mul(steps, P[:, None])
        P = P.reshape((-1,) + x.shape)
        Wt = (Wt[:, None] * (cw / h)[None, :]).reshape(-1)
    return P, Wt


def symbol_x_derivative(sigma: Symbol, dirs: Sequence, h: float = 2e-3, side: str = "left") -> Symbol:
    """Invariant derivative of ``x -> sigma(x, xi)`` along the directions ``dirs``.

    Symbols with callables are differentiated with fourth-order stencils
    along the flows; tabulated symbols spectrally in ``x``.
    """
    spec = sigma.spec
    if not dirs:
        return sigma
    if sigma.analytic:
        P, Wt = flow_points(spec, sigma.points, dirs, h, side)
        if sigma.terms is not None:
            terms = []
            for t in sigma.terms:
                if t.g is None:
                    continue
                g = t.g
                gv = np.tensordot(Wt, np.asarray(g(P)), axes=(0, 0))
                terms.append(SymbolTerm(_Tabulated(sigma.points, gv), t.S))
            if not terms:
                terms = [SymbolTerm(_Tabulated(sigma.points, np.zeros(sigma.npoints)), sigma.terms[0].S)]
            return Symbol(spec, sigma.max_weight, quad=sigma.quad,
                          points=None if sigma.quad is not None else sigma.points,
                          terms=terms, x_degree=sigma.x_degree, name="dx-" + sigma.name)
        grid = {}
        for idx in sigma.indices:
            vals = sigma.evaluate(P, idx)
            grid[idx.label] = np.tensordot(Wt, vals, axes=(0, 0))
        return Symbol(spec, sigma.max_weight, quad=sigma.quad,
                      points=None if sigma.quad is not None else sigma.points,
                      grid=grid, name="dx-" + sigma.name)
    if sigma.quad is None:
        raise SpecMismatchError("tabulated symbol without quadrature")
    quad = sigma.quad
    wx = spec.weight_of_level(quad.level / 2)
    xid = spec.dual(wx)
    grid = {}
    for idx in sigma.indices:
        vals = sigma.at_points(idx).reshape(quad.size, -1)
        mats = analysis(quad, vals, xid)
        for X in reversed(list(dirs)):
            if side == "left":
                mats = [np.einsum("ab,bcK->acK", spec.lie_rep(i, X), m) for i, m in zip(xid, mats)]
            else:
                mats = [np.einsum("abK,bc->acK", m, spec.lie_rep(i, X)) for i, m in zip(xid, mats)]
        grid[idx.label] = synthesis(quad, mats, xid).reshape(quad.size, idx.dim, idx.dim)
    return Symbol(spec, sigma.max_weight, quad=quad, grid=grid, name="dx-" + sigma.name)


class _Tabulated:
    """Function known only at fixed points (used for derived x-factors)."""

    def __init__(self, points, values):
        self.points = np.asarray(points)
        self.values = np.asarray(values)

    def __call__(self, points):
        points = np.asarray(points)
        if points.shape == self.points.shape and np.array_equal(points, self.points):
            return self.values
        raise SpecMismatchError("derived x-factor is only known at the sample points")


# ---------------------------------------------------------------------------
# Taylor system with odd first-order functions


class TaylorSystem:
    """Odd coordinates ``q_1..q_n`` near the identity and their dual derivatives.

    Torus: ``q_j = sin x_j``. SU(2): ``q_j = 2 v_j`` where ``v`` is the
    vector part of the quaternion; both are odd under inversion and
    ``q_j(exp Y) = Y_j + O(|Y|^3)``. The monomials ``q^gamma`` and the
    derivatives ``d^(gamma)`` (partial derivatives in the q-chart at the
    identity, evaluated with fourth-order stencils) are biorthogonal:
    ``d^(gamma) q^delta = gamma! delta_{gamma delta}``.
    """

    def __init__(self, spec: GroupSpec, N: int, h: float = 0.05):
        if N < 1 or N > 4:
            raise ValueError("Taylor order must satisfy 1 <= N <= 4")
        self.spec = spec
        self.N = N
        self.h = h
        self.multi_indices = [g for k in range(N) for g in _multi_indices(spec.n, k)]

    def q(self, points) -> np.ndarray:
        points = self.spec.check_points(points)
        if self.spec.is_torus:
            return np.sin(points)
        return 2.0 * points[..., 1:]

    def chart_inverse(self, qv) -> np.ndarray:
        qv = np.asarray(qv, dtype=float)
        if self.spec.is_torus:
            return np.mod(np.arcsin(qv), 2 * np.pi)
        v = 0.5 * qv
        w = np.sqrt(np.clip(1.0 - (v ** 2).sum(axis=-1), 0.0, None))
        return np.concatenate([w[..., None], v], axis=-1)

    def q_gamma(self, points, gamma) -> np.ndarray:
        qv = self.q(points)
        out = np.ones(qv.shape[:-1])
        for j, k in enumerate(gamma):
            if k:
                out = out * qv[..., j] ** k
        return out

    def dual(self, f: Callable, gamma, base=None) -> complex:
        """``d^(gamma) f`` at ``base`` (default the identity), ``f`` a callable on points."""
        offs, ws = [], []
        for k in gamma:
            o, w = central_stencil(k)
            offs.append(o * self.h)
            ws.append(w / self.h ** k)
        grids = np.meshgrid(*offs, indexing="ij")
        wgrid = np.ones_like(grids[0])
        for j, w in enumerate(np.meshgrid(*ws, indexing="ij")):
            wgrid = wgrid * w
        qpts = np.stack([g.reshape(-1) for g in grids], axis=-1)
        pts = self.chart_inverse(qpts)
        if base is not None:
            pts = self.spec.mul(np.asarray(base)[None], pts)
        return complex(np.sum(wgrid.reshape(-1) * np.asarray(f(pts))))

    def polynomial(self, f: Callable):
        """Taylor polynomial coefficients ``d^(gamma) f(e) / gamma!``."""
        return {g: self.dual(f, g) / _factorial(g) for g in self.multi_indices}

    def remainder(self, f: Callable, points) -> np.ndarray:
        coef = self.polynomial(f)
        approx = sum(c * self.q_gamma(points, g) for g, c in coef.items())
        return np.abs(np.asarray(f(points)) - approx)


def taylor_system(spec: GroupSpec, N: int) -> TaylorSystem:
    return TaylorSystem(spec, N)


def _multi_indices(n: int, k: int) -> list:
    return sorted([g for g in product(range(k + 1), repeat=n) if sum(g) == k], reverse=True)


def _factorial(gamma) -> float:
    return float(np.prod([math.factorial(k) for k in gamma]))


# ---------------------------------------------------------------------------
# order estimation


@dataclass
class OrderReport:
    """Fitted slopes of ``max_x ||Delta^alpha d^beta sigma||`` against ``log <xi>``."""

    slopes: dict
    m: float | None
    rho: float | None
    delta: float | None
    weights: list
    norms: dict
    degenerate: bool = False
    fit_weights: list = field(default_factory=list)


def loglog_slope(weights, values, floor: float = 1e-300) -> float:
    w = np.asarray(weights, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > floor
    if keep.sum() < 2:
        raise InsufficientDataError("fewer than two usable points for a slope")
    A = np.stack([np.log(w[keep]), np.ones(keep.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(v[keep]), rcond=None)
    return float(coef[0])


def interior_mask(weights, max_weight: float, min_weight: float = 1.0) -> np.ndarray:
    """Indices outside the outer dyadic shell ``(max_weight / 2, max_weight]``."""
    w = np.asarray(weights)
    return (w <= max_weight / 2 + 1e-12) & (w >= min_weight - 1e-12)


def estimate_order(sigma: Symbol, family: DifferenceFamily, alpha_max: int = 1, beta_max: int = 0,
                   x_points=None, fit_range: tuple | None = None, require_dyadic: int = 4,
                   h: float = 2e-3) -> OrderReport:
    """Fit ``(m, rho, delta)`` from the decay of differences and derivatives.

    Differences are composed from the family members (every sequence of
    length ``|alpha|``); x-derivatives use the Lie algebra basis. The fit
    uses indices with weight in ``fit_range`` (default: ``[2, max_weight/2]``,
    excluding the outer dyadic shell).
    """
    spec = sigma.spec
    W = sigma.max_weight
    if math.log2(W) + 1 < require_dyadic - 1e-9:
        raise InsufficientDataError(f"cutoff weight {W:.3g} spans fewer than {require_dyadic} dyadic levels")
    idx = sigma.indices
    weights = [i.weight for i in idx]
    if x_points is None:
        x_points = sigma.points if not sigma.x_independent else sigma.points[:1]
    x_points = spec.check_points(x_points)
    base = Symbol(spec, W, points=x_points, terms=sigma.terms, func=sigma.func,
                  grid=None if sigma.analytic else _restrict_grid(sigma, x_points),
                  x_degree=sigma.x_degree, name=sigma.name)
    quad = _difference_quad(spec, W, family.degree)
    lo, hi = fit_range if fit_range is not None else (2.0, W / 2)
    fitmask = np.array([(lo - 1e-12 <= w <= hi + 1e-12) for w in weights])
    norms, slopes = {}, {}
    basis = [spec.unit_vector(j) for j in range(spec.n)]
    for b in range(beta_max + 1):
        for dirs in product(range(spec.n), repeat=b):
            sb = symbol_x_derivative(base, [basis[j] for j in dirs], h=h) if b else base
            mats0 = [np.moveaxis(sb.at_points(i), 0, -1) for i in idx]
            cur = {(): mats0}
            for a in range(alpha_max + 1):
                if a > 0:
                    nxt = {}
                    for seq, mats in cur.items():
                        for k, q in enumerate(family.funcs):
                            nxt[seq + (k,)] = difference_mats(q, mats, idx, quad)
                    cur = nxt
                best = np.zeros(len(idx))
                for mats in cur.values():
                    best = np.maximum(best, [float(op_norm(np.moveaxis(m, -1, 0)).max()) for m in mats])
                key = (a, b)
                norms[key] = np.maximum(norms.get(key, np.zeros(len(idx))), best)
    scale = max(float(v.max()) for v in norms.values())
    degenerate = scale <= 1e-13
    for key, v in norms.items():
        vv = np.where(fitmask, v, 0.0)
        try:
            slopes[key] = None if degenerate else loglog_slope(np.array(weights)[fitmask], v[fitmask],
                                                              floor=1e-12 * max(scale, 1e-300))
        except InsufficientDataError:
            slopes[key] = None
    m = slopes.get((0, 0))
    rhos = [(m - slopes[(a, 0)]) / a for a in range(1, alpha_max + 1)
            if m is not None and slopes.get((a, 0)) is not None]
    deltas = [(slopes[(0, b)] - m) / b for b in range(1, beta_max + 1)
              if m is not None and slopes.get((0, b)) is not None]
    return OrderReport(slopes=slopes, m=m, rho=float(np.mean(rhos)) if rhos else None,
                       delta=float(np.mean(deltas)) if deltas else None, weights=weights,
                       norms={k: v.tolist() for k, v in norms.items()}, degenerate=degenerate,
                       fit_weights=list(np.array(weights)[fitmask]))


def _restrict_grid(sigma: Symbol, x_points) -> dict:
    if x_points.shape == sigma.points.shape and np.array_equal(x_points, sigma.points):
        return sigma.tabulate()
    return {i.label: sigma.evaluate(x_points, i) for i in sigma.indices}
