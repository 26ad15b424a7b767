"""Amplitudes ``a(x, y, xi)``, the mollified amplitude and amplitude operators.

The mollified amplitude of a symbol ``sigma`` is::

    p(x, y, xi) = int w_xi(x z^-1) w_xi(y z^-1) sigma(z, xi) dz

and its operator is ``Op(p) f(x) = sum dim(xi) Tr(xi(x) int p(x, y, xi) f(y) xi(y)^* dy)``.
Equivalently ``Op(p) = sum_eta int L_z Op_eta(sigma(z, .)) L_z dz`` with
``L_z`` multiplication by ``w_eta(. z^-1)``, which is positive whenever
``sigma`` is pointwise positive semi-definite.

Three evaluation strategies are provided:

* ``"fourier"`` on the torus: exact matrix entries from Fourier
  coefficients of the mollifiers;
* ``"gram"`` on SU(2): ``P = sum_eta d_eta int N(z)^* sigma(z, eta) N(z) dz``
  with an exact quadrature in ``z``; positive by construction;
* ``"quadrature"``: direct double quadrature of the kernel over node
  pairs within the support bound, for any amplitude.

In addition, :func:`amplitude_symbol` computes the full symbol of
``Op(p)`` in closed form from integrals of the central mollifier against
tensor products of representations.

The sum over ``eta`` runs over weights ``<= eta_max_weight`` (the amplitude
cutoff); indices near the cutoff miss the tail of that sum.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ResolutionError, SpecMismatchError
from .groups import GroupSpec, HaarQuadrature, RepIndex, haar_grid, spin_generators
from .harmonic import analysis, basis_labels, basis_size, rep_values
from .mollifier import MollifierSpec, Mollifier, ball_rule, mollifier_at
from .operators import TruncatedOperator, coefficients_from_values
from .symbols import Symbol, SymbolTerm, TableMultiplier, quantize_matrix


# ---------------------------------------------------------------------------
# symbols in x-Fourier form


def _x_modes(spec: GroupSpec, degree: float) -> list:
    """Indices of the x-expansion up to ``degree`` (spin, or sup-norm frequency)."""
    if spec.is_torus:
        D = int(math.floor(degree + 1e-9))
        return [i for i in spec.dual(math.sqrt(1.0 + spec.n * D * D)) if i.level <= D]
    return spec.dual(spec.weight_of_level(degree))


class FourierInX:
    """``sigma(x, xi) = sum_g d_g sum_ab g(x)_ab F_g(xi)[b, a]`` for band-limited symbols.

    ``F_g(xi)`` is stored with shape ``(d_g, d_g, d, d)`` and equals
    ``int sigma(x, xi) g(x)^* dx`` with the first two axes the matrix
    indices of ``g^*``.
    """

    def __init__(self, sigma: Symbol, degree: float | None = None):
        spec = sigma.spec
        if degree is None:
            degree = sigma.x_degree
        if degree is None:
            if sigma.quad is None:
                raise SpecMismatchError("symbol without x band limit or quadrature")
            degree = sigma.quad.level / 2
        self.spec = spec
        self.sigma = sigma
        self.degree = float(degree)
        self.modes = _x_modes(spec, self.degree)
        self._cache: dict = {}
        if sigma.terms is not None:
            level = max(1.0, 2 * self.degree)
            q = haar_grid(spec, level)
            self._term_coeffs = []
            for t in sigma.terms:
                if t.g is None:
                    co = [np.ones((1, 1)) if m == spec.trivial() else np.zeros((m.dim, m.dim))
                          for m in self.modes]
                else:
                    co = analysis(q, np.asarray(t.g(q.nodes), dtype=complex), self.modes)
                self._term_coeffs.append(co)
        else:
            self._term_coeffs = None
            if sigma.quad is None or sigma.quad.level + 1e-9 < 2 * self.degree:
                raise SpecMismatchError("tabulated symbol needs a quadrature of level >= 2 * degree")

    def blocks(self, idx: RepIndex) -> list:
        hit = self._cache.get(idx.label)
        if hit is not None:
            return hit
        sig = self.sigma
        d = idx.dim
        if self._term_coeffs is not None:
            out = [np.zeros((m.dim, m.dim, d, d), dtype=complex) for m in self.modes]
            for t, co in zip(sig.terms, self._term_coeffs):
                S = np.asarray(t.S(idx), dtype=complex).reshape(d, d)
                for k, c in enumerate(co):
                    out[k] += np.einsum("ab,ij->abij", c, S)
        else:
            if idx.weight > sig.max_weight + 1e-9:
                raise SpecMismatchError(f"tabulated symbol undefined at {idx}")
            vals = sig.at_points(idx).reshape(sig.npoints, d * d)
            co = analysis(sig.quad, vals, self.modes)
            out = [c.reshape(m.dim, m.dim, d, d) for m, c in zip(self.modes, co)]
        self._cache[idx.label] = out
        return out

    def evaluate(self, points, idx: RepIndex, blocks: list | None = None) -> np.ndarray:
        """Synthesize the symbol (or replacement ``blocks``) at ``points``."""
        points = self.spec.check_points(points)
        blocks = self.blocks(idx) if blocks is None else blocks
        out = np.zeros(points.shape[:-1] + (idx.dim, idx.dim), dtype=complex)
        for m, F in zip(self.modes, blocks):
            R = self.spec.rep(points, m)
            out += m.dim * np.einsum("...ab,baij->...ij", R, F)
        return out


# ---------------------------------------------------------------------------
# central integrals over tensor products (SU(2))


@lru_cache(maxsize=4096)
def _tensor_decomposition(factors: tuple) -> tuple:
    """Eigenbasis of the Casimir on ``(x)_k rho_k`` and the spin of each vector.

    ``factors`` is a tuple of ``(two_l, conjugated)`` pairs.
    """
    dims = [f[0] + 1 for f in factors]
    D = int(np.prod(dims))
    gens = []
    for axis in range(3):
        G = np.zeros((D, D), dtype=complex)
        for k, (two_l, conj) in enumerate(factors):
            g = spin_generators(two_l)[axis]
            g = np.conj(g) if conj else g
            left = int(np.prod(dims[:k]))
            right = int(np.prod(dims[k + 1:]))
            G += np.kron(np.kron(np.eye(left), g), np.eye(right))
        gens.append(G)
    cas = -(gens[0] @ gens[0] + gens[1] @ gens[1] + gens[2] @ gens[2])
    cas = 0.5 * (cas + cas.conj().T)
    m = np.round(np.real(-1j * np.diag(gens[2])) * 2).astype(int)
    V = np.zeros((D, D), dtype=complex)
    spins = np.zeros(D)
    col = 0
    for mv in np.unique(m):
        sel = np.flatnonzero(m == mv)
        lam, vec = np.linalg.eigh(cas[np.ix_(sel, sel)])
        V[sel, col:col + sel.size] = vec
        spins[col:col + sel.size] = np.round(2 * (-0.5 + np.sqrt(0.25 + np.maximum(lam, 0.0)))) / 2
        col += sel.size
    V.setflags(write=False)
    spins.setflags(write=False)
    return V, spins


def central_tensor_integral(mol: Mollifier, factors: tuple, power: int = 1) -> np.ndarray:
    """``int w(v)^power (x)_k rho_k(v) dv`` as a ``(D, D)`` matrix.

    Uses ``int chi_J rho = Pi_J / d_J`` for the isotypic projectors ``Pi_J``
    of the tensor product.
    """
    V, spins = _tensor_decomposition(tuple(factors))
    uniq = np.unique(spins)
    coeff = mol.character_coefficients(uniq, power=power) / (2 * uniq + 1)
    lookup = dict(zip(uniq.tolist(), coeff.tolist()))
    diag = np.array([lookup[s] for s in spins.tolist()])
    return (V * diag) @ V.conj().T


def _integral_A(mol: Mollifier, eta: RepIndex, xi: RepIndex) -> np.ndarray:
    """``A[p, s, i, j] = int w conj(eta_ps) xi_ij``."""
    de, dx = eta.dim, xi.dim
    T = central_tensor_integral(mol, ((eta.label[0], True), (xi.label[0], False)))
    return T.reshape(de, dx, de, dx).transpose(0, 2, 1, 3)


def _integral_B(mol: Mollifier, gamma: RepIndex, eta: RepIndex, xi: RepIndex) -> np.ndarray:
    """``B[c, b, s, q, i, j] = int w gamma_cb conj(eta_sq) xi_ij``."""
    dg, de, dx = gamma.dim, eta.dim, xi.dim
    T = central_tensor_integral(mol, ((gamma.label[0], False), (eta.label[0], True), (xi.label[0], False)))
    return T.reshape(dg, de, dx, dg, de, dx).transpose(0, 3, 1, 4, 2, 5)


# ---------------------------------------------------------------------------
# amplitudes


class Amplitude:
    """Base class: ``a(x, y, xi)`` for indices with weight ``<= max_weight``."""

    spec: GroupSpec
    max_weight: float
    hermitian: bool = False

    def evaluate(self, x, y, idx: RepIndex) -> np.ndarray:
        raise NotImplementedError

    def diagonal(self, points, idx: RepIndex) -> np.ndarray:
        points = self.spec.check_points(points)
        return self.evaluate(points, points, idx)

    def support_radius(self, idx: RepIndex) -> float:
        """``a(x, y, xi) = 0`` when ``dist(x, y)`` exceeds this bound."""
        return math.inf

    def pair_list(self, quad: HaarQuadrature, idx: RepIndex) -> tuple:
        """Node pairs ``(i, j)`` of ``quad`` that can carry a nonzero value."""
        R = self.support_radius(idx)
        n = quad.size
        if not math.isfinite(R):
            ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
            return ii.ravel(), jj.ravel()
        out_i, out_j = [], []
        spec = self.spec
        for start in range(0, n, 256):
            xs = quad.nodes[start:start + 256]
            rel = spec.mul(quad.nodes[None, :, :], spec.inv(xs)[:, None, :])
            dist = spec.dist_to_identity(rel)
            a, b = np.nonzero(dist <= R + 1e-12)
            out_i.append(a + start)
            out_j.append(b)
        return np.concatenate(out_i), np.concatenate(out_j)


class SymbolAmplitude(Amplitude):
    """``a(x, y, xi) = sigma(x, xi)``; its operator is ``Op(sigma)``."""

    def __init__(self, sigma: Symbol):
        self.sigma = sigma
        self.spec = sigma.spec
        self.max_weight = sigma.max_weight
        self.hermitian = False

    def evaluate(self, x, y, idx):
        x = self.spec.check_points(x)
        y = self.spec.check_points(y)
        shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        vals = self.sigma.evaluate(x, idx)
        return np.broadcast_to(vals, shape + (idx.dim, idx.dim))


class MollifiedAmplitude(Amplitude):
    """Mollified amplitude ``p`` of a symbol (see the module docstring).

    Parameters
    ----------
    sigma : Symbol
    ms : MollifierSpec
    eta_max_weight : float, optional
        Amplitude cutoff; defaults to the symbol cutoff.
    ball : tuple
        ``(n_radial, n_angular)`` of the local rule used for pointwise evaluation.
    """

    def __init__(self, sigma: Symbol, ms: MollifierSpec = MollifierSpec(),
                 eta_max_weight: float | None = None, ball: tuple = (48, 16)):
        self.sigma = sigma
        self.spec = sigma.spec
        self.ms = ms
        self.max_weight = sigma.max_weight if eta_max_weight is None else float(eta_max_weight)
        if sigma.terms is None and sigma.func is None and self.max_weight > sigma.max_weight + 1e-9:
            raise SpecMismatchError("tabulated symbols cannot be extended beyond their cutoff")
        self.hermitian = bool(sigma.hermitian)
        self.ball = ball
        self._fourier = None

    @property
    def fourier_form(self) -> FourierInX:
        if self._fourier is None:
            self._fourier = FourierInX(self.sigma)
        return self._fourier

    @property
    def indices(self) -> list:
        return self.spec.dual(self.max_weight)

    def mollifier(self, idx: RepIndex) -> Mollifier:
        return mollifier_at(self.spec, idx.weight, self.ms)

    def support_radius(self, idx: RepIndex) -> float:
        return 2 * self.mollifier(idx).support

    def sigma_values(self, points, idx: RepIndex) -> np.ndarray:
        if self.sigma.analytic:
            return self.sigma.evaluate(points, idx)
        return self.fourier_form.evaluate(points, idx)

    # pointwise evaluation by local quadrature ----------------------------
    def evaluate(self, x, y, idx: RepIndex) -> np.ndarray:
        """``p(x, y, xi)`` via ``int w(tau) w(y x^-1 tau^-1) sigma(tau x, xi) dtau``."""
        spec = self.spec
        x = spec.check_points(x)
        y = spec.check_points(y)
        x, y = np.broadcast_arrays(x, y)
        mol = self.mollifier(idx)
        br = ball_rule(spec, mol.support, *self.ball)
        wt = br.weights * mol(br.points)
        flat_x = x.reshape(-1, spec.point_size)
        flat_y = y.reshape(-1, spec.point_size)
        out = np.zeros((flat_x.shape[0], idx.dim, idx.dim), dtype=complex)
        tinv = spec.inv(br.points)
        step = max(1, 4096 // max(1, br.weights.size // 64))
        for start in range(0, flat_x.shape[0], step):
            xs, ys = flat_x[start:start + step], flat_y[start:start + step]
            shift = spec.mul(ys, spec.inv(xs))
            rel = spec.mul(shift[:, None, :], tinv[None, :, :])
            w2 = wt[None, :] * mol(rel)
            live = np.flatnonzero(np.any(w2 != 0, axis=0))
            if live.size == 0:
                continue
            pts = spec.mul(br.points[live][None, :, :], xs[:, None, :])
            S = self.sigma_values(pts, idx)
            out[start:start + step] = np.einsum("pt,ptij->pij", w2[:, live], S)
        out = out.reshape(x.shape[:-1] + (idx.dim, idx.dim))
        return out

    def diagonal_local(self, points, idx: RepIndex) -> np.ndarray:
        """``p(x, x, xi) = int w(tau)^2 sigma(tau x, xi) dtau`` by local quadrature."""
        spec = self.spec
        points = spec.check_points(points)
        mol = self.mollifier(idx)
        br = ball_rule(spec, mol.support, *self.ball)
        wt = br.weights * mol(br.points) ** 2
        pts = spec.mul(br.points[None, :, :], points.reshape(-1, spec.point_size)[:, None, :])
        S = self.sigma_values(pts, idx)
        out = np.einsum("t,ntij->nij", wt, S)
        return out.reshape(points.shape[:-1] + (idx.dim, idx.dim))

    # exact spectral forms -------------------------------------------------
    def _smoothing_factors(self, mol: Mollifier, power: int = 2) -> np.ndarray:
        """``int w^power g / d_g`` (SU(2)) or ``int w^power e^{-ik.x}`` (torus) per x-mode."""
        modes = self.fourier_form.modes
        if self.spec.is_torus:
            return mol.fourier(np.array([m.label for m in modes], dtype=float), power=power)
        spins = np.array([m.spin for m in modes])
        return mol.character_coefficients(spins, power=power) / (2 * spins + 1)

    def diagonal(self, points, idx: RepIndex) -> np.ndarray:
        """Exact ``p(x, x, xi)``: each x-mode of ``sigma`` scaled by the ``w^2`` coefficient."""
        ff = self.fourier_form
        fac = self._smoothing_factors(self.mollifier(idx), 2)
        blocks = [f * F for f, F in zip(fac, ff.blocks(idx))]
        return ff.evaluate(points, idx, blocks)

    def first_order_term(self, points, idx: RepIndex, direction) -> np.ndarray:
        """``d/ds p(x, x exp(-s X), xi)`` at ``s = 0`` for a Lie algebra direction ``X``.

        Integrating by parts gives ``-1/2`` times the ``w^2``-smoothed
        derivative ``sum_g c_g Tr(g(x) dg(X) F_g)``.
        """
        ff = self.fourier_form
        fac = self._smoothing_factors(self.mollifier(idx), 2)
        blocks = []
        for f, m, F in zip(fac, ff.modes, ff.blocks(idx)):
            dX = self.spec.lie_rep(m, direction)
            blocks.append(-0.5 * f * np.einsum("ac,cbij->abij", dX, F))
        return ff.evaluate(points, idx, blocks)


def build_amplitude(sigma: Symbol, ms: MollifierSpec = MollifierSpec(),
                    eta_max_weight: float | None = None, **kw) -> MollifiedAmplitude:
    """Mollified amplitude of ``sigma``; checks every mollifier in range is resolvable."""
    amp = MollifiedAmplitude(sigma, ms, eta_max_weight, **kw)
    if sigma.quad is not None and not sigma.analytic:
        top = amp.indices[-1]
        mol = amp.mollifier(top)
        if 2 * mol.support / sigma.quad.spacing < 2:
            raise ResolutionError("symbol grid too coarse for the mollifier at the cutoff")
    return amp


# ---------------------------------------------------------------------------
# symbol of the amplitude operator


def amplitude_symbol_blocks(amp: MollifiedAmplitude, xi: RepIndex) -> list:
    """x-mode blocks of the symbol of ``Op(p)`` at ``xi``."""
    ff = amp.fourier_form
    spec = amp.spec
    out = [np.zeros((m.dim, m.dim, xi.dim, xi.dim), dtype=complex) for m in ff.modes]
    if spec.is_torus:
        return _torus_symbol_table(amp, [xi])[xi.label]
    for eta in amp.indices:
        mol = amp.mollifier(eta)
        de = eta.dim
        A = _integral_A(mol, eta, xi)
        for j, g in enumerate(ff.modes):
            F = ff.blocks(eta)[j]
            # A'[b, a, q, s] = sum_p F[b, a][p, q] A[p, s]
            Ap = np.einsum("bapq,psij->baqsij", F, A, optimize=True)
            B = A[None, None] if g.label == (0,) else _integral_B(mol, g, eta, xi)
            G = de * np.einsum("baqsij,cbsqjk->acik", Ap, B, optimize=True)
            out[j] += np.swapaxes(G, 0, 1)
    return out


def _torus_symbol_table(amp: MollifiedAmplitude, xis: list) -> dict:
    """Torus: ``sum_k w_k^(xi + m - k) F_m(k) w_k^(xi - k)`` for every x-mode ``m``."""
    ff = amp.fourier_form
    xl = np.array([x.label for x in xis], dtype=float)
    ml = np.array([m.label for m in ff.modes], dtype=float)
    acc = np.zeros((len(xis), len(ff.modes)), dtype=complex)
    for k in amp.indices:
        mol = amp.mollifier(k)
        kv = np.array(k.label, dtype=float)
        right = mol.fourier(xl - kv)
        left = mol.fourier(xl[:, None, :] + ml[None, :, :] - kv)
        Fk = np.array([b[0, 0, 0, 0] for b in ff.blocks(k)])
        acc += left * right[:, None] * Fk[None, :]
    return {x.label: [acc[r, j].reshape(1, 1, 1, 1) for j in range(len(ff.modes))]
            for r, x in enumerate(xis)}


def _symbol_table(amp: MollifiedAmplitude, idxs: list) -> dict:
    if amp.spec.is_torus:
        return _torus_symbol_table(amp, idxs)
    return {i.label: amplitude_symbol_blocks(amp, i) for i in idxs}


def amplitude_symbol(amp: MollifiedAmplitude, quad: HaarQuadrature | None = None,
                     max_weight: float | None = None, points=None) -> Symbol:
    """Closed-form symbol of ``Op(p)`` on ``max_weight`` (default: amplitude cutoff)."""
    W = amp.max_weight if max_weight is None else max_weight
    ff = amp.fourier_form
    idxs = amp.spec.dual(W)
    table = _symbol_table(amp, idxs)
    pts = quad.nodes if quad is not None else points
    grid = {i.label: ff.evaluate(pts, i, table[i.label]) for i in idxs}
    sym = Symbol(amp.spec, W, quad=quad, points=None if quad is not None else pts, grid=grid,
                 order=amp.sigma.order, x_degree=ff.degree, name="amplitude-" + amp.sigma.name)
    sym.fourier_blocks = table
    return sym


def symbol_from_blocks(spec: GroupSpec, degree: float, table: dict, quad: HaarQuadrature,
                       max_weight: float, name: str = "symbol") -> Symbol:
    """Separable symbol ``sum g_ab(x) S_ab(xi)`` from x-mode blocks (exact off the grid)."""
    modes = _x_modes(spec, degree)
    terms = []
    for j, m in enumerate(modes):
        for a in range(m.dim):
            for b in range(m.dim):
                mats = {lab: m.dim * blocks[j][b, a] for lab, blocks in table.items()}
                terms.append(SymbolTerm(_ModeEntry(spec, m, a, b), TableMultiplier(mats, {})))
    return Symbol(spec, max_weight, quad=quad, terms=terms, x_degree=degree, name=name)


class _ModeEntry:
    def __init__(self, spec, idx, a, b):
        self.spec, self.idx, self.a, self.b = spec, idx, a, b

    def __call__(self, points):
        return self.spec.rep(points, self.idx)[..., self.a, self.b]


# ---------------------------------------------------------------------------
# operator assembly


def op_from_amplitude(amp: Amplitude, max_weight: float | None = None, method: str = "auto",
                      quad: HaarQuadrature | None = None, chunk: int = 512) -> TruncatedOperator:
    """Galerkin matrix of ``Op(a)`` on the basis up to ``max_weight``.

    ``method`` is ``"auto"``, ``"fourier"`` (torus), ``"gram"`` (SU(2),
    assembled as a sum of Gram matrices), ``"symbol"`` (closed-form symbol
    then quantization) or ``"quadrature"``. ``"auto"`` picks ``"fourier"``
    on the torus and ``"symbol"`` on SU(2), which agrees with ``"gram"`` to
    rounding at a fraction of the cost.
    """
    W = amp.max_weight if max_weight is None else float(max_weight)
    if isinstance(amp, SymbolAmplitude):
        return _kernel_quadrature_symbol(amp, W, quad)
    if method == "auto":
        method = "fourier" if amp.spec.is_torus else "symbol"
    if method == "fourier":
        return _torus_fourier(amp, W)
    if method == "gram":
        return _su2_gram(amp, W, chunk)
    if method == "symbol":
        ff = amp.fourier_form
        table = _symbol_table(amp, amp.spec.dual(W))
        q = haar_grid(amp.spec, max(1.0, 2 * _top_level(amp.spec, W) + ff.degree))
        sym = symbol_from_blocks(amp.spec, ff.degree, table, q, W)
        return quantize_matrix(sym, q, W)
    if method == "quadrature":
        return _double_quadrature(amp, W, quad)
    raise ValueError(f"unknown method {method!r}")


def _top_level(spec: GroupSpec, W: float) -> float:
    return max(i.level for i in spec.dual(W))


def _kernel_quadrature_symbol(amp: SymbolAmplitude, W: float, quad) -> TruncatedOperator:
    """``T = E^* diag(w) Z`` with ``Z(x, beta) = sum_eta d Tr(eta(x) sigma(x, eta) int eta(y)^* e_beta(y) dy)``."""
    sigma = amp.sigma
    quad = quad or sigma.quad
    spec = quad.spec
    need = 2 * _top_level(spec, W) + (sigma.x_degree or 0.0)
    if quad.level + 1e-9 < need and sigma.analytic:
        quad = haar_grid(spec, need)
    n = basis_size(spec, W)
    Z = np.zeros((quad.size, n), dtype=complex)
    col = 0
    for beta in spec.dual(W):
        R = rep_values(quad, beta)
        Bvals = np.sqrt(beta.dim) * R.reshape(quad.size, -1)
        k = Bvals.shape[1]
        for eta in spec.dual(amp.max_weight):
            X = R if eta == beta else rep_values(quad, eta)
            S = sigma.evaluate(quad.nodes, eta) if quad is not sigma.quad else sigma.at_points(eta)
            XS = X @ S
            # Bh[ab, beta] = int conj(eta_ab(y)) e_beta(y) dy
            Bh = analysis(quad, Bvals, [eta])[0]          # (d, d, k) with [a,b] = int f conj(eta_ba)
            Z[:, col:col + k] += eta.dim * np.einsum("nab,baK->nK", XS, Bh)
        col += k
    return TruncatedOperator(spec, W, coefficients_from_values(quad, Z, W))


def _torus_fourier(amp: MollifiedAmplitude, W: float) -> TruncatedOperator:
    """Exact ``P[a, b] = sum_k w_k^(a - k) F_{a-b}(k) w_k^(b - k)``."""
    spec = amp.spec
    if not spec.is_torus:
        raise SpecMismatchError("the Fourier route is for tori")
    ff = amp.fourier_form
    alpha = np.array([i.label for i in spec.dual(W)], dtype=float)
    n = alpha.shape[0]
    P = np.zeros((n, n), dtype=complex)
    diff = np.rint(alpha[:, None, :] - alpha[None, :, :]).astype(int)
    masks = []
    for m in ff.modes:
        masks.append(np.all(diff == np.array(m.label), axis=-1))
    U = []
    Fm = []
    for k in amp.indices:
        mol = amp.mollifier(k)
        U.append(mol.fourier(alpha - np.array(k.label, dtype=float)))
        Fm.append([b[0, 0, 0, 0] for b in ff.blocks(k)])
    U = np.array(U)
    Fm = np.array(Fm)
    for j, mask in enumerate(masks):
        if not mask.any():
            continue
        full = (U * Fm[:, j][:, None]).T @ U
        P[mask] += full[mask]
    return TruncatedOperator(spec, W, P)


def _su2_gram(amp: MollifiedAmplitude, W: float, chunk: int) -> TruncatedOperator:
    """``P[a, b] = sum_eta d_eta int Tr(N_a(z)^* sigma(z, eta) N_b(z)) dz``.

    ``N_b(z) = int w_eta(y z^-1) e_b(y) eta(y)^* dy = sqrt(d') eta(z)^* sum_k xi'_kj(z) C_ik``
    with ``C_ik = int w_eta xi'_ik eta^*`` in closed form.
    """
    spec = amp.spec
    if spec.is_torus:
        raise SpecMismatchError("the Gram route is for SU(2)")
    basis_idx = spec.dual(W)
    n = basis_size(spec, W)
    Lb = _top_level(spec, W)
    ff_degree = amp.fourier_form.degree if not amp.sigma.x_independent else 0.0
    P = np.zeros((n, n), dtype=complex)
    for eta in amp.indices:
        mol = amp.mollifier(eta)
        de = eta.dim
        Cs = []
        for xi in basis_idx:
            T = central_tensor_integral(mol, ((xi.label[0], False), (eta.label[0], True)))
            d = xi.dim
            # T[(i, b), (k, a)] = int w xi_ik conj(eta_ba) = C_ik[a, b]
            Cs.append(T.reshape(d, de, d, de))
        # for scalar symbols eta(z) S eta(z)^* = S, so N may be replaced by M
        # and the z-integrand has level 2 Lb + degree only
        scalar = _is_scalar(amp, eta)
        zq = haar_grid(spec, max(1.0, 2 * Lb + ff_degree + (0.0 if scalar else 2 * eta.spin)))
        for start in range(0, zq.size, chunk):
            z = zq.nodes[start:start + chunk]
            wz = zq.weights[start:start + chunk]
            Ez = None if scalar else spec.rep(z, eta)
            Sz = amp.sigma_values(z, eta)
            c = z.shape[0]
            Ms = []
            for xi, C in zip(basis_idx, Cs):
                Xz = spec.rep(z, xi)
                # M[z, a, b, i, j] = sqrt(d) sum_k C[i, b, k, a] Xz[z, k, j]
                M = np.tensordot(C, Xz, axes=([2], [1]))            # (i, b, a, z, j)
                Ms.append(np.sqrt(xi.dim) * M.transpose(3, 2, 1, 0, 4).reshape(c, de, de, -1))
            M = np.concatenate(Ms, axis=-1).reshape(c, de, de * n)
            N = M if scalar else np.matmul(np.conj(np.swapaxes(Ez, 1, 2)), M)
            SN = np.matmul(Sz, N)
            Nw = (N.conj() * wz[:, None, None]).reshape(-1, n)
            P += de * (Nw.T @ SN.reshape(-1, n))
    return TruncatedOperator(spec, W, P)


def _is_scalar(amp: MollifiedAmplitude, eta: RepIndex, tol: float = 1e-13) -> bool:
    blocks = amp.fourier_form.blocks(eta)
    eye = np.eye(eta.dim)
    for F in blocks:
        diag = np.einsum("abii->ab", F) / eta.dim
        if np.abs(F - diag[:, :, None, None] * eye).max() > tol * max(1.0, np.abs(F).max()):
            return False
    return True


def _double_quadrature(amp: Amplitude, W: float, quad: HaarQuadrature | None) -> TruncatedOperator:
    """Direct quadrature of ``<Op(a) e_b, e_a>`` over node pairs within the support bound."""
    spec = amp.spec
    if quad is None:
        raise ValueError("the quadrature route needs an explicit grid")
    n = basis_size(spec, W)
    for eta in spec.dual(amp.max_weight):
        R = amp.support_radius(eta)
        if math.isfinite(R) and R / quad.spacing < 8:
            raise ResolutionError(f"grid spacing {quad.spacing:.3g} does not resolve support {R:.3g}")
    E = np.concatenate([np.sqrt(i.dim) * rep_values(quad, i).reshape(quad.size, -1)
                        for i in spec.dual(W)], axis=1)
    Ew = E * quad.weights[:, None]
    Z = np.zeros((quad.size, n), dtype=complex)
    for eta in spec.dual(amp.max_weight):
        ii, jj = amp.pair_list(quad, eta)
        if ii.size == 0:
            continue
        Ex = spec.rep(quad.nodes, eta)
        vals = amp.evaluate(quad.nodes[ii], quad.nodes[jj], eta)      # (pairs, d, d)
        # kernel K(x, y) = d Tr(eta(x) a(x, y) eta(y)^*)
        K = eta.dim * np.einsum("pab,pbc,pac->p", Ex[ii], vals, Ex[jj].conj(), optimize=True)
        np.add.at(Z, ii, K[:, None] * Ew[jj])
    T = Ew.conj().T @ Z
    return TruncatedOperator(spec, W, T)
