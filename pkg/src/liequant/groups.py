"""Concrete compact groups: the torus T^n and SU(2).

Points are stored as plain numpy arrays so every operation is vectorized
over leading axes:

* torus points are angle vectors of shape ``(..., n)``,
* SU(2) points are unit quaternions ``(w, x, y, z)`` of shape ``(..., 4)``.

The quaternion ``(w, x, y, z)`` is identified with the matrix
``w I - i (x s1 + y s2 + z s3)`` where ``s1, s2, s3`` are the Pauli
matrices. The Lie algebra basis is ``X_j = -i s_j / 2``; with this choice
``[X_1, X_2] = X_3`` cyclically, ``exp(t X_j)`` has period ``4 pi`` and the
Casimir eigenvalue on the spin-``l`` representation is ``l (l + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError, SpecMismatchError

TWO_PI = 2.0 * np.pi

# Largest number of quadrature nodes we are willing to allocate.
MAX_GRID_NODES = 4_000_000


# ---------------------------------------------------------------------------
# group specification


@dataclass(frozen=True)
class GroupSpec:
    """A concrete compact group.

    Parameters
    ----------
    kind : {"torus", "su2"}
    n : int
        Torus dimension (ignored for SU(2), where it is forced to 3).
    """

    kind: str
    n: int = 3

    def __post_init__(self):
        if self.kind not in ("torus", "su2"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "su2":
            object.__setattr__(self, "n", 3)
        if self.n < 1:
            raise ValueError("group dimension must be >= 1")

    # basic data ---------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.n

    @property
    def injectivity_radius(self) -> float:
        return float(np.pi)

    @property
    def point_size(self) -> int:
        return self.n if self.kind == "torus" else 4

    @property
    def is_torus(self) -> bool:
        return self.kind == "torus"

    @property
    def name(self) -> str:
        return f"torus{self.n}" if self.is_torus else "su2"

    def identity(self) -> np.ndarray:
        if self.is_torus:
            return np.zeros(self.n)
        return np.array([1.0, 0.0, 0.0, 0.0])

    def check_points(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-1:] != (self.point_size,):
            raise SpecMismatchError(
                f"{self.name} points need trailing size {self.point_size}, got shape {g.shape}")
        return g

    # group law ----------------------------------------------------------
    def mul(self, g, h) -> np.ndarray:
        g, h = self.check_points(g), self.check_points(h)
        if self.is_torus:
            return np.mod(g + h, TWO_PI)
        return quat_mul(g, h)

    def inv(self, g) -> np.ndarray:
        g = self.check_points(g)
        if self.is_torus:
            return np.mod(-g, TWO_PI)
        return g * np.array([1.0, -1.0, -1.0, -1.0])

    def conjugate(self, u, g) -> np.ndarray:
        """Return ``u g u^{-1}``."""
        return self.mul(self.mul(u, g), self.inv(u))

    # exponential coordinates -------------------------------------------
    def exp(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1:] != (self.n,):
            raise SpecMismatchError(f"Lie algebra vectors need trailing size {self.n}")
        if self.is_torus:
            return np.mod(X, TWO_PI)
        t = np.linalg.norm(X, axis=-1)
        half = 0.5 * t
        # sin(t/2)/t, smooth at t = 0
        scale = 0.5 * np.sinc(half / np.pi)
        return np.concatenate([np.cos(half)[..., None], scale[..., None] * X], axis=-1)

    def dist_to_identity(self, g) -> np.ndarray:
        """Geodesic distance to the identity, equal to the norm of ``log g``."""
        g = self.check_points(g)
        if self.is_torus:
            return np.linalg.norm(wrap_angle(g), axis=-1)
        v = np.linalg.norm(g[..., 1:], axis=-1)
        return 2.0 * np.arctan2(v, g[..., 0])

    def log(self, g, check: bool = True) -> np.ndarray:
        g = self.check_points(g)
        if self.is_torus:
            Y = wrap_angle(g)
            if check and np.any(np.linalg.norm(Y, axis=-1) >= self.injectivity_radius):
                raise DomainError("log requested at or beyond the injectivity radius")
            return Y
        v = g[..., 1:]
        s = np.linalg.norm(v, axis=-1)
        t = 2.0 * np.arctan2(s, g[..., 0])
        if check and np.any(t >= self.injectivity_radius):
            raise DomainError("log requested at or beyond the injectivity radius")
        with np.errstate(invalid="ignore", divide="ignore"):
            factor = np.where(s > 1e-300, t / np.where(s > 1e-300, s, 1.0), 2.0)
        return factor[..., None] * v

    def ad(self, u, X) -> np.ndarray:
        """Adjoint action ``u X u^{-1}`` on Lie algebra coordinates."""
        X = np.asarray(X, dtype=float)
        if self.is_torus:
            return X.copy()
        u = self.check_points(u)
        pure = np.concatenate([np.zeros(X.shape[:-1] + (1,)), X], axis=-1)
        return quat_mul(quat_mul(u, pure), self.inv(u))[..., 1:]

    # random sampling ----------------------------------------------------
    def random(self, rng: np.random.Generator, size=()) -> np.ndarray:
        """Haar-distributed random points."""
        size = (size,) if np.isscalar(size) else tuple(size)
        if self.is_torus:
            return rng.uniform(0.0, TWO_PI, size=size + (self.n,))
        q = rng.standard_normal(size + (4,))
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    # unitary dual -------------------------------------------------------
    def trivial(self) -> "RepIndex":
        if self.is_torus:
            return RepIndex(self, (0,) * self.n)
        return RepIndex(self, (0,))

    def su2_index(self, l: float) -> "RepIndex":
        two_l = int(round(2 * l))
        if self.is_torus or abs(two_l - 2 * l) > 1e-12 or two_l < 0:
            raise ValueError(f"invalid SU(2) spin {l}")
        return RepIndex(self, (two_l,))

    def torus_index(self, k) -> "RepIndex":
        k = tuple(int(v) for v in np.atleast_1d(k))
        if not self.is_torus or len(k) != self.n:
            raise ValueError(f"invalid torus frequency {k}")
        return RepIndex(self, k)

    def weight_of_level(self, level: float) -> float:
        """Weight bound of the cutoff at ``level``.

        ``level`` is the spin ``l`` on SU(2) and the Euclidean frequency
        radius on the torus.
        """
        if self.is_torus:
            return math.sqrt(1.0 + level * level)
        return math.sqrt(1.0 + level * (level + 1.0))

    def dual(self, max_weight: float) -> list["RepIndex"]:
        """All indices with weight <= ``max_weight``, weight-then-lexicographic."""
        return list(_dual_cached(self, round(float(max_weight), 12)))

    def dual_upto(self, level: float) -> list["RepIndex"]:
        return self.dual(self.weight_of_level(level))

    # representations ----------------------------------------------------
    def rep(self, g, idx: "RepIndex") -> np.ndarray:
        """Representation matrices ``idx(g)`` of shape ``(..., d, d)``."""
        g = self.check_points(g)
        if self.is_torus:
            phase = g @ np.asarray(idx.label, dtype=float)
            return np.exp(1j * phase)[..., None, None]
        return wigner_from_quaternion(g, idx.label[0])

    def lie_rep(self, idx: "RepIndex", X) -> np.ndarray:
        """The derived representation ``d idx(X)``; anti-Hermitian."""
        X = np.asarray(X, dtype=float)
        if self.is_torus:
            return np.array([[1j * float(np.dot(idx.label, X))]])
        J = spin_generators(idx.label[0])
        return X[0] * J[0] + X[1] * J[1] + X[2] * J[2]

    def laplace_eigenvalue(self, idx: "RepIndex") -> float:
        return idx.lambda_sq

    def unit_vector(self, j: int) -> np.ndarray:
        X = np.zeros(self.n)
        X[j] = 1.0
        return X


TORUS1 = GroupSpec("torus", 1)
SU2 = GroupSpec("su2")


def torus(n: int = 1) -> GroupSpec:
    return GroupSpec("torus", n)


def su2() -> GroupSpec:
    return SU2


@dataclass(frozen=True, order=False)
class RepIndex:
    """An irreducible representation class.

    ``label`` is the integer frequency vector on the torus and ``(2l,)`` on
    SU(2).
    """

    spec: GroupSpec = field(repr=False)
    label: tuple

    @property
    def dim(self) -> int:
        return 1 if self.spec.is_torus else self.label[0] + 1

    @property
    def spin(self) -> float:
        return 0.5 * self.label[0]

    @property
    def lambda_sq(self) -> float:
        if self.spec.is_torus:
            return float(sum(k * k for k in self.label))
        l = self.spin
        return l * (l + 1.0)

    @property
    def weight(self) -> float:
        return math.sqrt(1.0 + self.lambda_sq)

    @property
    def level(self) -> float:
        """Sup-norm frequency on the torus, spin on SU(2)."""
        if self.spec.is_torus:
            return float(max(abs(k) for k in self.label))
        return self.spin

    @property
    def sort_key(self):
        return (round(self.weight, 12), self.label)

    def __str__(self):
        if self.spec.is_torus:
            return "xi=" + ",".join(str(k) for k in self.label)
        two_l = self.label[0]
        return f"l={two_l // 2}" if two_l % 2 == 0 else f"l={two_l}/2"


@lru_cache(maxsize=64)
def _dual_cached(spec: GroupSpec, max_weight: float) -> tuple:
    bound = max_weight * max_weight - 1.0 + 1e-9
    out = []
    if spec.is_torus:
        R = int(math.floor(math.sqrt(max(bound, 0.0))))
        axes = [np.arange(-R, R + 1)] * spec.n
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.n)
        for k in grid[(grid ** 2).sum(axis=1) <= bound]:
            out.append(RepIndex(spec, tuple(int(v) for v in k)))
    else:
        two_l = 0
        while (0.5 * two_l) * (0.5 * two_l + 1.0) <= bound:
            out.append(RepIndex(spec, (two_l,)))
            two_l += 1
    out.sort(key=lambda r: r.sort_key)
    return tuple(out)


# ---------------------------------------------------------------------------
# quaternion helpers


def quat_mul(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    w1, x1, y1, z1 = np.moveaxis(p, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(q, -1, 0)
    return np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)


def quat_to_matrix(q) -> np.ndarray:
    """2x2 SU(2) matrix ``w I - i (x s1 + y s2 + z s3)``."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = np.moveaxis(q, -1, 0)
    out = np.empty(q.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = w - 1j * z
    out[..., 0, 1] = -y - 1j * x
    out[..., 1, 0] = y - 1j * x
    out[..., 1, 1] = w + 1j * z
    return out


def wrap_angle(a) -> np.ndarray:
    """Map angles to ``[-pi, pi)``."""
    return np.mod(np.asarray(a, dtype=float) + np.pi, TWO_PI) - np.pi


def euler_to_quaternion(alpha, beta, gamma) -> np.ndarray:
    """Quaternion of ``exp(alpha X3) exp(beta X2) exp(gamma X3)``."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (alpha, beta, gamma)))
    zero = np.zeros_like(alpha)
    qa = np.stack([np.cos(alpha / 2), zero, zero, np.sin(alpha / 2)], axis=-1)
    qb = np.stack([np.cos(beta / 2), zero, np.sin(beta / 2), zero], axis=-1)
    qc = np.stack([np.cos(gamma / 2), zero, zero, np.sin(gamma / 2)], axis=-1)
    return quat_mul(quat_mul(qa, qb), qc)


# ---------------------------------------------------------------------------
# Wigner D-matrices as symmetric powers of the defining representation
#
# Basis of Sym^{2l}(C^2): f_k = e1^p e2^(2l-p) / sqrt(p! (2l-p)!), k = 2l - p,
# so that l = 1/2 reproduces the 2x2 matrix itself and k = 0 carries the
# J_3 eigenvalue m = l.


@lru_cache(maxsize=None)
def _binom_table(n: int) -> np.ndarray:
    return np.array([[math.comb(p, i) if i <= p else 0 for i in range(n + 1)]
                     for p in range(n + 1)], dtype=float)


@lru_cache(maxsize=None)
def _norm_table(n: int) -> np.ndarray:
    # sqrt(r! (n-r)!) / sqrt(p! (n-p)!) indexed [r, p]
    lf = np.array([math.lgamma(r + 1) + math.lgamma(n - r + 1) for r in range(n + 1)])
    return np.exp(0.5 * (lf[:, None] - lf[None, :]))


def symmetric_power(M, two_l: int) -> np.ndarray:
    """Action of a 2x2 matrix batch on ``Sym^{2l}``, shape ``(..., 2l+1, 2l+1)``.

    Polynomial in the entries, so it is exactly multiplicative and maps
    unitary matrices to unitary matrices.
    """
    M = np.asarray(M, dtype=complex)
    n = int(two_l)
    lead = M.shape[:-2]
    a, b, c, d = M[..., 0, 0], M[..., 0, 1], M[..., 1, 0], M[..., 1, 1]
    pw = lambda v: v[..., None] ** np.arange(n + 1)
    A, B, C, D = pw(a), pw(b), pw(c), pw(d)
    binom = _binom_table(n)
    out = np.zeros(lead + (n + 1, n + 1), dtype=complex)
    # column p: image of e1^p e2^q, q = n - p, expanded in powers r of e1
    for p in range(n + 1):
        q = n - p
        left = binom[p, :p + 1] * A[..., :p + 1] * C[..., p::-1]        # i = 0..p
        right = binom[q, :q + 1] * B[..., :q + 1] * D[..., q::-1]       # j = 0..q
        col = np.zeros(lead + (n + 1,), dtype=complex)
        for i in range(p + 1):
            col[..., i:i + q + 1] += left[..., i:i + 1] * right
        out[..., :, p] = col
    out *= _norm_table(n)
    # reorder r, p (powers of e1) to k = n - r, n - p
    return out[..., ::-1, ::-1]


def wigner_from_quaternion(q, two_l: int) -> np.ndarray:
    if two_l == 0:
        return np.ones(np.shape(q)[:-1] + (1, 1), dtype=complex)
    return symmetric_power(quat_to_matrix(q), two_l)


@lru_cache(maxsize=None)
def _spin_generators_cached(two_l: int) -> tuple:
    n = two_l
    pauli = [np.array([[0, 1], [1, 0]], dtype=complex),
             np.array([[0, -1j], [1j, 0]], dtype=complex),
             np.array([[1, 0], [0, -1]], dtype=complex)]
    gens = []
    for s in pauli:
        A = -0.5j * s
        out = np.zeros((n + 1, n + 1), dtype=complex)
        # derivation on e1^p e2^q in the normalized basis, indices r = powers of e1
        for p in range(n + 1):
            q = n - p
            out[p, p] += p * A[0, 0] + q * A[1, 1]
            if p >= 1:
                out[p - 1, p] += A[1, 0] * math.sqrt(p * (q + 1))
            if q >= 1:
                out[p + 1, p] += A[0, 1] * math.sqrt(q * (p + 1))
        out = out[::-1, ::-1]
        out.setflags(write=False)
        gens.append(out)
    return tuple(gens)


def spin_generators(two_l: int) -> tuple:
    """Derived representation of ``X_1, X_2, X_3`` on spin ``two_l / 2``."""
    return _spin_generators_cached(int(two_l))


# ---------------------------------------------------------------------------
# Haar quadrature


@dataclass(frozen=True, eq=False)
class HaarQuadrature:
    """Product quadrature for the normalized Haar measure.

    Attributes
    ----------
    spec : GroupSpec
    nodes : ndarray, shape (N, point_size)
    weights : ndarray, shape (N,)
    level : float
        Products of matrix coefficients with total level ``<= level`` are
        integrated exactly (spin sum on SU(2), sup-norm frequency on T^n).
    shape : tuple
        Tensor layout of the nodes (``(M,)*n`` on T^n and
        ``(n_beta, n_alpha, n_gamma)`` on SU(2)).
    axes : tuple of ndarray
        One-dimensional node sets along each tensor axis.
    """

    spec: GroupSpec
    nodes: np.ndarray
    weights: np.ndarray
    level: float
    shape: tuple
    axes: tuple

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def exactness_level(self) -> float:
        return self.level

    def integrate(self, values) -> np.ndarray:
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))

    @property
    def spacing(self) -> float:
        """Largest geodesic gap between neighbouring nodes along an axis."""
        if self.spec.is_torus:
            return TWO_PI / self.shape[0]
        beta = self.axes[0]
        gaps = np.diff(np.concatenate([[0.0], beta, [np.pi]]))
        return float(max(gaps.max(), TWO_PI / self.shape[1], 2 * TWO_PI / self.shape[2]))


@lru_cache(maxsize=16)
def haar_grid(spec: GroupSpec, level: float) -> HaarQuadrature:
    """Quadrature exact for products of matrix coefficients up to ``level``.

    On SU(2) ``level`` may be a half-integer; the Gauss-Legendre rule in
    ``cos beta`` gets ``ceil(level) + 1`` nodes, ``alpha`` gets
    ``2 level + 2`` and ``gamma`` gets ``4 level + 4`` uniform nodes.
    """
    if level < 1:
        raise ValueError("quadrature level must be >= 1")
    if spec.is_torus:
        M = int(math.floor(level)) + 1
        if M ** spec.n > MAX_GRID_NODES:
            raise ResourceError(f"torus grid with {M ** spec.n} nodes exceeds budget")
        ax = TWO_PI * np.arange(M) / M
        mesh = np.stack(np.meshgrid(*([ax] * spec.n), indexing="ij"), axis=-1)
        nodes = mesh.reshape(-1, spec.n)
        weights = np.full(nodes.shape[0], 1.0 / nodes.shape[0])
        return HaarQuadrature(spec, nodes, weights, float(math.floor(level)), (M,) * spec.n, (ax,) * spec.n)
    lev = math.ceil(2 * level) / 2
    nb = int(math.ceil(lev)) + 1
    na = int(2 * lev + 2)
    ng = int(4 * lev + 4)
    if nb * na * ng > MAX_GRID_NODES:
        raise ResourceError(f"SU(2) grid with {nb * na * ng} nodes exceeds budget")
    xg, wg = np.polynomial.legendre.leggauss(nb)
    beta = np.arccos(xg[::-1])
    wb = wg[::-1] / 2.0
    alpha = TWO_PI * np.arange(na) / na
    gamma = 2 * TWO_PI * np.arange(ng) / ng
    B, A, G = np.meshgrid(beta, alpha, gamma, indexing="ij")
    nodes = euler_to_quaternion(A, B, G).reshape(-1, 4)
    weights = np.broadcast_to(wb[:, None, None] / (na * ng), (nb, na, ng)).reshape(-1).copy()
    return HaarQuadrature(spec, nodes, weights, float(lev), (nb, na, ng), (beta, alpha, gamma))


def quadrature_for(spec: GroupSpec, level: float) -> HaarQuadrature:
    return haar_grid(spec, float(level))
