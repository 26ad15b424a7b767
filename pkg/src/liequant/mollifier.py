"""The localized mollifier ``w_xi`` and local quadrature around the identity.

For a weight ``<xi>`` the mollifier is::

    w(x) = phi(|log x| <xi>^{1/2}) psi(log x) <xi>^{n/4}

with ``psi = C0 J^{-1/2}``, where ``J`` is the Haar density in exponential
coordinates normalized to ``J(0) = 1``:

* torus: ``J = 1``, Lebesgue measure ``dY / (2 pi)^n``,
* SU(2): ``J(Y) = (sin(|Y|/2) / (|Y|/2))^2``, measure ``dY / (16 pi^2)``.

``C0`` is fixed by ``int phi(|Z|)^2 dZ = 1`` in the same normalized measure,
so ``w(e) = C0 <xi>^{n/4}`` and the L2 norm is one up to quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ResolutionError
from .groups import GroupSpec, HaarQuadrature
from .harmonic import GridFunction

# nodes of the fixed rule used inside the transition profile
_STEP_NODES, _STEP_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - v[inside] ** 2))
    return out


def _bump_integral(tau):
    """``int_{-1}^{tau} exp(-1/(1-v^2)) dv`` with a fixed Gauss-Legendre rule."""
    tau = np.asarray(tau, dtype=float)
    half = 0.5 * (tau + 1.0)
    v = -1.0 + half[..., None] * (_STEP_NODES + 1.0)
    return half * (_bump(v) @ _STEP_WEIGHTS)


_BUMP_TOTAL = float(_bump_integral(np.array(1.0)))


@dataclass(frozen=True)
class MollifierSpec:
    """Shape parameters of the mollifier profile.

    Parameters
    ----------
    r : float, optional
        Support radius at weight one. Defaults to half the injectivity radius.
    plateau : float
        ``phi == 1`` on ``[0, plateau * r]``.
    n_radial : int
        Gauss-Legendre nodes for radial integrals.
    """

    r: float | None = None
    plateau: float = 0.5
    n_radial: int = 256

    def radius(self, spec: GroupSpec) -> float:
        r = 0.5 * spec.injectivity_radius if self.r is None else float(self.r)
        if not 0.0 < r <= 0.9 * spec.injectivity_radius + 1e-12:
            raise ValueError("mollifier radius must lie in (0, 0.9 * injectivity radius]")
        return r

    def phi(self, s, spec: GroupSpec) -> np.ndarray:
        """Cutoff profile: one on the plateau, smooth step to zero at ``r``."""
        r = self.radius(spec)
        a = self.plateau * r
        s = np.asarray(s, dtype=float)
        out = np.where(s <= a, 1.0, 0.0)
        mid = (s > a) & (s < r)
        if np.any(mid):
            tau = 2.0 * (s[mid] - a) / (r - a) - 1.0
            out[mid] = 1.0 - _bump_integral(tau) / _BUMP_TOTAL
        return out


def haar_density(spec: GroupSpec, t) -> np.ndarray:
    """Haar density in exponential coordinates relative to its value at 0."""
    t = np.asarray(t, dtype=float)
    if spec.is_torus:
        return np.ones_like(t)
    return np.sinc(t / (2 * np.pi)) ** 2


def lebesgue_normalization(spec: GroupSpec) -> float:
    """Density of the pulled-back Haar measure at 0 relative to ``dY``."""
    if spec.is_torus:
        return (2 * np.pi) ** (-spec.n)
    return 1.0 / (16 * np.pi ** 2)


def sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@lru_cache(maxsize=32)
def normalization_constant(spec: GroupSpec, ms: MollifierSpec) -> float:
    """``C0 = (int phi(|Z|)^2 dZ)^{-1/2}`` in the normalized Lebesgue measure."""
    r = ms.radius(spec)
    x, w = np.polynomial.legendre.leggauss(ms.n_radial)
    s = 0.5 * r * (x + 1.0)
    ws = 0.5 * r * w
    n = spec.dim
    val = sphere_area(n) * lebesgue_normalization(spec) * np.sum(ws * ms.phi(s, spec) ** 2 * s ** (n - 1))
    return float(val ** -0.5)


class Mollifier:
    """Mollifier at a fixed weight level.

    Parameters
    ----------
    spec : GroupSpec
    weight : float
        ``<xi>``; the support radius is ``r <xi>^{-1/2}``.
    ms : MollifierSpec
    renormalize : bool
        Rescale so the radial quadrature norm is exactly one.
    """

    def __init__(self, spec: GroupSpec, weight: float, ms: MollifierSpec = MollifierSpec(),
                 renormalize: bool = True):
        self.spec = spec
        self.weight = float(weight)
        self.ms = ms
        self.C0 = normalization_constant(spec, ms)
        self.support = ms.radius(spec) / math.sqrt(self.weight)
        x, w = np.polynomial.legendre.leggauss(ms.n_radial)
        self._t = 0.5 * self.support * (x + 1.0)
        self._wt = 0.5 * self.support * w
        self.scale = 1.0
        self.raw_norm = self.norm()
        if renormalize:
            self.scale = 1.0 / self.raw_norm

    @property
    def value_at_identity(self) -> float:
        return self.scale * self.C0 * self.weight ** (self.spec.dim / 4)

    def radial(self, t) -> np.ndarray:
        """Value as a function of the distance to the identity."""
        t = np.asarray(t, dtype=float)
        n = self.spec.dim
        prof = self.ms.phi(t * math.sqrt(self.weight), self.spec)
        return self.scale * prof * self.C0 * haar_density(self.spec, t) ** -0.5 * self.weight ** (n / 4)

    def __call__(self, points) -> np.ndarray:
        t = self.spec.dist_to_identity(points)
        out = np.zeros_like(t)
        inside = t < self.support
        out[inside] = self.radial(t[inside])
        return out

    # radial integrals --------------------------------------------------
    def radial_measure(self) -> tuple:
        """Nodes and weights so that ``sum w h(t)`` integrates a class function over the ball."""
        t, wt = self._t, self._wt
        if self.spec.is_torus:
            n = self.spec.dim
            dens = sphere_area(n) * (2 * np.pi) ** (-n) * t ** (n - 1)
        else:
            dens = np.sin(0.5 * t) ** 2 / np.pi
        return t, wt * dens

    def norm(self) -> float:
        t, w = self.radial_measure()
        return float(math.sqrt(np.sum(w * self.radial(t) ** 2)))

    def moment(self, power: int = 2) -> float:
        t, w = self.radial_measure()
        return float(np.sum(w * self.radial(t) ** power))

    def character_coefficients(self, J, power: int = 1) -> np.ndarray:
        """SU(2): ``int w^power chi_J`` for spins ``J`` (array)."""
        if self.spec.is_torus:
            raise ValueError("character coefficients are defined on SU(2)")
        J = np.asarray(J, dtype=float)
        t = self._t
        vals = self.radial(t) ** power * self._wt
        return (np.sin(np.multiply.outer(2 * J + 1, t) / 2) * np.sin(t / 2)) @ vals / np.pi

    def fourier(self, k, power: int = 1) -> np.ndarray:
        """Torus: ``int w^power e^{-i k.x} dx`` for frequency vectors ``k`` (shape (..., n))."""
        if not self.spec.is_torus:
            raise ValueError("Fourier coefficients here are defined on the torus")
        n = self.spec.dim
        k = np.asarray(k, dtype=float)
        if n == 1 and k.shape[-1:] != (1,):
            k = k[..., None]
        kn = np.linalg.norm(k, axis=-1)
        t = self._t
        vals = self.radial(t) ** power * self._wt
        if n == 1:
            return (np.cos(np.multiply.outer(kn, t)) @ vals) / np.pi
        nu = n / 2 - 1
        kr = np.multiply.outer(kn, t)
        with np.errstate(invalid="ignore", divide="ignore"):
            ker = np.where(kr > 1e-12, special.jv(nu, kr) / np.where(kr > 1e-12, kr, 1.0) ** nu,
                           1.0 / (2 ** nu * math.gamma(nu + 1)))
        # int f(|x|) e^{-ik.x} dx = (2 pi)^{n/2} int f(r) (J_nu(kr)/(kr)^nu) r^{n-1} dr
        return (2 * np.pi) ** (n / 2) * (ker * t ** (n - 1)) @ vals / (2 * np.pi) ** n


@lru_cache(maxsize=4096)
def mollifier_at(spec: GroupSpec, weight: float, ms: MollifierSpec) -> Mollifier:
    return Mollifier(spec, weight, ms)


def build_mollifier(spec: GroupSpec, level, ms: MollifierSpec, quad: HaarQuadrature,
                    min_nodes: int = 8, renormalize: bool = True) -> GridFunction:
    """Sample the mollifier on a quadrature grid.

    ``level`` is a weight or a :class:`RepIndex`. The grid must put at least
    ``min_nodes`` nodes across the support diameter along every axis; the
    samples are rescaled to unit quadrature norm.
    """
    weight = level.weight if hasattr(level, "weight") else float(level)
    mol = mollifier_at(spec, weight, ms)
    per_support = 2 * mol.support / quad.spacing
    if per_support < min_nodes:
        raise ResolutionError(
            f"grid spacing {quad.spacing:.3g} gives {per_support:.1f} nodes per support diameter "
            f"(need {min_nodes}); refine the quadrature")
    gf = GridFunction(quad, mol(quad.nodes))
    if renormalize:
        gf = GridFunction(quad, gf.values / gf.l2_norm())
    return gf


# ---------------------------------------------------------------------------
# local quadrature on a ball around the identity


@dataclass(frozen=True, eq=False)
class BallRule:
    """Quadrature for the Haar measure restricted to a ball around ``e``.

    Nodes are symmetric under inversion, so odd integrands cancel exactly up
    to rounding.
    """

    spec: GroupSpec
    radius: float
    points: np.ndarray
    weights: np.ndarray
    log_coords: np.ndarray


@lru_cache(maxsize=256)
def ball_rule(spec: GroupSpec, radius: float, n_radial: int = 48, n_theta: int = 16) -> BallRule:
    if spec.is_torus:
        x, w = np.polynomial.legendre.leggauss(2 * n_radial)
        x, w = radius * x, radius * w
        grids = np.meshgrid(*([x] * spec.n), indexing="ij")
        wts = np.ones_like(grids[0])
        for ww in np.meshgrid(*([w] * spec.n), indexing="ij"):
            wts = wts * ww
        Y = np.stack([g.reshape(-1) for g in grids], axis=-1)
        wts = wts.reshape(-1) / (2 * np.pi) ** spec.n
        keep = np.linalg.norm(Y, axis=-1) <= radius
        Y, wts = Y[keep], wts[keep]
        return BallRule(spec, radius, spec.exp(Y), wts, Y)
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    t = 0.5 * radius * (xr + 1.0)
    wt = 0.5 * radius * wr * np.sin(0.5 * t) ** 2 / (4 * np.pi ** 2)
    xc, wc = np.polynomial.legendre.leggauss(n_theta)
    nphi = 2 * n_theta
    ph = 2 * np.pi * np.arange(nphi) / nphi
    st = np.sqrt(1.0 - xc ** 2)
    dirs = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)),
                     np.outer(xc, np.ones(nphi))], axis=-1).reshape(-1, 3)
    wdir = np.outer(wc, np.full(nphi, 2 * np.pi / nphi)).reshape(-1)
    Y = (t[:, None, None] * dirs[None]).reshape(-1, 3)
    wts = (wt[:, None] * wdir[None]).reshape(-1)
    return BallRule(spec, radius, spec.exp(Y), wts, Y)
