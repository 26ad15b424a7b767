"""Self-checks behind the ``ft``, ``symbol`` and ``wxi`` subcommands."""

from __future__ import annotations

import numpy as np

from .groups import GroupSpec, haar_grid
from .harmonic import SpectralField, forward_ft, inverse_ft, sobolev_norm
from .mollifier import MollifierSpec, build_mollifier, mollifier_at
from .symbols import extract_symbol, op_norm, quantize_matrix

FT_TOL = 1e-10


def ft_roundtrip(spec: GroupSpec, level: float, count: int = 50, seed: int = 0) -> dict:
    """Parseval and round-trip errors for random band-limited functions.

    Errors are relative to the L2 norm of each function.
    """
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, max(1.0, 2 * level))
    rng = np.random.default_rng(seed)
    pars, trip = 0.0, 0.0
    for _ in range(count):
        F = SpectralField.random(spec, W, rng)
        f = inverse_ft(F, quad)
        nrm = f.l2_norm()
        G = forward_ft(f, W)
        pars = max(pars, abs(sobolev_norm(G) - nrm) / nrm)
        diff = max(float(np.abs(a - b).max()) for a, b in zip(F.mats, G.mats))
        back = inverse_ft(G, quad)
        trip = max(trip, diff / nrm, float(np.abs(back.values - f.values).max()) / nrm)
    return {"level": level, "count": count, "parseval_error": pars, "roundtrip_error": trip,
            "tol": FT_TOL, "passed": bool(max(pars, trip) <= FT_TOL)}


def symbol_roundtrip(sigma, tol: float = 1e-9) -> dict:
    """Quantize, extract and compare against the input symbol."""
    A = quantize_matrix(sigma)
    back = extract_symbol(A, sigma.max_weight, sigma.quad)
    scale = max(float(op_norm(sigma.at_points(i)).max()) for i in sigma.indices)
    err = max(float(op_norm(back.at_points(i) - sigma.at_points(i)).max()) for i in sigma.indices)
    rel = err / max(scale, 1e-300)
    return {"family": sigma.name, "max_weight": sigma.max_weight, "dimension": A.size,
            "roundtrip_error": rel, "tol": tol, "passed": bool(rel <= tol)}


def mollifier_diagnostics(spec: GroupSpec, weights, ms: MollifierSpec = MollifierSpec(),
                          seed: int = 0, samples: int = 2000) -> list:
    """Norm, value at the identity, evenness, centrality and support per weight."""
    rng = np.random.default_rng(seed)
    rows = []
    for wt in weights:
        mol = mollifier_at(spec, float(wt), ms)
        unscaled = mol.C0 * mol.weight ** (spec.dim / 4)
        # points concentrated in the support plus uniform ones
        Y = rng.standard_normal((samples, spec.n))
        Y *= (mol.support * rng.uniform(0, 1.2, samples) / np.linalg.norm(Y, axis=1))[:, None]
        x = spec.exp(Y)
        u = spec.random(rng, (samples,))
        vals = mol(x)
        even = float(np.abs(mol(spec.inv(x)) - vals).max())
        central = float(np.abs(mol(spec.mul(spec.mul(u, x), spec.inv(u))) - vals).max())
        outside = spec.dist_to_identity(x) > mol.support
        support_ok = bool(np.all(vals[outside] == 0.0))
        row = {"weight": float(wt), "support": mol.support, "raw_norm": mol.raw_norm,
               "norm": mol.norm(), "value_at_identity_raw": mol.value_at_identity / mol.scale,
               "expected_value_at_identity": unscaled,
               "value_at_identity": mol.value_at_identity,
               "renormalization_drift": abs(mol.scale - 1.0),
               "evenness_residual": even, "centrality_residual": central,
               "support_exact": support_ok}
        level, quad = resolving_grid(spec, mol.support)
        raw_grid = np.sqrt(quad.integrate(mol(quad.nodes) ** 2).real)
        row.update(grid_level=level, grid_norm=grid_norm(spec, wt, level, ms),
                   grid_renormalization_drift=abs(1.0 / raw_grid - 1.0))
        rows.append(row)
    return rows


def resolving_grid(spec: GroupSpec, support: float, min_nodes: int = 16) -> tuple:
    """Coarsest Haar grid with ``min_nodes`` nodes across the support diameter."""
    level = 1.0
    while True:
        quad = haar_grid(spec, level)
        if 2 * support / quad.spacing >= min_nodes:
            return level, quad
        level *= 2


def grid_norm(spec: GroupSpec, weight: float, level: float, ms: MollifierSpec = MollifierSpec()) -> float:
    """Quadrature norm of the renormalized grid mollifier (one by construction)."""
    gf = build_mollifier(spec, weight, ms, haar_grid(spec, level))
    return gf.l2_norm()
