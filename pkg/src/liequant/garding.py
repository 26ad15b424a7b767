"""Positivity certificates, Gårding constants and defect decay diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .amplitude import MollifiedAmplitude, amplitude_symbol
from .errors import InsufficientDataError, SpecMismatchError
from .groups import GroupSpec, HaarQuadrature, RepIndex
from .harmonic import basis_weights
from .mollifier import MollifierSpec, ball_rule, mollifier_at
from .operators import TruncatedOperator
from .symbols import (Symbol, TaylorSystem, difference_op, extract_symbol, loglog_slope, op_norm)


# ---------------------------------------------------------------------------
# positivity


@dataclass
class PositivityCertificate:
    """Smallest eigenvalue of the Hermitian part against ``-rel_tol * ||T||``."""

    lambda_min: float
    op_norm: float
    tol: float
    passed: bool


def hermitian_min_eigenvalue(M: np.ndarray) -> float:
    H = 0.5 * (M + M.conj().T)
    if H.shape[0] == 0:
        return math.inf
    return float(linalg.eigvalsh(H, subset_by_index=[0, 0])[0])


def positivity_check(T: TruncatedOperator, rel_tol: float = 1e-8) -> PositivityCertificate:
    """Certify ``Re <T v, v> >= 0`` on the truncation up to ``rel_tol * ||T||``."""
    lam = hermitian_min_eigenvalue(T.matrix)
    nrm = T.op_norm()
    tol = rel_tol * nrm
    return PositivityCertificate(lam, nrm, tol, bool(lam >= -tol))


# ---------------------------------------------------------------------------
# stabilization across truncations


@dataclass
class StabilizationReport:
    """Ratio test and growth check for a sequence indexed by cutoffs.

    ``ratios[k] = v[k+1] / max(v[k], floor)``; a pair with both values at or
    below ``floor`` counts as stable. The sequence grows without bound in
    the sense of this check when the increments over the last three cutoffs
    are positive and increasing and the last one exceeds ``rel_stall`` times
    the last value; smaller increments count as stalled.
    """

    cutoffs: list
    values: list
    increments: list
    ratios: list
    band: tuple
    floor: float
    ratio_ok: bool
    growth_ok: bool
    passed: bool


def stabilization(values: Sequence[float], cutoffs: Sequence[float], band: tuple = (0.5, 1.5),
                  floor: float = 1e-8, rel_slack: float = 1e-9,
                  rel_stall: float = 0.05) -> StabilizationReport:
    v = [float(x) for x in values]
    if len(v) < 3:
        raise InsufficientDataError("stabilization needs at least three cutoffs")
    inc = [b - a for a, b in zip(v[:-1], v[1:])]
    ratios, ok = [], True
    for a, b in zip(v[:-1], v[1:]):
        if max(a, b) <= floor:
            ratios.append(1.0)
            continue
        r = b / max(a, floor)
        ratios.append(r)
        ok &= band[0] <= r <= band[1]
    last = inc[-2:]
    slack = rel_slack * max(1.0, max(abs(x) for x in v))
    accelerating = (last[0] > slack and last[1] > last[0] + slack
                    and last[1] > rel_stall * abs(v[-1]))
    return StabilizationReport(list(cutoffs), v, inc, ratios, tuple(band), floor, bool(ok),
                               not accelerating, bool(ok and not accelerating))


# ---------------------------------------------------------------------------
# Gårding constants


def _scaled(T: TruncatedOperator, power: float, hermitian: bool = True) -> np.ndarray:
    s = T.weights ** (-power)
    M = 0.5 * (T.matrix + T.matrix.conj().T) if hermitian else T.matrix
    return s[:, None] * M * s[None, :]


def garding_constant_single(T: TruncatedOperator, m: float) -> float:
    """``max(0, -lambda_min(L^{-(m-1)/2} Re T L^{-(m-1)/2}))`` with ``L = diag(<xi>)``."""
    return max(0.0, -hermitian_min_eigenvalue(_scaled(T, (m - 1) / 2)))


@dataclass
class GardingReport:
    m: float
    cutoffs: list
    constants: list
    stabilization: StabilizationReport


def garding_constant(ops: Sequence[TruncatedOperator], m: float, **kw) -> GardingReport:
    """Gårding constants ``C_L`` of a family of truncations and their stabilization."""
    if len(ops) < 3:
        raise InsufficientDataError("the Gårding sequence needs at least three cutoffs")
    cut = [T.max_weight for T in ops]
    if any(b <= a for a, b in zip(cut[:-1], cut[1:])):
        raise SpecMismatchError("cutoffs must increase")
    C = [garding_constant_single(T, m) for T in ops]
    return GardingReport(m, cut, C, stabilization(C, cut, **kw))


def scaled_norm(T: TruncatedOperator, power: float, hermitian: bool = True) -> float:
    """``|| L^{-power} (Re) T L^{-power} ||_op``."""
    M = _scaled(T, power, hermitian)
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def norm_estimate_constant(A: TruncatedOperator, m: float, s: float, M: float) -> float:
    """Smallest ``C >= 0`` with ``M^2 L^{2m+2s} + C L^{2m+2s-1} - A^* L^{2s} A >= 0``."""
    w = A.weights
    G = A.matrix.conj().T @ (w[:, None] ** (2 * s) * A.matrix)
    H = np.diag(M * M * w ** (2 * m + 2 * s)) - G
    sc = w ** (-(2 * m + 2 * s - 1) / 2)
    lam = hermitian_min_eigenvalue(sc[:, None] * H * sc[None, :])
    return max(0.0, -lam)


def symbol_bound(sigma: Symbol, m: float) -> float:
    """``M = sup_{x, xi} <xi>^{-m} ||sigma(x, xi)||_op`` over the sample points."""
    return max(float(op_norm(sigma.at_points(i)).max()) * i.weight ** (-m) for i in sigma.indices)


# ---------------------------------------------------------------------------
# decay reports


@dataclass
class DecayReport:
    """``max_x`` defect norms per index with a log-log slope over the fit window."""

    name: str
    labels: list
    weights: list
    values: list
    fit_weights: list
    slope: float | None
    bound: float | None
    passed: bool | None
    extra: dict = field(default_factory=dict)


def _fit(name, idxs, vals, fit_range, bound, extra=None, floor=1e-14) -> DecayReport:
    w = np.array([i.weight for i in idxs])
    v = np.array(vals)
    lo, hi = fit_range
    mask = (w >= lo - 1e-12) & (w <= hi + 1e-12)
    if mask.sum() < 3:
        raise InsufficientDataError(f"{name}: fewer than three indices in the fit window")
    scale = float(v.max()) if v.size else 0.0
    if scale <= floor:
        slope = None
        passed = True if bound is not None else None
    else:
        slope = loglog_slope(w[mask], v[mask], floor=floor * scale)
        passed = None if bound is None else bool(slope <= bound)
    return DecayReport(name, [str(i) for i in idxs], w.tolist(), v.tolist(), w[mask].tolist(),
                       slope, bound, passed, extra or {})


def _max_op(arr) -> float:
    return float(op_norm(arr).max())


def diagonal_defect(amp: MollifiedAmplitude, points, order: float | None = None,
                    fit_range: tuple | None = None, max_weight: float | None = None) -> DecayReport:
    """``d(xi) = max_x ||p(x, x, xi) - sigma(x, xi)||`` with slope bound ``m - 1 + 0.3``."""
    sigma = amp.sigma
    m = sigma.order if order is None else order
    W = amp.max_weight if max_weight is None else max_weight
    idxs = amp.spec.dual(W + 1e-9)
    vals = [_max_op(amp.diagonal(points, i) - amp.sigma_values(points, i)) for i in idxs]
    fr = fit_range or (2.0, W)
    bound = None if m is None else m - 1 + 0.3
    return _fit("diagonal_defect", idxs, vals, fr, bound)


def symbol_defect(P: TruncatedOperator | None, amp: MollifiedAmplitude, quad: HaarQuadrature,
                  order: float | None = None, fit_range: tuple | None = None,
                  corrected: bool = True, taylor_h: float = 0.05) -> tuple:
    """``e(xi) = max_x ||sigma_P(x, xi) - p(x, x, xi)||`` on interior indices.

    With ``P`` given, ``sigma_P`` is extracted from the truncated matrix;
    otherwise it is the closed-form symbol of ``Op(p)``. Indices in the outer
    dyadic shell of the amplitude cutoff are excluded. Returns the plain
    report and, when ``corrected``, the report for the defect after removing
    ``sum_j Delta_{q_j} c_j`` with ``c_j`` the first-order y-derivative of
    ``p`` at ``y = x``.
    """
    spec = amp.spec
    m = amp.sigma.order if order is None else order
    W = amp.max_weight
    interior = W / 2 + 1e-9
    if P is not None:
        interior = min(interior, P.max_weight)
        sP = extract_symbol(P, P.max_weight, quad)
    else:
        sP = amplitude_symbol(amp, quad, interior)
    idxs = [i for i in spec.dual(interior)]
    if not idxs:
        raise InsufficientDataError("no interior indices")
    diag = {i.label: amp.diagonal(quad.nodes, i) for i in spec.dual(sP.max_weight)}
    vals = [_max_op(sP.at_points(i) - diag[i.label]) for i in idxs]
    fr = fit_range or (2.0, interior)
    bound = None if m is None else m - 1 + 0.3
    plain = _fit("symbol_defect", idxs, vals, fr, bound)
    if not corrected:
        return plain, None
    ts = TaylorSystem(spec, 2, taylor_h)
    corr = {i.label: sP.at_points(i) - diag[i.label] for i in idxs}
    degree = 1.0 if spec.is_torus else 0.5
    # differences reach one step beyond the interior
    reach = max(math.sqrt(i.lambda_sq) if spec.is_torus else i.spin for i in idxs)
    top = spec.dual(spec.weight_of_level(reach + (1.0 if spec.is_torus else 0.5)) + 1e-9)
    for j in range(spec.n):
        X = spec.unit_vector(j)
        grid = {i.label: amp.first_order_term(quad.nodes, i, X) for i in top}
        cj = Symbol(spec, top[-1].weight, quad=quad, grid=grid, name=f"first-order-{j}")
        q = _TaylorCoordinate(ts, j)
        Dc = difference_op(q, cj, degree)
        for i in idxs:
            corr[i.label] = corr[i.label] - Dc.at_points(i)
    cvals = [_max_op(corr[i.label]) for i in idxs]
    corrected_rep = _fit("symbol_defect_corrected", idxs, cvals, fr, bound)
    return plain, corrected_rep


class _TaylorCoordinate:
    def __init__(self, ts: TaylorSystem, j: int):
        self.ts, self.j = ts, j

    def __call__(self, points):
        return self.ts.q(points)[..., self.j]


# ---------------------------------------------------------------------------
# parity integrals


def parity_integrals(spec: GroupSpec, weights: Sequence[float], ms: MollifierSpec = MollifierSpec(),
                     ball: tuple = (48, 16)) -> dict:
    """Odd first moments of the mollifier that must vanish.

    ``int w^2 q_j`` for the odd Taylor coordinates and ``int w d_X w`` for
    unit directions ``X`` (the latter evaluated as ``1/2 int X(w^2)``,
    centred differences along the flow).
    """
    ts = TaylorSystem(spec, 1)
    moment, derivative = 0.0, 0.0
    for wt in weights:
        mol = mollifier_at(spec, float(wt), ms)
        br = ball_rule(spec, mol.support, *ball)
        wv = mol(br.points)
        qv = ts.q(br.points)
        moment = max(moment, float(np.abs(np.einsum("t,tj->j", br.weights * wv ** 2, qv)).max()))
        h = 1e-4 * mol.support
        for j in range(spec.n):
            X = spec.unit_vector(j)
            plus = mol(spec.mul(br.points, spec.exp(h * X)))
            minus = mol(spec.mul(br.points, spec.exp(-h * X)))
            dw = (plus - minus) / (2 * h)
            derivative = max(derivative, abs(float(np.sum(br.weights * wv * dw))))
    return {"first_moment": moment, "w_times_derivative": derivative}
