"""End-to-end Gårding pipeline driven by an :class:`ExperimentConfig`."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .amplitude import build_amplitude, op_from_amplitude
from .config import ExperimentConfig
from .errors import ConfigError, InsufficientDataError, LiequantError, StageError
from .families import builtin_symbol_family
from .garding import (DecayReport, diagonal_defect, garding_constant_single, norm_estimate_constant,
                      parity_integrals, positivity_check, scaled_norm, stabilization, symbol_bound,
                      symbol_defect)
from .groups import GroupSpec, haar_grid
from .mollifier import MollifierSpec
from .operators import TruncatedOperator
from .symbols import loglog_slope, op_norm, quantize_matrix

PARITY_TOL = 1e-9
RATIO_BAND = (0.5, 1.5)
STAB_FLOOR = 1e-8
DECAY_FIT_MIN = 1.5


@dataclass
class Report:
    """Machine-readable outcome of one run.

    ``data`` is a JSON-ready tree; ``flags`` maps flag names to dicts with a
    boolean ``passed`` and the thresholds that produced it; ``decay`` keeps
    the defect reports for the CSV sidecars.
    """

    data: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    decay: dict = field(default_factory=dict)
    garding: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(f["passed"] for f in self.flags.values())

    def to_json(self) -> dict:
        out = dict(self.data)
        out["flags"] = self.flags
        out["passed"] = self.passed
        out["decay"] = {k: _decay_json(v) for k, v in self.decay.items()}
        out["garding_constants"] = [{"cutoff": c, "C": v} for c, v in self.garding]
        return out


def _decay_json(rep: DecayReport) -> dict:
    d = asdict(rep)
    d.pop("extra")
    return d


def quadrature_level(cfg: ExperimentConfig, level: float, x_degree: float = 2.0) -> float:
    """Sampling grid level: exact for ``|xi|^2`` products times the x band limit."""
    if cfg.quadrature_level is not None:
        return cfg.quadrature_level
    return max(1.0, 2 * level + x_degree)


def _cutoff_level(spec: GroupSpec, level: float) -> float:
    # torus grids need integer levels, SU(2) half-integers
    return math.floor(level) if spec.is_torus else math.floor(2 * level) / 2


def build_symbol(cfg: ExperimentConfig, level: float):
    spec = cfg.spec
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, quadrature_level(cfg, _cutoff_level(spec, level)))
    return builtin_symbol_family(cfg.family, cfg.family_params(), quad, W)


def _stage(name):
    def wrap(fn):
        def inner(*a, **kw):
            try:
                return fn(*a, **kw)
            except StageError:
                raise
            except (LiequantError, ValueError, np.linalg.LinAlgError) as exc:
                raise StageError(f"stage {name!r} failed: {exc}") from exc
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner
    return wrap


def _flag(report: Report, name: str, passed: bool, **thresholds) -> None:
    report.flags[name] = {"passed": bool(passed), **thresholds}


def _stab_json(st) -> dict:
    return {"values": st.values, "ratios": st.ratios, "increments": st.increments,
            "ratio_ok": st.ratio_ok, "growth_ok": st.growth_ok, "passed": st.passed}


def _fitted_order(sigma) -> float | None:
    idxs = [i for i in sigma.indices if i.weight >= 1.5]
    vals = [float(op_norm(sigma.at_points(i)).max()) for i in idxs]
    if len(idxs) < 2 or max(vals, default=0.0) <= 1e-14:
        return None
    try:
        return loglog_slope([i.weight for i in idxs], vals, floor=1e-12 * max(vals))
    except InsufficientDataError:
        return None


@_stage("positivity")
def _positivity(cfg, sigma, ms) -> tuple:
    amp = build_amplitude(sigma, ms, eta_max_weight=cfg.eta_factor * sigma.max_weight)
    P = op_from_amplitude(amp, sigma.max_weight)
    return P, positivity_check(P, cfg.tol)


@_stage("decay")
def _decay(cfg: ExperimentConfig, ms: MollifierSpec, m: float, report: Report) -> None:
    spec = cfg.spec
    level = cfg.decay_cutoff if cfg.decay_cutoff is not None else cfg.cutoffs[-1]
    sigma = build_symbol(cfg, level)
    amp = build_amplitude(sigma, ms)
    W = amp.max_weight
    window = (DECAY_FIT_MIN, W / 2)
    diag = diagonal_defect(amp, sigma.quad.nodes, order=m, fit_range=window, max_weight=W / 2)
    plain, corrected = symbol_defect(None, amp, sigma.quad, order=m, fit_range=window)
    parity = parity_integrals(spec, sorted({i.weight for i in spec.dual(W / 2)}), ms)
    for rep in (diag, plain, corrected):
        report.decay[rep.name] = rep
        _flag(report, f"decay_{rep.name}", rep.passed is not False, slope=rep.slope, bound=rep.bound)
    report.data["parity"] = parity
    _flag(report, "parity", max(parity.values()) <= PARITY_TOL, tol=PARITY_TOL)
    report.data["decay_cutoff"] = level


def run_config(cfg: ExperimentConfig) -> Report:
    """Run the configured stages and collect certificates, constants and fits.

    Raises
    ------
    StageError
        When a module error occurs; the message names the stage.
    ConfigError
        When stabilization stages are requested with fewer than three cutoffs.
    """
    cfg.validate()
    spec = cfg.spec
    stages = set(cfg.stages)
    if stages & {"garding", "corollaries"} and len(cfg.cutoffs) < 3:
        raise ConfigError("stabilization reports need at least three cutoffs")
    ms = MollifierSpec(r=cfg.mollifier_r)
    report = Report()
    report.data["config"] = cfg.to_dict()
    report.data["group"] = spec.name
    rows = []
    m = None
    for level in cfg.cutoffs:
        try:
            sigma = build_symbol(cfg, level)
        except LiequantError as exc:
            raise StageError(f"stage 'symbol' failed: {exc}") from exc
        m = sigma.order if cfg.m is None else cfg.m
        row = {"level": level, "max_weight": sigma.max_weight, "order": m,
               "psd_by_construction": bool(getattr(sigma, "psd", False)),
               "fitted_order": _fitted_order(sigma)}
        A = quantize_matrix(sigma)
        row["dimension"] = A.size
        P = None
        if "positivity" in stages or "corollaries" in stages:
            P, cert = _positivity(cfg, sigma, ms)
            row.update(lambda_min=cert.lambda_min, P_norm=cert.op_norm, positivity_tol=cert.tol,
                       positivity_passed=cert.passed)
        if "garding" in stages:
            row["garding_C"] = garding_constant_single(A, m)
            report.garding.append((level, row["garding_C"]))
        if "corollaries" in stages:
            row["Q_scaled_norm"] = scaled_norm(A - P, (m - 1) / 2)
            w = A.weights
            row["A_order_norm"] = float(np.linalg.norm(A.matrix * w[None, :] ** (-m), 2))
            M = symbol_bound(sigma, m)
            row["symbol_bound_M"] = M
            row["norm_estimate_C"] = {f"{s:g}": norm_estimate_constant(A, m, s, M) for s in cfg.s_values}
        rows.append(row)
    report.data["cutoffs"] = rows
    report.data["order_m"] = m

    if "positivity" in stages:
        _flag(report, "positivity", all(r["positivity_passed"] for r in rows),
              rel_tol=cfg.tol, expected=all(r["psd_by_construction"] for r in rows))
    if "garding" in stages:
        st = stabilization([r["garding_C"] for r in rows], cfg.cutoffs, RATIO_BAND, STAB_FLOOR)
        report.data["garding"] = _stab_json(st)
        _flag(report, "garding_stabilization", st.passed, band=list(RATIO_BAND), floor=STAB_FLOOR)
    if "corollaries" in stages:
        seqs = {"Q_scaled_norm": [r["Q_scaled_norm"] for r in rows],
                "A_order_norm": [r["A_order_norm"] for r in rows]}
        for s in cfg.s_values:
            seqs[f"norm_estimate_C_s{s:g}"] = [r["norm_estimate_C"][f"{s:g}"] for r in rows]
        report.data["corollaries"] = {}
        for name, vals in seqs.items():
            st = stabilization(vals, cfg.cutoffs, RATIO_BAND, STAB_FLOOR)
            report.data["corollaries"][name] = _stab_json(st)
            _flag(report, f"stable_{name}", st.passed, band=list(RATIO_BAND), floor=STAB_FLOOR)
    if "decay" in stages:
        _decay(cfg, ms, m, report)
    return report
