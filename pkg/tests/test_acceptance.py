"""Acceptance criteria at their stated tolerances and runtime budgets.

Each test records its criterion number; ``conftest.py`` prints one PASS or
FAIL line per criterion at the end of the run.
"""

import json
import time

import numpy as np
import pytest

from liequant.amplitude import build_amplitude, op_from_amplitude
from liequant.config import ExperimentConfig
from liequant.diagnostics import ft_roundtrip, mollifier_diagnostics
from liequant.families import builtin_symbol_family
from liequant.garding import diagonal_defect, parity_integrals, positivity_check, symbol_defect
from liequant.groups import SU2, TORUS1, haar_grid
from liequant.harmonic import SpectralField, convolve, spectral_inner
from liequant.mollifier import MollifierSpec
from liequant.operators import TruncatedOperator, identity_operator
from liequant.pipeline import run_config
from liequant.report import emit_outputs
from liequant.symbols import (constant_symbol, dd_family, extract_symbol, leibniz_residual,
                              multiplication_symbol, quantize_matrix)

MS = MollifierSpec()


class Timer:
    def __init__(self, budget):
        self.budget = budget
        self.start = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.start

    def check(self):
        assert self.elapsed <= self.budget, f"runtime {self.elapsed:.1f} s exceeds {self.budget} s"


def _criterion(record_property, label):
    record_property("criterion", label)


def _detail(record_property, text):
    record_property("detail", text)


# 1 ---------------------------------------------------------------------------
def test_transform_correctness(record_property):
    _criterion(record_property, "1 transform correctness")
    timer = Timer(30)
    rows = [ft_roundtrip(TORUS1, 32.0, count=50, seed=0), ft_roundtrip(SU2, 6.0, count=50, seed=0)]
    worst = max(max(r["parseval_error"], r["roundtrip_error"]) for r in rows)
    _detail(record_property, f"max error {worst:.2e} in {timer.elapsed:.1f} s")
    assert worst <= 1e-10
    timer.check()


# 2 ---------------------------------------------------------------------------
@pytest.mark.parametrize("spec,level", [(SU2, 3.0), (TORUS1, 16.0)], ids=["su2", "torus1"])
def test_quantization_roundtrip(record_property, spec, level):
    _criterion(record_property, f"2 quantization round-trip ({spec.name})")
    timer = Timer(60)
    rng = np.random.default_rng(11)
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, 2 * level)
    n = identity_operator(spec, W).size
    g = (lambda x: 1.0 + np.cos(x[..., 0])) if spec.is_torus else (lambda x: 1.0 + x[..., 0])
    S = SpectralField.random(spec, W, rng)
    ops = {
        "identity": identity_operator(spec, W),
        "multiplication": quantize_matrix(multiplication_symbol(quad, W, g, x_degree=0.5 if not spec.is_torus else 1.0)),
        "spectral_multiplier": quantize_matrix(constant_symbol(quad, W, lambda i: S[i])),
        "random": TruncatedOperator(spec, W, rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))),
    }
    errs = {}
    for name, A in ops.items():
        B = quantize_matrix(extract_symbol(A, W, quad), quad)
        errs[name] = float(np.abs(B.matrix - A.matrix).max() / max(1.0, np.abs(A.matrix).max()))
    _detail(record_property, f"max error {max(errs.values()):.2e} in {timer.elapsed:.1f} s")
    assert max(errs.values()) <= 1e-9, errs
    timer.check()


# 3 ---------------------------------------------------------------------------
@pytest.mark.parametrize("spec,level", [(SU2, 3.0), (TORUS1, 16.0)], ids=["su2", "torus1"])
def test_invariant_operator_positivity(record_property, spec, level):
    _criterion(record_property, f"3 invariant-operator positivity ({spec.name})")
    timer = Timer(10)
    rng = np.random.default_rng(12)
    W = spec.weight_of_level(level)

    def psd(i):
        B = rng.standard_normal((i.dim, i.dim)) + 1j * rng.standard_normal((i.dim, i.dim))
        return B @ B.conj().T

    A = SpectralField.from_function(spec, W, psd)
    worst = min(spectral_inner(convolve(A, F), F).real
                for F in (SpectralField.random(spec, W, rng) for _ in range(100)))
    assert worst >= -1e-10

    # plant a negative eigenvalue at one index and build the witness from its eigenvector
    target = spec.dual(W)[len(spec.dual(W)) // 2]
    mats = list(A.mats)
    k = A.position(target)
    lam, vec = np.linalg.eigh(mats[k])
    mats[k] = mats[k] - (lam[0] + 0.5) * np.outer(vec[:, 0], vec[:, 0].conj())
    planted = SpectralField(spec, W, A.indices, tuple(mats))
    wmats = [np.zeros((i.dim, i.dim), dtype=complex) for i in A.indices]
    wmats[k] = np.outer(vec[:, 0], vec[:, 0].conj())
    witness = SpectralField(spec, W, A.indices, tuple(wmats))
    value = spectral_inner(convolve(planted, witness), witness).real
    _detail(record_property, f"min over random {worst:.2e}, witness {value:.3f} in {timer.elapsed:.1f} s")
    assert value < -1e-6
    timer.check()


# 4 ---------------------------------------------------------------------------
def test_finite_leibniz(record_property):
    _criterion(record_property, "4 finite Leibniz formula")
    timer = Timer(30)
    rng = np.random.default_rng(13)
    worst = {}
    for spec, level, tol in ((SU2, 3.0, 1e-9), (TORUS1, 16.0, 1e-12)):
        fam = dd_family(spec)
        W = spec.weight_of_level(level)
        res = 0.0
        for _ in range(20):
            a, b = SpectralField.random(spec, W, rng), SpectralField.random(spec, W, rng)
            res = max(res, max(leibniz_residual(fam, a, b, ij) for ij in fam.labels))
        worst[spec.name] = res
        assert res <= tol, (spec.name, res)
    _detail(record_property, f"su2 {worst['su2']:.1e}, torus {worst['torus1']:.1e} in {timer.elapsed:.1f} s")
    timer.check()


# 5 ---------------------------------------------------------------------------
def test_mollifier_certificate(record_property):
    _criterion(record_property, "5 mollifier certificate")
    timer = Timer(60)
    rows = (mollifier_diagnostics(SU2, [SU2.weight_of_level(l) for l in (1.0, 2.0, 4.0)], MS)
            + mollifier_diagnostics(TORUS1, [TORUS1.weight_of_level(k) for k in (4.0, 16.0, 64.0)], MS))
    drift = 0.0
    for r in rows:
        assert abs(r["norm"] - 1.0) <= 1e-12
        assert abs(r["grid_norm"] - 1.0) <= 1e-12
        assert abs(r["value_at_identity_raw"] - r["expected_value_at_identity"]) <= 1e-10 * r["expected_value_at_identity"]
        assert r["evenness_residual"] <= 1e-9 and r["centrality_residual"] <= 1e-9
        assert r["support_exact"]
        drift = max(drift, r["renormalization_drift"], r["grid_renormalization_drift"])
    _detail(record_property, f"max drift {drift:.1e} in {timer.elapsed:.1f} s")
    assert drift <= 2e-3
    timer.check()


# 6 ---------------------------------------------------------------------------
PSD_FAMILIES = [("const_identity", {}), ("multiplication", {}), ("degenerate_positive", {"m": 1.0}),
                ("vectorfield_square", {"weight": "one_plus_cos"}),
                ("quartic_minus_laplace", {"weight": "one_plus_cos"}), ("random_psd", {"seed": 0, "m": 1.0})]


def test_amplitude_operator_positivity(record_property):
    _criterion(record_property, "6 positivity of the amplitude operator")
    timer = Timer(300)
    worst = np.inf
    for spec, level in ((SU2, 3.0), (TORUS1, 16.0)):
        W = spec.weight_of_level(level)
        quad = haar_grid(spec, 2 * level + 2)
        for name, params in PSD_FAMILIES:
            sigma = builtin_symbol_family(name, params, quad, W)
            assert sigma.psd
            P = op_from_amplitude(build_amplitude(sigma, MS))
            cert = positivity_check(P, rel_tol=1e-8)
            worst = min(worst, cert.lambda_min / cert.op_norm)
            assert cert.passed, (spec.name, name, cert)
    _detail(record_property, f"min lambda/||P|| {worst:.1e} in {timer.elapsed:.1f} s")
    timer.check()


# 7 ---------------------------------------------------------------------------
def _decay_case(spec, level, diag_level, quad_level):
    W = spec.weight_of_level(level)
    quad = haar_grid(spec, quad_level)
    sigma = builtin_symbol_family("degenerate_positive", {"m": 2.0}, quad, W)
    amp = build_amplitude(sigma, MS)
    Wd = spec.weight_of_level(diag_level)
    diag = diagonal_defect(amp, quad.nodes, fit_range=(2.0, Wd), max_weight=Wd)
    plain, corrected = symbol_defect(None, amp, quad)
    return diag, plain, corrected


def test_error_decay(record_property):
    _criterion(record_property, "7 error decay")
    timer = Timer(300)
    slopes = []
    # sigma = (1 + cos x) <xi>^2 on T^1 and (1 + x_0) <xi>^2 on SU(2); interior indices only
    for spec, level, diag_level, quad_level in ((TORUS1, 64.0, 32.0, 130.0), (SU2, 12.5, 8.0, 4.0)):
        reports = _decay_case(spec, level, diag_level, quad_level)
        for rep in reports:
            assert rep.bound == pytest.approx(1.3)
            assert rep.passed, (spec.name, rep.name, rep.slope)
            slopes.append(rep.slope)
    par = [parity_integrals(SU2, [2.0, 5.0, 11.0], MS), parity_integrals(TORUS1, [4.0, 16.0, 64.0], MS)]
    worst_par = max(max(p["first_moment"], p["w_times_derivative"]) for p in par)
    _detail(record_property, f"max slope {max(slopes):.3f}, parity {worst_par:.1e} in {timer.elapsed:.1f} s")
    assert worst_par <= 1e-9
    timer.check()


# 8 ---------------------------------------------------------------------------
GARDING_CASES = [
    ("degenerate_positive", {"m": 1.0}, None),
    ("vectorfield_square", {}, None),
    ("vectorfield_square", {"weight": "one_plus_cos"},
     [0.02890808959292683, 0.029524353293077767, 0.029786582604961878, 0.029910745498316415]),
    ("quartic_minus_laplace", {}, None),
    ("quartic_minus_laplace", {"weight": "one_plus_cos"},
     [0.0003066321439917998, 0.0003066337041749878, 0.00030663396503474846, 0.0003066340257405614]),
]


def test_sharp_garding_stabilization(record_property, tmp_path):
    _criterion(record_property, "8 sharp Garding stabilization")
    timer = Timer(600)
    summary = []
    for name, params, frozen in GARDING_CASES:
        cfg = ExperimentConfig(group="su2", cutoffs=[3.0, 4.0, 5.0, 6.0], family=name, params=params,
                               stages=["garding"], out=str(tmp_path))
        rep = run_config(cfg)
        C = [c for _, c in rep.garding]
        flag = rep.flags["garding_stabilization"]
        assert flag["passed"], (name, params, C)
        if frozen is not None:
            np.testing.assert_allclose(C, frozen, rtol=1e-6)
        summary.append(max(C))
    _detail(record_property, f"max C_L {max(summary):.3e} in {timer.elapsed:.1f} s")
    timer.check()


# 9 ---------------------------------------------------------------------------
def test_corollaries(record_property, tmp_path):
    _criterion(record_property, "9 corollaries")
    timer = Timer(300)
    names = ["stable_A_order_norm", "stable_norm_estimate_C_s0", "stable_norm_estimate_C_s1"]
    cases = [("random_psd", {"seed": 0, "m": 0.0}, [3.0, 4.0, 5.0]),
             ("degenerate_positive", {"m": 1.0}, [3.0, 4.0, 5.0, 6.0])]
    for name, params, cutoffs in cases:
        cfg = ExperimentConfig(group="su2", cutoffs=cutoffs, family=name, params=params,
                               stages=["corollaries"], s_values=[0.0, 1.0], out=str(tmp_path))
        rep = run_config(cfg)
        if params["m"] == 0.0:
            # bounded symbol of order zero: A_order_norm is the plain operator norm
            assert max(r["symbol_bound_M"] for r in rep.data["cutoffs"]) <= 1.0
        for flag in names:
            assert rep.flags[flag]["passed"], (name, flag, rep.data["corollaries"])
    _detail(record_property, f"in {timer.elapsed:.1f} s")
    timer.check()


# 10 --------------------------------------------------------------------------
def test_determinism(record_property, tmp_path):
    _criterion(record_property, "10 determinism")
    cfg = ExperimentConfig(group="torus1", cutoffs=[8.0, 12.0, 16.0], family="random_psd",
                           params={"m": 1.0}, seed=5, out=str(tmp_path / "run"))
    t0 = time.perf_counter()
    first = [p.read_bytes() for p in emit_outputs(run_config(cfg), cfg.out)]
    single = time.perf_counter() - t0
    timer = Timer(2 * single * 1.25 + 5)
    second = [p.read_bytes() for p in emit_outputs(run_config(cfg), cfg.out)]
    assert first == second
    json.loads(first[0])
    _detail(record_property, f"{len(first)} files identical in {single + timer.elapsed:.1f} s")
    timer.check()
