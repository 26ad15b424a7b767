"""Matrix-symbol pseudo-differential calculus on the torus and SU(2).

The package provides harmonic analysis on compact groups, quantization and
extraction of matrix-valued symbols, the mollified positive approximation of
a nonnegative symbol and a verification engine for Gårding-type lower bounds
on truncated Peter-Weyl spaces.

Setting ``LIEQUANT_THREADS`` before import caps the BLAS thread pools.
"""

import os as _os

_threads = _os.environ.get("LIEQUANT_THREADS")
if _threads:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .amplitude import (FourierInX, MollifiedAmplitude, SymbolAmplitude, amplitude_symbol,  # noqa: E402
                        build_amplitude, op_from_amplitude)
from .config import ExperimentConfig, load_config, parse_json, parse_keyvalue  # noqa: E402
from .errors import (AccuracyError, ConfigError, DomainError, InsufficientDataError,  # noqa: E402
                     InvalidFamilyError, LiequantError, ResolutionError, ResourceError,
                     SpecMismatchError, StageError)
from .families import FAMILIES, builtin_symbol_family  # noqa: E402
from .garding import (diagonal_defect, garding_constant, norm_estimate_constant,  # noqa: E402
                      parity_integrals, positivity_check, stabilization, symbol_defect)
from .groups import SU2, TORUS1, GroupSpec, HaarQuadrature, RepIndex, haar_grid, torus  # noqa: E402
from .harmonic import GridFunction, SpectralField, forward_ft, inverse_ft  # noqa: E402
from .mollifier import Mollifier, MollifierSpec, build_mollifier  # noqa: E402
from .operators import TruncatedOperator, assemble_matrix  # noqa: E402
from .pipeline import Report, run_config  # noqa: E402
from .report import emit_outputs  # noqa: E402
from .symbols import Symbol, extract_symbol, quantize, quantize_matrix  # noqa: E402

__all__ = [
    "AccuracyError", "ConfigError", "DomainError", "ExperimentConfig", "FAMILIES", "FourierInX",
    "GridFunction", "GroupSpec", "HaarQuadrature", "InsufficientDataError", "InvalidFamilyError",
    "LiequantError", "Mollifier", "MollifiedAmplitude", "MollifierSpec", "RepIndex", "Report",
    "ResolutionError", "ResourceError", "SU2", "SpecMismatchError", "SpectralField", "StageError",
    "Symbol", "SymbolAmplitude", "TORUS1", "TruncatedOperator", "amplitude_symbol",
    "assemble_matrix", "build_amplitude", "build_mollifier", "builtin_symbol_family",
    "diagonal_defect", "emit_outputs", "extract_symbol", "forward_ft", "garding_constant",
    "haar_grid", "inverse_ft", "load_config", "norm_estimate_constant", "op_from_amplitude",
    "parity_integrals", "parse_json", "parse_keyvalue", "positivity_check", "quantize",
    "quantize_matrix", "run_config", "stabilization", "symbol_defect", "torus",
]
