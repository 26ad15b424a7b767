"""Operators compressed to a truncated Peter-Weyl space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecMismatchError
from .groups import GroupSpec, HaarQuadrature
from .harmonic import (SpectralField, analysis, basis_labels, basis_size, basis_weights,
                       check_exactness, rep_values, synthesis)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Dense matrix in the orthonormal basis ``sqrt(d) xi_ij`` up to a weight cutoff.

    Basis order is weight-then-lexicographic in the index, then ``i``, ``j``.
    """

    spec: GroupSpec
    max_weight: float
    matrix: np.ndarray

    def __post_init__(self):
        n = basis_size(self.spec, self.max_weight)
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (n, n):
            raise SpecMismatchError(f"matrix shape {m.shape} does not match basis size {n}")
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def basis(self) -> list:
        return basis_labels(self.spec, self.max_weight)

    @property
    def weights(self) -> np.ndarray:
        return basis_weights(self.spec, self.max_weight)

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.conj().T)

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2)) if self.size else 0.0

    def compress(self, max_weight: float) -> "TruncatedOperator":
        """Restrict to the span of basis elements with weight ``<= max_weight``."""
        n = basis_size(self.spec, max_weight)
        if n > self.size:
            raise SpecMismatchError("cannot compress to a larger cutoff")
        return TruncatedOperator(self.spec, max_weight, self.matrix[:n, :n])

    def apply(self, F: SpectralField) -> SpectralField:
        vec = F.to_vector()
        return SpectralField.from_vector(self.spec, self.max_weight, self.matrix @ vec)

    def __add__(self, other):
        return TruncatedOperator(self.spec, self.max_weight, self.matrix + other.matrix)

    def __sub__(self, other):
        return TruncatedOperator(self.spec, self.max_weight, self.matrix - other.matrix)


def identity_operator(spec: GroupSpec, max_weight: float) -> TruncatedOperator:
    return TruncatedOperator(spec, max_weight, np.eye(basis_size(spec, max_weight)))


def bessel_operator(spec: GroupSpec, max_weight: float, s: float) -> TruncatedOperator:
    """Diagonal matrix of ``(1 - Laplacian)^s``."""
    return TruncatedOperator(spec, max_weight, np.diag(basis_weights(spec, max_weight) ** (2 * s)).astype(complex))


def coefficients_from_values(quad: HaarQuadrature, values: np.ndarray, max_weight: float) -> np.ndarray:
    """Peter-Weyl coefficient vectors of the columns of ``values``."""
    idx = quad.spec.dual(max_weight)
    mats = analysis(quad, values, idx)
    return np.concatenate([np.sqrt(i.dim) * np.swapaxes(m, 0, 1).reshape((i.dim ** 2,) + m.shape[2:])
                           for i, m in zip(idx, mats)])


def basis_values(quad: HaarQuadrature, max_weight: float, index_block=None):
    """Yield ``(index, values)`` with values of shape ``(N, d*d)``: columns ``sqrt(d) xi_ij``."""
    for idx in quad.spec.dual(max_weight):
        R = rep_values(quad, idx)
        yield idx, np.sqrt(idx.dim) * R.reshape(quad.size, idx.dim ** 2)


def assemble_matrix(A, max_weight: float, quad: HaarQuadrature, check: bool = True) -> TruncatedOperator:
    """Galerkin matrix of a linear map on grid values.

    ``A`` maps an array of shape ``(N, k)`` (k columns of node values) to an
    array of the same shape. Column ``beta`` of the result holds the
    coefficients of ``A e_beta``.
    """
    if check:
        check_exactness(quad, max_weight)
    cols = []
    for idx, vals in basis_values(quad, max_weight):
        out = np.asarray(A(vals), dtype=complex).reshape(quad.size, -1)
        cols.append(coefficients_from_values(quad, out, max_weight))
    return TruncatedOperator(quad.spec, max_weight, np.concatenate(cols, axis=1))


def operator_values(T: TruncatedOperator, quad: HaarQuadrature, values: np.ndarray) -> np.ndarray:
    """Apply a truncated operator to grid values (projecting first)."""
    vec = coefficients_from_values(quad, values, T.max_weight)
    out = T.matrix @ vec
    F = SpectralField.from_vector(T.spec, T.max_weight, out)
    return synthesis(quad, F.mats, F.indices)
