#===============================================================================
#
#  SIC receiver performance tools
#
#  Copyright (c) 2026  sicperf developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#
#===============================================================================

"""
Small dense complex matrix kernel: QR with a non-negative real diagonal,
Hermitian positive definite solves and column norms.

Matrices are plain ``numpy`` arrays of ``complex128``. The batched helpers
accept stacks of matrices with any number of leading axes.
"""

#===============================================================================

from __future__ import annotations
from dataclasses import dataclass

#===============================================================================

import numpy as np
import numpy.typing as npt
import scipy.linalg

#===============================================================================

ComplexMatrix = npt.NDArray[np.complex128]

HERMITIAN_TOLERANCE = 1e-10
PIVOT_TOLERANCE = 1e-14

#===============================================================================

class MatrixShapeError(ValueError):
    pass

class NotHermitianError(ValueError):
    pass

class SingularMatrixError(ArithmeticError):
    pass

#===============================================================================

def as_complex_matrix(values) -> ComplexMatrix:
#==============================================
    matrix = np.array(values, dtype=np.complex128)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise MatrixShapeError(f'Expected a non-empty 2-D matrix, got shape {matrix.shape}')
    if not np.all(np.isfinite(matrix)):
        raise ValueError('Matrix entries must be finite')
    return matrix

#===============================================================================

@dataclass(frozen=True)
class QrFactors:
    q: ComplexMatrix
    r: ComplexMatrix

    @property
    def diag_sq(self) -> npt.NDArray[np.float64]:
        return np.abs(np.diagonal(self.r, axis1=-2, axis2=-1))**2

#===============================================================================

def qr_decompose_batch(a: npt.NDArray) -> QrFactors:
    """
    Complete QR of a stack of ``(..., rows, cols)`` matrices with ``rows >= cols``.

    LAPACK's Householder QR leaves complex phases on the diagonal of ``r``;
    they are moved into ``q`` so that every ``r_ii`` is real and non-negative.
    """
    a = np.asarray(a, dtype=np.complex128)
    rows, cols = a.shape[-2:]
    if rows < cols:
        raise MatrixShapeError(f'QR needs rows >= cols, got {rows}x{cols}')
    q, r = np.linalg.qr(a, mode='complete')
    diagonal = np.diagonal(r, axis1=-2, axis2=-1)
    magnitude = np.abs(diagonal)
    phase = np.where(magnitude > 0.0, diagonal/np.where(magnitude > 0.0, magnitude, 1.0), 1.0)
    q[..., :, :cols] *= phase[..., np.newaxis, :]
    r[..., :cols, :] *= np.conj(phase)[..., :, np.newaxis]
    index = np.arange(cols)
    r[..., index, index] = magnitude
    return QrFactors(q, r)

def qr_decompose(a: ComplexMatrix) -> QrFactors:
#===============================================
    return qr_decompose_batch(as_complex_matrix(a))

#===============================================================================

def solve_hpd(a: ComplexMatrix, b) -> npt.NDArray[np.complex128]:
    """
    Solve ``a x = b`` for Hermitian positive definite ``a`` via Cholesky.
    """
    a = as_complex_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise MatrixShapeError(f'Expected a square matrix, got {a.shape[0]}x{a.shape[1]}')
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != a.shape[0]:
        raise MatrixShapeError(f'Right-hand side has {b.shape[0]} rows, expected {a.shape[0]}')
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOLERANCE*scale:
        raise NotHermitianError('Matrix is not Hermitian')
    try:
        factor, lower = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularMatrixError('Matrix is not positive definite') from None
    pivots = np.abs(np.diagonal(factor))**2
    if pivots.min() < PIVOT_TOLERANCE*pivots.max():
        raise SingularMatrixError(f'Matrix is numerically singular (pivot ratio {pivots.min()/pivots.max():.3g})')
    return scipy.linalg.cho_solve((factor, lower), b, check_finite=False)

#===============================================================================

def col_norms_sq(a) -> npt.NDArray[np.float64]:
#==============================================
    return np.sum(np.abs(np.asarray(a))**2, axis=-2)

#===============================================================================
