"""Dense symmetric/Hermitian matrix kernel: eigendecomposition, PSD projection,
rank-1 extraction, and phase-invariant distances."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

SYM_TOL = 1e-8  # max allowed entrywise asymmetry, relative to max(1, |M|_max)


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # column k pairs with eigenvalue k


class MatrixNorms(NamedTuple):
    spectral: float
    frobenius: float
    trace: float


def symmetrize(M: np.ndarray) -> np.ndarray:
    """Return (M + M*)/2 with an exactly real diagonal."""
    S = 0.5 * (M + M.conj().T)
    if np.iscomplexobj(S):
        np.fill_diagonal(S, S.diagonal().real)
    return S


def check_symmetric(M: np.ndarray, tol: float = SYM_TOL) -> np.ndarray:
    """Validate that M is square and symmetric/Hermitian; return it symmetrized.

    Raises ValueError if M is not square or its asymmetry exceeds
    tol * max(1, largest entry magnitude).
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    dev = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if dev > tol * scale:
        raise ValueError(f"matrix is not symmetric/Hermitian (deviation {dev:.3e})")
    return symmetrize(M)


def eig_sym(M: np.ndarray) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric/Hermitian matrix.

    Eigenvalues come back ascending with matching orthonormal eigenvector
    columns; the input is validated and symmetrized first.
    """
    M = check_symmetric(M)
    evals, evecs = np.linalg.eigh(M)
    return EigenDecomposition(evals, evecs)


def project_psd(M: np.ndarray) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix: clip negative eigenvalues."""
    evals, evecs = eig_sym(M)
    pos = np.clip(evals, 0.0, None)
    return symmetrize((evecs * pos) @ evecs.conj().T)


def rank1_extract(X: np.ndarray) -> np.ndarray:
    """Best rank-1 factor sqrt(lambda_max) * v_max of a symmetric/Hermitian X.

    Returns the zero vector when the top eigenvalue is nonpositive. The global
    phase is fixed by making the first entry of magnitude > 1e-8 real
    nonnegative.
    """
    evals, evecs = eig_sym(X)
    lam = evals[-1]
    if lam <= 0.0:
        return np.zeros(X.shape[0], dtype=X.dtype)
    v = evecs[:, -1]
    big = np.nonzero(np.abs(v) > 1e-8)[0]
    if big.size:
        pivot = v[big[0]]
        v = v * (pivot.conjugate() / abs(pivot))
    return np.sqrt(lam) * v


def phase_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Distance min_{|c|=1} ||x - c*y||_2, invariant to global phase.

    Equals sqrt(||x||^2 + ||y||^2 - 2|<x, y>|), but is evaluated as the norm
    of the aligned difference x - c*y with c = <y, x>/|<y, x>|: subtracting
    nearly identical vectors entrywise keeps full precision where the closed
    form would lose half its digits to cancellation. For real vectors the
    optimal c is the sign of <y, x>.
    """
    x = np.asarray(x).ravel()
    y = np.asarray(y).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    ip = np.vdot(y, x)
    c = ip / abs(ip) if abs(ip) > 0 else 1.0
    return float(np.linalg.norm(x - c * y))


def norms(M: np.ndarray) -> MatrixNorms:
    """Spectral norm (max |eigenvalue|), Frobenius norm, and trace of M."""
    M = check_symmetric(M)
    evals = np.linalg.eigvalsh(M)
    spectral = float(np.max(np.abs(evals))) if evals.size else 0.0
    frob = float(np.linalg.norm(M))
    trace = float(np.trace(M).real)
    return MatrixNorms(spectral, frob, trace)
