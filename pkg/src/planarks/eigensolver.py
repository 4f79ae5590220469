"""Lowest eigenpairs of the discrete Schrödinger pencil and Sturm counts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidRequest
from .operators import DiscreteOperator

# absolute tolerance handed to LAPACK bisection; tiny means "as accurate as possible"
_BISECT_TOL = np.finfo(float).tiny
_DEGENERATE_GAP = 1e-12


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # shape (L, n_nodes), zero at both ends

    @property
    def count(self) -> int:
        return self.eigenvalues.size


def _orthonormalize_clusters(lam: np.ndarray, y: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(lam))))
    start = 0
    for k in range(1, lam.size + 1):
        if k == lam.size or lam[k] - lam[k - 1] > _DEGENERATE_GAP * scale:
            if k - start > 1:
                q, _ = np.linalg.qr(y[:, start:k])
                y[:, start:k] = q
            start = k
    return y


def lowest_eigenpairs(op: DiscreteOperator, count: int) -> Spectrum:
    """The ``count`` lowest eigenpairs, eigenfunctions normalized in the lumped L2 product."""
    if count < 1 or count > op.dim:
        raise InvalidRequest(f"requested {count} eigenpairs of a {op.dim}-dimensional operator")
    t = op.standard_form()
    lam, y = eigh_tridiagonal(
        t.diag, t.off, select="i", select_range=(0, count - 1), tol=_BISECT_TOL
    )
    y = _orthonormalize_clusters(lam, y)
    psi = y / np.sqrt(op.weights)[:, None]
    # deterministic sign: first significant entry positive
    for k in range(count):
        col = psi[:, k]
        j = int(np.argmax(np.abs(col) > 1e-8 * np.abs(col).max()))
        if col[j] < 0:
            psi[:, k] = -col
    funcs = np.zeros((count, op.dim + 2))
    funcs[:, 1:-1] = psi.T
    return Spectrum(lam, funcs)


def lowest_eigenvalues(op: DiscreteOperator, count: int) -> np.ndarray:
    if count < 1 or count > op.dim:
        raise InvalidRequest(f"requested {count} eigenvalues of a {op.dim}-dimensional operator")
    t = op.standard_form()
    return eigh_tridiagonal(
        t.diag, t.off, eigvals_only=True, select="i", select_range=(0, count - 1), tol=_BISECT_TOL
    )


def count_below(op: DiscreteOperator, energy: float) -> int:
    """Number of eigenvalues strictly below ``energy`` (Sylvester inertia of K - E W)."""
    d = op.stiffness.diag - energy * op.weights
    e2 = op.stiffness.off ** 2
    tiny = np.finfo(float).eps * (np.abs(op.stiffness.diag).max() + abs(energy) * op.weights.max())
    count = 0
    pivot = d[0]
    for i in range(d.size):
        if i:
            pivot = d[i] - e2[i - 1] / pivot
        if pivot == 0.0:
            pivot = tiny
        if pivot < 0:
            count += 1
    return count


def residuals(op: DiscreteOperator, spectrum: Spectrum) -> np.ndarray:
    """Euclidean norms of K psi - lambda W psi, one per pair."""
    out = np.empty(spectrum.count)
    for k, (lam, psi) in enumerate(zip(spectrum.eigenvalues, spectrum.eigenfunctions)):
        v = psi[1:-1]
        out[k] = np.linalg.norm(op.stiffness.matvec(v) - lam * op.weights * v)
    return out
