"""P1 finite-element assembly of the Schrödinger and Poisson operators.

Both operators carry homogeneous Dirichlet conditions: boundary dofs are
eliminated, so every matrix lives on the interior nodes 1..n-1. Mass is
lumped (trapezoid weights), which keeps the generalized eigenproblem
reducible to a standard symmetric tridiagonal one.

Scaled units: hbar^2/2 = 1, so the kinetic term is -(d/dx)(1/m)(d/dx).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .errors import DomainError
from .grid import Grid, load_vector


@dataclass(frozen=True, eq=False)
class SymTridiag:
    diag: np.ndarray
    off: np.ndarray

    @property
    def dim(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def todense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Pencil (stiffness, diag(weights)) on the interior nodes."""

    stiffness: SymTridiag
    weights: np.ndarray

    @property
    def dim(self) -> int:
        return self.weights.size

    def standard_form(self) -> SymTridiag:
        """W^{-1/2} K W^{-1/2}: same spectrum, ordinary symmetric problem."""
        w = self.weights
        s = 1.0 / np.sqrt(w)
        return SymTridiag(self.stiffness.diag / w, self.stiffness.off * s[:-1] * s[1:])

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Operator action W^{-1} K on interior values (self-adjoint in the lumped product)."""
        return self.stiffness.matvec(psi) / self.weights


def _stiffness(grid: Grid, coeff: np.ndarray) -> SymTridiag:
    a = np.asarray(coeff, dtype=float) / grid.h
    return SymTridiag(a[:-1] + a[1:], -a[1:-1].copy())


def interior_weights(grid: Grid) -> np.ndarray:
    return 0.5 * (grid.h[:-1] + grid.h[1:])


def assemble_schrodinger(grid: Grid, mass: np.ndarray, potential: np.ndarray) -> DiscreteOperator:
    """Ben-Daniel-Duke operator -(1/m psi')' + V psi with lumped potential term."""
    mass = np.asarray(mass, dtype=float)
    potential = np.asarray(potential, dtype=float)
    if mass.shape != (grid.n_elements,):
        raise DomainError("mass must be an element field")
    if potential.shape != (grid.n_nodes,):
        raise DomainError("potential must be a nodal field")
    if np.any(mass <= 0):
        raise DomainError("effective mass must be positive")
    if not np.all(np.isfinite(potential)):
        raise DomainError("potential must be finite")
    kin = _stiffness(grid, 1.0 / mass)
    w = interior_weights(grid)
    return DiscreteOperator(SymTridiag(kin.diag + w * potential[1:-1], kin.off), w)


def assemble_poisson(grid: Grid, eps: np.ndarray) -> DiscreteOperator:
    """Stiffness of -(eps phi')' under homogeneous Dirichlet conditions."""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (grid.n_elements,):
        raise DomainError("eps must be an element field")
    if np.any(eps <= 0):
        raise DomainError("permittivity must be positive")
    return DiscreteOperator(_stiffness(grid, eps), interior_weights(grid))


def lift_boundary(grid: Grid, eps: np.ndarray, phi0: float, phi1: float) -> np.ndarray:
    """eps-harmonic nodal field with phi(0) = phi0, phi(1) = phi1."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise DomainError("permittivity must be positive")
    r = np.concatenate([[0.0], np.cumsum(grid.h / eps)])
    out = phi0 + (phi1 - phi0) * r / r[-1]
    out[-1] = phi1
    return out


def solve_tridiag_spd(mat: SymTridiag, rhs: np.ndarray) -> np.ndarray:
    ab = np.zeros((2, mat.dim))
    ab[0, 1:] = mat.off
    ab[1] = mat.diag
    return solveh_banded(ab, rhs)


def solve_poisson(
    grid: Grid,
    eps: np.ndarray,
    doping: np.ndarray,
    u: np.ndarray,
    q: float = 1.0,
    phi0: float = 0.0,
    phi1: float = 0.0,
) -> np.ndarray:
    """phi = phi_lift + P^{-1}(D - q u).

    ``doping`` may be an element or a nodal field; ``u`` is nodal.
    """
    op = assemble_poisson(grid, eps)
    rhs = load_vector(grid, doping) - q * load_vector(grid, u)
    phi = lift_boundary(grid, eps, phi0, phi1)
    phi[1:-1] += solve_tridiag_spd(op.stiffness, rhs)
    return phi
