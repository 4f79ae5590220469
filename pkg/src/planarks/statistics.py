"""Distribution functions, chemical potential and the particle density operator.

Two distribution functions are shipped:

* ``ZeroTemperature``: the ramp f(s) = c * max(-s, 0);
* ``FermiDirac``:      f(s) = (c / beta) * ln(1 + exp(-beta s)),

where c is the transversal density-of-states prefactor (1 in scaled units).
Occupations always carry the spin factor 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .eigensolver import Spectrum, count_below, lowest_eigenpairs, lowest_eigenvalues
from .errors import DomainError, TruncationError
from .grid import Grid
from .operators import DiscreteOperator, assemble_schrodinger

SPIN = 2.0


@dataclass(frozen=True)
class ZeroTemperature:
    scale: float = 1.0

    @property
    def beta(self) -> float:
        return math.inf

    def __call__(self, s):
        return self.scale * np.maximum(-np.asarray(s, dtype=float), 0.0)

    def slope(self, s):
        return -self.scale * (np.asarray(s, dtype=float) < 0)


@dataclass(frozen=True)
class FermiDirac:
    beta: float
    scale: float = 1.0

    def __post_init__(self):
        if not self.beta > 0 or math.isinf(self.beta):
            raise DomainError(f"beta must be positive and finite, got {self.beta}")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        # max(-s, 0) + log1p(exp(-beta |s|)) / beta never overflows
        return self.scale * (np.maximum(-s, 0.0) + np.log1p(np.exp(-self.beta * np.abs(s))) / self.beta)

    def slope(self, s):
        s = np.asarray(s, dtype=float)
        z = np.exp(-self.beta * np.abs(s))
        return -self.scale * np.where(s < 0, 1.0 / (1.0 + z), z / (1.0 + z))


Distribution = Union[ZeroTemperature, FermiDirac]


def distribution(beta: float = math.inf, scale: float = 1.0) -> Distribution:
    """Fermi-Dirac function at inverse temperature ``beta``; ``inf`` gives the ramp."""
    if math.isinf(beta):
        return ZeroTemperature(scale)
    return FermiDirac(beta, scale)


@dataclass(frozen=True, eq=False)
class OccupationSummary:
    mu: float
    occupations: np.ndarray
    count: int
    tail_bound: float

    @property
    def total(self) -> float:
        return math.fsum(self.occupations)


def _zero_temperature_mu(lam: np.ndarray, n_particles: float, scale: float) -> float:
    # 2c * sum_l (mu - lam_l)_+ = N is piecewise linear: walk the breakpoints
    target = n_particles / (SPIN * scale)
    partial = []
    mu = lam[0] + target
    for k in range(lam.size):
        partial.append(lam[k])
        mu = (target + math.fsum(partial)) / (k + 1)
        if k + 1 == lam.size or mu <= lam[k + 1]:
            break
    return mu


def _finite_temperature_mu(f: FermiDirac, lam: np.ndarray, n_particles: float) -> float:
    def excess(e):
        return SPIN * math.fsum(f(lam - e)) - n_particles

    step = 1.0 + n_particles / (SPIN * f.scale)
    lo, hi = lam[0] - step, lam[-1] + step
    while excess(lo) > 0:
        step *= 2
        lo = lam[0] - step
    step = 1.0 + n_particles / (SPIN * f.scale)
    while excess(hi) < 0:
        step *= 2
        hi = lam[-1] + step
    mu = brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    # one Newton polish step; the count function is smooth for finite beta
    slope = -SPIN * math.fsum(f.slope(lam - mu))
    if slope > 0:
        cand = mu - excess(mu) / slope
        if abs(excess(cand)) < abs(excess(mu)):
            mu = cand
    return mu


def chemical_potential(
    f: Distribution,
    eigenvalues,
    n_particles: float,
    tail_tol: float = 1e-12,
    dimension: int | None = None,
) -> OccupationSummary:
    """Solve 2 sum_l f(lambda_l - mu) = N over the given levels.

    ``dimension`` is the size of the full spectrum the levels were taken from;
    ``None`` means the list is complete. Unlisted levels lie above the last
    listed one, which bounds the missing occupation by
    2 (dimension - L) f(lambda_L - mu).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise DomainError("need a non-empty 1-D list of eigenvalues")
    if np.any(np.diff(lam) <= 0):
        raise DomainError("eigenvalues must be strictly ascending")
    if n_particles < 1:
        raise DomainError(f"particle number must be >= 1, got {n_particles}")
    if isinstance(f, ZeroTemperature):
        mu = _zero_temperature_mu(lam, n_particles, f.scale)
    else:
        mu = _finite_temperature_mu(f, lam, n_particles)
    occ = SPIN * f(lam - mu)
    tail = 0.0
    if dimension is not None and dimension > lam.size:
        tail = SPIN * (dimension - lam.size) * float(f(lam[-1] - mu))
        if tail > tail_tol:
            raise TruncationError(
                f"{lam.size} of {dimension} levels leave a tail bound {tail:.3e} > {tail_tol:.3e}"
            )
    return OccupationSummary(float(mu), occ, int(lam.size), tail)


def particle_density(spectrum: Spectrum, occ: OccupationSummary) -> np.ndarray:
    if occ.occupations.size != spectrum.count:
        raise DomainError(
            f"{occ.occupations.size} occupations for {spectrum.count} eigenfunctions"
        )
    return occ.occupations @ np.square(spectrum.eigenfunctions)


def _truncation(f: Distribution, op: DiscreteOperator, n_particles: float, tail_tol: float):
    dim = op.dim
    k = min(dim, 8)
    while True:
        lam = lowest_eigenvalues(op, k)
        if isinstance(f, ZeroTemperature):
            mu = _zero_temperature_mu(lam, n_particles, f.scale)
            if k == dim or lam[-1] >= mu:
                return max(1, count_below(op, mu)), lam
        else:
            for level in range(1, k + 1):
                head = lam[:level]
                mu = _finite_temperature_mu(f, head, n_particles)
                # half the budget: leaves room for the re-solve in chemical_potential
                if SPIN * (dim - level) * float(f(head[-1] - mu)) <= 0.5 * tail_tol:
                    return level, lam
            if k == dim:
                return dim, lam
        k = min(2 * k, dim)


def choose_truncation(
    f: Distribution, op: DiscreteOperator, n_particles: float, tail_tol: float = 1e-12
) -> int:
    """Number of levels to retain so the neglected occupation is below ``tail_tol``."""
    return _truncation(f, op, n_particles, tail_tol)[0]


def density_operator(
    potential: np.ndarray,
    f: Distribution,
    n_particles: float,
    grid: Grid,
    mass: np.ndarray,
    tail_tol: float = 1e-12,
):
    """Particle density for the potential ``potential``.

    Returns ``(u, occupation_summary, spectrum)``.
    """
    op = assemble_schrodinger(grid, mass, potential)
    level, _ = _truncation(f, op, n_particles, tail_tol)
    if isinstance(f, ZeroTemperature):
        # one empty level above mu certifies that nothing is missing
        level = min(level + 1, op.dim)
    spectrum = lowest_eigenpairs(op, level)
    occ = chemical_potential(f, spectrum.eigenvalues, n_particles, tail_tol, dimension=op.dim)
    return particle_density(spectrum, occ), occ, spectrum


def theta(x):
    """Weight max(1, x) used for the distance between distribution functions."""
    return np.maximum(1.0, np.asarray(x, dtype=float))


def _tail_scale(*fs: Distribution) -> float:
    betas = [f.beta for f in fs if not math.isinf(f.beta)]
    return 1.0 / min(betas) if betas else 1.0


def weighted_sup_distance(
    f1: Distribution, f2: Distribution, a: float = -1.0, x_max: float | None = None
) -> float:
    """sup over x >= a of |f1(x) - f2(x)| * theta(x).

    Sampled on a grid refined around 0 (the scale of 1/beta), refined locally
    with a bounded scalar search, plus an analytic bound for x > x_max.
    """
    if a > -1:
        raise DomainError(f"left end must satisfy a <= -1, got {a}")
    s = _tail_scale(f1, f2)
    if x_max is None:
        x_max = max(2.0, 40.0 * s)

    def g(x):
        return np.abs(f1(x) - f2(x)) * theta(x)

    near = s * np.geomspace(1e-4, 1e3, 400)
    xs = np.concatenate([np.linspace(a, x_max, 4001), near, -near, [0.0, 1.0]])
    xs = np.unique(xs[(xs >= a) & (xs <= x_max)])
    vals = g(xs)
    best = int(np.argmax(vals))
    sup = float(vals[best])
    lo, hi = xs[max(best - 1, 0)], xs[min(best + 1, xs.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -float(g(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14 * max(1.0, abs(lo), abs(hi))})
        sup = max(sup, -float(res.fun))
    # beyond x_max: |f1 - f2| x <= sum of c x exp(-beta x) / beta, decreasing for x > 1/beta
    tail = 0.0
    for f in (f1, f2):
        if not math.isinf(f.beta):
            x0 = max(x_max, 1.0 / f.beta)
            tail += f.scale * x0 * math.exp(-f.beta * x0) / f.beta
    return max(sup, tail)
