"""Kohn-Sham fixed-point map, damped self-consistent iteration and
temperature continuation.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .eigensolver import Spectrum
from .errors import DomainError, NumericalFailure
from .grid import Grid, LayerStack, build_grid, element_to_nodal, integrate, norm_l1, sample_layers
from .operators import lift_boundary, solve_poisson
from .statistics import Distribution, OccupationSummary, density_operator, distribution
from .xc import XAlpha, evaluate_vxc

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Device:
    grid: Grid
    mass: np.ndarray
    eps: np.ndarray
    band_offset: np.ndarray
    doping: np.ndarray
    phi0: float = 0.0
    phi1: float = 0.0

    @classmethod
    def from_stack(cls, stack: LayerStack, n: int, phi0: float = 0.0, phi1: float = 0.0) -> "Device":
        grid = build_grid(n, stack)
        c = sample_layers(stack, grid)
        return cls(grid, c.mass, c.eps, c.band_offset, c.doping, phi0, phi1)

    @property
    def band_offset_nodal(self) -> np.ndarray:
        return element_to_nodal(self.grid, self.band_offset)

    def lift(self) -> np.ndarray:
        return lift_boundary(self.grid, self.eps, self.phi0, self.phi1)


@dataclass(frozen=True)
class ScfConfig:
    n_particles: float = 1.0
    q: float = 1.0
    damping: float = 0.3
    tol_l1: float = 1e-9
    max_iter: int = 500
    tail_tol: float = 1e-12
    adaptive_damping: bool = False

    def __post_init__(self):
        if self.n_particles < 1:
            raise DomainError(f"N must be >= 1, got {self.n_particles}")
        if not 0 < self.damping <= 1:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tol_l1 > 0:
            raise DomainError("tol_l1 must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")
        if not self.tail_tol > 0:
            raise DomainError("tail_tol must be positive")


class MapEvaluation(NamedTuple):
    u: np.ndarray  # image density
    phi: np.ndarray
    v_eff: np.ndarray
    occupation: OccupationSummary
    spectrum: Spectrum


@dataclass(eq=False)
class ScfResult:
    u: np.ndarray
    phi: np.ndarray
    v_eff: np.ndarray
    spectrum: Spectrum
    occupation: OccupationSummary
    residual_history: list[float]
    iterations: int
    converged: bool
    fixed_point_residual: float
    damping: float
    f: Distribution = field(repr=False, default=None)

    @property
    def mu(self) -> float:
        return self.occupation.mu


def electrostatic_potential(u: np.ndarray, device: Device, config: ScfConfig) -> np.ndarray:
    return solve_poisson(
        device.grid, device.eps, device.doping, u, config.q, device.phi0, device.phi1
    )


def effective_potential(
    u: np.ndarray, device: Device, xc: XAlpha | None, config: ScfConfig
) -> np.ndarray:
    """V = band offset + V_xc(u) - q phi(u)."""
    phi = electrostatic_potential(u, device, config)
    return device.band_offset_nodal + evaluate_vxc(xc, u) - config.q * phi


def evaluate_map(
    u: np.ndarray, device: Device, f: Distribution, xc: XAlpha | None, config: ScfConfig
) -> MapEvaluation:
    phi = electrostatic_potential(u, device, config)
    v = device.band_offset_nodal + evaluate_vxc(xc, u) - config.q * phi
    out, occ, spec = density_operator(
        v, f, config.n_particles, device.grid, device.mass, config.tail_tol
    )
    return MapEvaluation(out, phi, v, occ, spec)


def kohn_sham_map(
    u: np.ndarray, device: Device, f: Distribution, xc: XAlpha | None, config: ScfConfig
) -> np.ndarray:
    """Density of the Schrödinger operator whose potential is generated by ``u``."""
    return evaluate_map(u, device, f, xc, config).u


def uniform_density(device: Device, n_particles: float) -> np.ndarray:
    return np.full(device.grid.n_nodes, float(n_particles))


def random_density(device: Device, n_particles: float, rng: np.random.Generator) -> np.ndarray:
    """A random member of L^1_N: positive, integral N."""
    u = rng.uniform(0.05, 1.0, device.grid.n_nodes)
    # a few random bumps so starts differ in shape, not only in noise
    x = device.grid.nodes
    for _ in range(3):
        c, w = rng.uniform(0, 1), rng.uniform(0.05, 0.3)
        u += rng.uniform(0, 5) * np.exp(-((x - c) / w) ** 2)
    return u * (n_particles / integrate(device.grid, u))


def solve_scf(
    device: Device,
    f: Distribution,
    xc: XAlpha | None = None,
    config: ScfConfig = ScfConfig(),
    u0: np.ndarray | None = None,
) -> ScfResult:
    """Damped iteration u <- (1 - tau) u + tau Phi(u).

    Converged when the step ||u_{k+1} - u_k||_1 drops to tau * tol_l1, i.e.
    ||Phi(u_k) - u_k||_1 <= tol_l1. Hitting ``max_iter`` returns an
    unconverged result instead of raising.
    """
    grid = device.grid
    u = uniform_density(device, config.n_particles) if u0 is None else np.array(u0, dtype=float)
    if u.shape != (grid.n_nodes,):
        raise DomainError("initial density must be a nodal field")
    if not np.all(np.isfinite(u)):
        raise DomainError("initial density must be finite")
    tau = config.damping
    history: list[float] = []
    last_residual = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iter + 1):
        image = kohn_sham_map(u, device, f, xc, config)
        new = (1.0 - tau) * u + tau * image
        if not np.all(np.isfinite(new)):
            raise NumericalFailure(f"non-finite density at iteration {iterations}")
        step = norm_l1(grid, new - u)
        history.append(step)
        u = new
        residual = step / tau
        if residual <= config.tol_l1:
            converged = True
            break
        if config.adaptive_damping and residual > last_residual:
            tau *= 0.5
            log.debug("residual rose to %.3e, damping halved to %g", residual, tau)
        last_residual = residual
    final = evaluate_map(u, device, f, xc, config)
    return ScfResult(
        u=u,
        phi=final.phi,
        v_eff=final.v_eff,
        spectrum=final.spectrum,
        occupation=final.occupation,
        residual_history=history,
        iterations=iterations,
        converged=converged,
        fixed_point_residual=norm_l1(grid, final.u - u),
        damping=tau,
        f=f,
    )


@dataclass(eq=False)
class Continuation:
    betas: list[float]
    results: list[ScfResult]
    reference: ScfResult
    distance_u: list[float]  # L1 distance to the zero-temperature density
    distance_phi: list[float]  # sup distance to the zero-temperature potential

    def tail_nonincreasing(self, floor: float) -> bool:
        """Distances never grow, ignoring values at or below ``floor`` (solver noise)."""
        d = self.distance_u
        return all(b <= a or b <= floor for a, b in zip(d, d[1:]))


def temperature_continuation(
    device: Device,
    betas: Sequence[float],
    xc: XAlpha | None = None,
    config: ScfConfig = ScfConfig(),
    scale: float = 1.0,
    u0: np.ndarray | None = None,
) -> Continuation:
    """Solve along an ascending beta schedule, warm-starting each stage.

    A final ``inf`` entry is the zero-temperature problem; without one the
    zero-temperature reference is solved from the last stage.
    """
    betas = [float(b) for b in betas]
    if not betas or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise DomainError("beta schedule must be non-empty and strictly increasing")
    results = []
    u = u0
    for beta in betas:
        res = solve_scf(device, distribution(beta, scale), xc, config, u)
        if not res.converged:
            log.warning("stage beta=%g did not converge", beta)
        results.append(res)
        u = res.u
    if math.isinf(betas[-1]):
        reference = results[-1]
    else:
        reference = solve_scf(device, distribution(math.inf, scale), xc, config, u)
    du = [norm_l1(device.grid, r.u - reference.u) for r in results]
    dphi = [float(np.max(np.abs(r.phi - reference.phi))) for r in results]
    cont = Continuation(betas, results, reference, du, dphi)
    if xc is None and not cont.tail_nonincreasing(10 * config.tol_l1):
        warnings.warn("density distance to zero temperature is not monotone along the schedule")
    return cont
