"""Mesh on (0, 1), layer stacks, quadrature and norms.

Fields are plain numpy arrays: a nodal field has one value per grid node,
an element field one value per element (piecewise constant coefficients).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solveh_banded

from .errors import DomainError, InvalidResolution

FRACTION_TOL = 1e-12


@dataclass(frozen=True)
class Layer:
    thickness: float
    mass: float = 1.0
    eps: float = 1.0
    band_offset: float = 0.0
    doping: float = 0.0


@dataclass(frozen=True)
class LayerStack:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise DomainError("layer stack is empty")
        total = 0.0
        for k, layer in enumerate(layers):
            if not layer.thickness > 0:
                raise DomainError(f"layer {k}: thickness must be positive, got {layer.thickness}")
            if not layer.mass > 0:
                raise DomainError(f"layer {k}: mass must be positive, got {layer.mass}")
            if not layer.eps > 0:
                raise DomainError(f"layer {k}: eps must be positive, got {layer.eps}")
            total += layer.thickness
        if abs(total - 1.0) > FRACTION_TOL:
            raise DomainError(f"thickness fractions sum to {total!r}, expected 1")

    @classmethod
    def single(cls, **kw) -> "LayerStack":
        return cls((Layer(thickness=1.0, **kw),))

    def __len__(self) -> int:
        return len(self.layers)

    def interfaces(self) -> np.ndarray:
        """Positions of the internal layer interfaces."""
        x = np.cumsum([layer.thickness for layer in self.layers])[:-1]
        return x


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidResolution("a grid needs at least 2 elements")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise DomainError("grid must span [0, 1] exactly")
        h = np.diff(nodes)
        if np.any(h <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h", h)

    @classmethod
    def uniform(cls, n: int) -> "Grid":
        x = np.linspace(0.0, 1.0, n + 1)
        return cls(x)

    @property
    def n_elements(self) -> int:
        return self.h.size

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def weights(self) -> np.ndarray:
        """Trapezoid weights for every node (boundary nodes included)."""
        w = np.zeros(self.n_nodes)
        w[:-1] += 0.5 * self.h
        w[1:] += 0.5 * self.h
        return w


def _split_elements(n: int, fractions: Sequence[float]) -> list[int]:
    # largest-remainder apportionment, at least one element per layer
    k = len(fractions)
    raw = [n * t for t in fractions]
    counts = [max(1, int(np.floor(r))) for r in raw]
    while sum(counts) > n:
        # take from the layer that is most over its share and can spare one
        j = max((i for i in range(k) if counts[i] > 1), key=lambda i: counts[i] - raw[i])
        counts[j] -= 1
    while sum(counts) < n:
        j = max(range(k), key=lambda i: raw[i] - counts[i])
        counts[j] += 1
    return counts


def build_grid(n: int, stack: LayerStack) -> Grid:
    """Grid with ``n`` elements whose nodes contain every layer interface."""
    if n < 2:
        raise InvalidResolution(f"need n >= 2 elements, got {n}")
    if n < len(stack):
        raise InvalidResolution(f"{n} elements cannot resolve {len(stack)} layers")
    counts = _split_elements(n, [layer.thickness for layer in stack.layers])
    edges = np.concatenate([[0.0], stack.interfaces(), [1.0]])
    pieces = [np.linspace(edges[k], edges[k + 1], c + 1)[:-1] for k, c in enumerate(counts)]
    nodes = np.concatenate(pieces + [[1.0]])
    return Grid(nodes)


class Coefficients(NamedTuple):
    mass: np.ndarray
    eps: np.ndarray
    band_offset: np.ndarray
    doping: np.ndarray


def sample_layers(stack: LayerStack, grid: Grid) -> Coefficients:
    """Element fields of mass, permittivity, band offset and doping."""
    edges = np.concatenate([[0.0], stack.interfaces(), [1.0]])
    left = np.searchsorted(edges, grid.nodes[:-1], side="right") - 1
    right = np.searchsorted(edges, grid.nodes[1:], side="left") - 1
    if np.any(left != right):
        bad = int(np.flatnonzero(left != right)[0])
        raise RuntimeError(f"element {bad} straddles a layer interface")
    idx = np.clip(left, 0, len(stack) - 1)

    def pick(attr):
        values = np.array([getattr(layer, attr) for layer in stack.layers], dtype=float)
        return values[idx]

    return Coefficients(pick("mass"), pick("eps"), pick("band_offset"), pick("doping"))


def element_to_nodal(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Nodal field with the same lumped (hat-function) moments as an element field.

    Interior node i gets the h-weighted mean of its two neighbouring elements.
    """
    values = np.asarray(values, dtype=float)
    out = np.empty(grid.n_nodes)
    out[0] = values[0]
    out[-1] = values[-1]
    h = grid.h
    out[1:-1] = (h[:-1] * values[:-1] + h[1:] * values[1:]) / (h[:-1] + h[1:])
    return out


def integrate(grid: Grid, f: np.ndarray) -> float:
    """Composite trapezoid rule for a nodal field."""
    f = np.asarray(f, dtype=float)
    return float(np.sum(0.5 * grid.h * (f[:-1] + f[1:])))


def integrate_elements(grid: Grid, f: np.ndarray) -> float:
    """Midpoint rule for an element field."""
    return float(np.dot(grid.h, f))


def norm_l1(grid: Grid, f: np.ndarray) -> float:
    return integrate(grid, np.abs(f))


def norm_l2(grid: Grid, f: np.ndarray) -> float:
    return float(np.sqrt(integrate(grid, np.square(f))))


def norm_w12(grid: Grid, f: np.ndarray) -> float:
    """Full W^{1,2} norm, derivative taken as the element difference quotient."""
    f = np.asarray(f, dtype=float)
    df = np.diff(f) / grid.h
    return float(np.sqrt(integrate(grid, f * f) + np.dot(grid.h, df * df)))


def load_vector(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Interior load vector (integrals against hat functions) of a field.

    Element fields are integrated exactly, nodal fields with lumping.
    """
    f = np.asarray(f, dtype=float)
    h = grid.h
    if f.size == grid.n_elements:
        return 0.5 * (h[:-1] * f[:-1] + h[1:] * f[1:])
    if f.size == grid.n_nodes:
        return 0.5 * (h[:-1] + h[1:]) * f[1:-1]
    raise DomainError(f"field of length {f.size} fits neither nodes nor elements of the grid")


def dual_norm_wm12(grid: Grid, f: np.ndarray) -> float:
    """W^{-1,2} norm of a nodal or element density.

    Uses the Riesz representative w of -w'' + w = f with w(0) = w(1) = 0,
    discretised with the same P1/lumped scheme as everything else.
    """
    b = load_vector(grid, f)
    scale = float(np.max(np.abs(b))) if b.size else 0.0
    if scale == 0.0:
        return 0.0
    b = b / scale  # keeps b.w clear of underflow for tiny inputs
    h = grid.h
    w = 0.5 * (h[:-1] + h[1:])
    diag = 1.0 / h[:-1] + 1.0 / h[1:] + w
    off = -1.0 / h[1:-1]
    ab = np.zeros((2, diag.size))
    ab[0, 1:] = off
    ab[1] = diag
    rep = solveh_banded(ab, b)
    return scale * float(np.sqrt(max(np.dot(b, rep), 0.0)))
