"""Local exchange-correlation models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

NEGATIVE_CLIP = 1e-12


@dataclass(frozen=True)
class XAlpha:
    """V_xc(u) = -C u**alpha (alpha = 1/3 Slater, 2/3 Thomas-Fermi correction)."""

    C: float
    alpha: float = 1.0 / 3.0

    def __post_init__(self):
        if self.C < 0:
            raise DomainError(f"coupling C must be >= 0, got {self.C}")
        if not 0 < self.alpha <= 1:
            raise DomainError(f"exponent alpha must lie in (0, 1], got {self.alpha}")


def evaluate_vxc(model: XAlpha | None, u: np.ndarray) -> np.ndarray:
    """Nodal exchange-correlation potential; ``model=None`` switches it off."""
    u = np.asarray(u, dtype=float)
    if u.size and u.min() < -NEGATIVE_CLIP:
        raise DomainError(f"density has negative value {u.min():.3e}")
    if model is None:
        return np.zeros_like(u)
    return -model.C * np.power(np.maximum(u, 0.0), model.alpha)
