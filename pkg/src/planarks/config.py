"""Device configuration files.

INI-style sections::

    [units]            system = scaled | physical (optional, default scaled)
    [device.layer.K]   thickness, mass, eps, band_offset, doping (K = 1, 2, ...)
    [boundary]         phi0, phi1
    [particles]        n, q
    [statistics]       kind = zero | fermi, beta or kt, scale
    [xc]               kind = none | xalpha, c, alpha
    [grid]             n
    [scf]              damping, tol_l1, max_iter, tail_tol, adaptive_damping
    [output]           profile, summary

Keys are case-insensitive. Everything is converted to scaled units
(hbar^2/2 = 1, domain (0, 1), q = 1) before it reaches the solver.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from scipy import constants

from .errors import ConfigError, DomainError
from .grid import FRACTION_TOL, Layer, LayerStack
from .scf import Device, ScfConfig
from .statistics import Distribution, distribution
from .xc import XAlpha

VALID_KEYS = {
    "units": {"system", "length_nm", "m_perp"},
    "device.layer": {"thickness", "mass", "eps", "band_offset", "doping"},
    "boundary": {"phi0", "phi1"},
    "particles": {"n", "q"},
    "statistics": {"kind", "beta", "kt", "scale"},
    "xc": {"kind", "c", "alpha"},
    "grid": {"n"},
    "scf": {"damping", "tol_l1", "max_iter", "tail_tol", "adaptive_damping"},
    "output": {"profile", "summary"},
}


@dataclass(frozen=True)
class UnitSystem:
    """Scale factors from physical to scaled quantities (identity for scaled input)."""

    system: str = "scaled"
    length_nm: float = 1.0
    energy_ev: float = 1.0  # scaled energy unit hbar^2 / (2 m_e L^2), in eV
    sheet_density: float = 1.0  # scaled particle-number unit, in m^-2
    eps_unit: float = 1.0  # relative permittivity equivalent to scaled eps = 1
    m_perp: float = 1.0

    @classmethod
    def physical(cls, length_nm: float, m_perp: float = 1.0) -> "UnitSystem":
        L = length_nm * 1e-9
        e0 = constants.hbar ** 2 / (2 * constants.m_e * L ** 2)
        n0 = constants.m_e * e0 / (2 * math.pi * constants.hbar ** 2)
        eps_unit = constants.e ** 2 * n0 * L / (constants.epsilon_0 * e0)
        return cls("physical", length_nm, e0 / constants.e, n0, eps_unit, m_perp)

    def energy(self, value_ev: float) -> float:
        return value_ev / self.energy_ev

    def volume_density(self, value_m3: float) -> float:
        if self.system == "scaled":
            return value_m3
        return value_m3 * self.length_nm * 1e-9 / self.sheet_density


@dataclass(frozen=True)
class DeviceConfig:
    stack: LayerStack
    phi0: float = 0.0
    phi1: float = 0.0
    n_particles: float = 1.0
    q: float = 1.0
    beta: float = math.inf
    scale: float = 1.0
    xc: XAlpha | None = None
    n: int = 400
    damping: float = 0.3
    tol_l1: float = 1e-9
    max_iter: int = 500
    tail_tol: float = 1e-12
    adaptive_damping: bool = False
    profile: str = "profile.csv"
    summary: str = "summary.json"
    units: UnitSystem = field(default_factory=UnitSystem)

    def device(self) -> Device:
        return Device.from_stack(self.stack, self.n, self.phi0, self.phi1)

    def distribution(self) -> Distribution:
        return distribution(self.beta, self.scale)

    def scf_config(self) -> ScfConfig:
        return ScfConfig(
            n_particles=self.n_particles,
            q=self.q,
            damping=self.damping,
            tol_l1=self.tol_l1,
            max_iter=self.max_iter,
            tail_tol=self.tail_tol,
            adaptive_damping=self.adaptive_damping,
        )

    def with_value(self, path: str, value: float) -> "DeviceConfig":
        """Copy with one sweepable parameter replaced."""
        key = path.lower()
        if key in ("beta", "statistics.beta"):
            return replace(self, beta=float(value))
        if key in ("kt", "statistics.kt"):
            return replace(self, beta=math.inf if value == 0 else 1.0 / float(value))
        if key in ("n", "particles.n"):
            return replace(self, n_particles=float(value))
        if key in ("q", "particles.q"):
            return replace(self, q=float(value))
        if key in ("xc.c", "c"):
            alpha = self.xc.alpha if self.xc is not None else 1.0 / 3.0
            return replace(self, xc=XAlpha(float(value), alpha))
        if key in ("grid.n",):
            return replace(self, n=int(value))
        raise ConfigError(f"cannot sweep {path!r}; choose from beta, kT, N, q, xc.C")


def _number(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None


def _integer(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _flag(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected true/false, got {raw!r}")


def parse_config(text: str) -> DeviceConfig:
    """Parse and validate a device configuration; errors name the offending key."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None

    layers: dict[int, dict[str, str]] = {}
    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        if name.startswith("device.layer."):
            index = name[len("device.layer."):]
            if not index.isdigit():
                raise ConfigError(f"[{name}]: layer index must be a positive integer")
            kind, store = "device.layer", layers.setdefault(int(index), {})
        elif name in VALID_KEYS and name != "device.layer":
            kind, store = name, sections.setdefault(name, {})
        else:
            valid = ", ".join(sorted(k if k != "device.layer" else "device.layer.K" for k in VALID_KEYS))
            raise ConfigError(f"unknown section [{name}]; valid sections: {valid}")
        for key, raw in parser.items(name):
            if key not in VALID_KEYS[kind]:
                valid = ", ".join(sorted(VALID_KEYS[kind]))
                raise ConfigError(f"[{name}] unknown key {key!r}; valid keys: {valid}")
            store[key] = raw
    if not layers:
        raise ConfigError("no [device.layer.K] sections: the device needs at least one layer")

    units_sec = sections.get("units", {})
    system = units_sec.get("system", "scaled").strip().lower()
    if system == "scaled":
        extra = set(units_sec) - {"system"}
        if extra:
            raise ConfigError(f"[units] {sorted(extra)[0]}: only allowed with system = physical")
        units = UnitSystem()
    elif system == "physical":
        if "length_nm" not in units_sec:
            raise ConfigError("[units] length_nm: required for system = physical")
        length = _number("units", "length_nm", units_sec["length_nm"])
        m_perp = _number("units", "m_perp", units_sec.get("m_perp", "1"))
        if not length > 0 or not m_perp > 0:
            raise ConfigError("[units] length_nm and m_perp must be positive")
        units = UnitSystem.physical(length, m_perp)
    else:
        raise ConfigError(f"[units] system: expected 'scaled' or 'physical', got {system!r}")

    stack_layers = []
    for k in sorted(layers):
        sec, vals = f"device.layer.{k}", layers[k]
        if "thickness" not in vals:
            raise ConfigError(f"[{sec}] thickness: required")
        thickness = _number(sec, "thickness", vals["thickness"])
        mass = _number(sec, "mass", vals.get("mass", "1"))
        eps = _number(sec, "eps", vals.get("eps", "1"))
        if not thickness > 0:
            raise ConfigError(f"[{sec}] thickness: must be positive, got {thickness}")
        if not mass > 0:
            raise ConfigError(f"[{sec}] mass: must be positive, got {mass}")
        if not eps > 0:
            raise ConfigError(f"[{sec}] eps: must be positive, got {eps}")
        stack_layers.append(
            Layer(
                thickness=thickness,
                mass=mass,
                eps=eps / units.eps_unit,
                band_offset=units.energy(_number(sec, "band_offset", vals.get("band_offset", "0"))),
                doping=units.volume_density(_number(sec, "doping", vals.get("doping", "0"))),
            )
        )
    total = math.fsum(layer.thickness for layer in stack_layers)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"[device.layer.*] thickness: fractions sum to {total!r}, must sum to 1")
    try:
        stack = LayerStack(tuple(stack_layers))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    b = sections.get("boundary", {})
    phi0 = units.energy(_number("boundary", "phi0", b.get("phi0", "0")))
    phi1 = units.energy(_number("boundary", "phi1", b.get("phi1", "0")))

    p = sections.get("particles", {})
    n_particles = _number("particles", "n", p.get("n", "1"))
    if system == "physical":
        n_particles /= units.sheet_density
    if not n_particles >= 1:
        raise ConfigError(f"[particles] n: must be >= 1 (scaled), got {n_particles}")
    q = _number("particles", "q", p.get("q", "1"))
    if q < 0:
        raise ConfigError(f"[particles] q: must be >= 0, got {q}")

    s = sections.get("statistics", {})
    if "beta" in s and "kt" in s:
        raise ConfigError("[statistics] beta and kt: give one or the other, not both")
    kind = s.get("kind", "fermi" if ("beta" in s or "kt" in s) else "zero").strip().lower()
    scale = units.m_perp * _number("statistics", "scale", s.get("scale", "1"))
    if not scale > 0:
        raise ConfigError(f"[statistics] scale: must be positive, got {scale}")
    if kind == "zero":
        if "beta" in s or "kt" in s:
            raise ConfigError("[statistics] kind = zero conflicts with beta/kt")
        beta = math.inf
    elif kind == "fermi":
        if "beta" in s:
            beta = _number("statistics", "beta", s["beta"]) * units.energy_ev
        elif "kt" in s:
            kt = units.energy(_number("statistics", "kt", s["kt"]))
            beta = 1.0 / kt if kt > 0 else math.nan
        else:
            raise ConfigError("[statistics] kind = fermi needs beta or kt")
        if not (beta > 0 and math.isfinite(beta)):
            raise ConfigError("[statistics] beta/kt: must be positive and finite")
    else:
        raise ConfigError(f"[statistics] kind: expected 'zero' or 'fermi', got {kind!r}")

    x = sections.get("xc", {})
    xkind = x.get("kind", "xalpha" if "c" in x else "none").strip().lower()
    if xkind == "none":
        if "c" in x or "alpha" in x:
            raise ConfigError("[xc] kind = none conflicts with c/alpha")
        xc = None
    elif xkind == "xalpha":
        c = _number("xc", "c", x.get("c", "0"))
        alpha = _number("xc", "alpha", x.get("alpha", str(1.0 / 3.0)))
        try:
            xc = XAlpha(c, alpha)
        except DomainError as exc:
            raise ConfigError(f"[xc] {exc}") from None
    else:
        raise ConfigError(f"[xc] kind: expected 'none' or 'xalpha', got {xkind!r}")

    g = sections.get("grid", {})
    n = _integer("grid", "n", g.get("n", "400"))
    if n < 2:
        raise ConfigError(f"[grid] n: must be >= 2, got {n}")
    if n < len(stack):
        raise ConfigError(f"[grid] n: {n} elements cannot resolve {len(stack)} layers")

    c = sections.get("scf", {})
    damping = _number("scf", "damping", c.get("damping", "0.3"))
    tol_l1 = _number("scf", "tol_l1", c.get("tol_l1", "1e-9"))
    max_iter = _integer("scf", "max_iter", c.get("max_iter", "500"))
    tail_tol = _number("scf", "tail_tol", c.get("tail_tol", "1e-12"))
    adaptive = _flag("scf", "adaptive_damping", c.get("adaptive_damping", "false"))
    if not 0 < damping <= 1:
        raise ConfigError(f"[scf] damping: must lie in (0, 1], got {damping}")
    if not tol_l1 > 0:
        raise ConfigError(f"[scf] tol_l1: must be positive, got {tol_l1}")
    if max_iter < 1:
        raise ConfigError(f"[scf] max_iter: must be >= 1, got {max_iter}")
    if not tail_tol > 0:
        raise ConfigError(f"[scf] tail_tol: must be positive, got {tail_tol}")

    o = sections.get("output", {})
    return DeviceConfig(
        stack=stack,
        phi0=phi0,
        phi1=phi1,
        n_particles=n_particles,
        q=q,
        beta=beta,
        scale=scale,
        xc=xc,
        n=n,
        damping=damping,
        tol_l1=tol_l1,
        max_iter=max_iter,
        tail_tol=tail_tol,
        adaptive_damping=adaptive,
        profile=o.get("profile", "profile.csv").strip(),
        summary=o.get("summary", "summary.json").strip(),
        units=units,
    )


def load_config(path: str | Path) -> DeviceConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)
