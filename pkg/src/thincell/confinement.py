"""Cell geometry: wall-collision rates, velocity limits and the thermal grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

from .errors import InvalidGrid, NonPositiveInput, NonPositiveWavevector

RB85_MASS = 84.911789738 * constants.atomic_mass
TAU_5P32 = 26.2e-9
TAU_4D52 = 84e-9


@dataclass(frozen=True)
class CellConfig:
    """Vapor cell: thickness (m), temperature (K), atomic mass (kg).

    ``two_pi_convention`` multiplies the wall rate by 2 pi. ``wall_floor``
    is the epsilon of the optional floor ``eps * u / (L_z / 2)`` on the
    velocity-resolved wall rate (0 disables it).
    """

    thickness: float
    temperature: float
    atomic_mass: float = RB85_MASS
    two_pi_convention: bool = False
    wall_floor: float = 0.0

    def __post_init__(self):
        if not self.thickness > 0:
            raise NonPositiveInput(f"cell thickness must be > 0, got {self.thickness}")
        if not self.temperature > 0:
            raise NonPositiveInput(f"temperature must be > 0 K, got {self.temperature}")
        if not self.atomic_mass > 0:
            raise NonPositiveInput("atomic mass must be > 0")
        if self.wall_floor < 0:
            raise ValueError("wall_floor must be >= 0")

    @property
    def u(self) -> float:
        return most_probable_speed(self.temperature, self.atomic_mass)

    def replace(self, **changes) -> "CellConfig":
        return replace(self, **changes)


def most_probable_speed(T: float, m: float) -> float:
    """Most probable speed sqrt(2 k_B T / m) in m/s."""
    if T <= 0 or m <= 0:
        raise NonPositiveInput(f"T and m must be positive (got {T}, {m})")
    return math.sqrt(2 * constants.k * T / m)


def wall_rate(cell: CellConfig, v):
    """Wall-collision rate |v| / (L_z / 2) in s^-1 (times 2 pi if configured).

    Accepts scalars or arrays of velocities.
    """
    half = cell.thickness / 2
    speed = np.abs(v)
    if cell.wall_floor:
        speed = np.maximum(speed, cell.wall_floor * cell.u)
    rate = speed / half
    if cell.two_pi_convention:
        rate = 2 * math.pi * rate
    return float(rate) if np.ndim(rate) == 0 else rate


def resonance_velocity(splitting: float, k: float) -> float:
    """Velocity whose Doppler shift k v bridges ``splitting`` (rad/s)."""
    if k <= 0:
        raise NonPositiveWavevector(f"wavevector must be > 0, got {k}")
    return splitting / k


def max_transit_velocity(L_z: float, tau: float) -> float:
    """Largest longitudinal speed that still spends a lifetime ``tau`` in the cell."""
    if L_z <= 0 or tau <= 0:
        raise NonPositiveInput(f"L_z and tau must be positive (got {L_z}, {tau})")
    return L_z / tau


def crossover_thickness(u: float, tau: float) -> float:
    """Thickness at which the wall time (L_z/2)/u equals ``tau``."""
    return 2 * u * tau


@dataclass(frozen=True)
class VelocityGrid:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.points)


def maxwell_boltzmann(v, u):
    """1D thermal density W(v) = exp(-v^2/u^2) / (u sqrt(pi))."""
    return np.exp(-(np.asarray(v) / u) ** 2) / (u * math.sqrt(math.pi))


GAUSS_ORDER = 8


def boltzmann_grid(cell: CellConfig, n_points: int = 2001, span_sigmas: float = 4.0,
                   rule: str = "gauss") -> VelocityGrid:
    """Symmetric quadrature grid on [-span u, span u] with weights w_i W(v_i).

    ``rule="gauss"`` (default) uses composite 8-point Gauss-Legendre panels on
    each half-line separately. The wall rate depends on |v|, which has a kink
    at v = 0; keeping v = 0 as a panel edge makes the integrand smooth on every
    panel. The node count is the multiple of 16 nearest to ``n_points - 1``.
    ``rule="trapezoid"`` gives exactly ``n_points`` equally spaced nodes.

    The weights sum to erf(span) up to quadrature error.
    """
    if n_points < 3:
        raise InvalidGrid(f"n_points must be >= 3, got {n_points}")
    if span_sigmas < 3:
        raise InvalidGrid(f"span must be >= 3 thermal speeds, got {span_sigmas}")
    u = cell.u
    vmax = span_sigmas * u
    if rule == "gauss":
        panels = max(1, round((n_points - 1) / (2 * GAUSS_ORDER)))
        x, w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
        edges = np.linspace(0.0, vmax, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half_width = 0.5 * np.diff(edges)
        pos = (mid[:, None] + half_width[:, None] * x).ravel()
        pos_w = (half_width[:, None] * w).ravel()
        points = np.concatenate([-pos[::-1], pos])
        weights = np.concatenate([pos_w[::-1], pos_w]) * maxwell_boltzmann(points, u)
        return VelocityGrid(points, weights)
    if rule != "trapezoid":
        raise InvalidGrid(f"unknown quadrature rule {rule!r}")
    half = (n_points - 1) // 2
    if n_points % 2:
        # mirror exactly so that +v and -v carry identical weights
        pos = np.linspace(0.0, vmax, half + 1)
        points = np.concatenate([-pos[:0:-1], pos])
    else:
        points = np.linspace(-vmax, vmax, n_points)
        points = 0.5 * (points - points[::-1])
    h = points[1] - points[0]
    weights = h * maxwell_boltzmann(points, u)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return VelocityGrid(points, weights)
